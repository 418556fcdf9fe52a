#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "privae/autodiff.hpp"

namespace privae {

// In-memory dataset: one sample per row, optional integer labels.
struct Dataset {
  ad::Mat rows;                      // n x dim
  std::vector<std::int64_t> labels;  // empty or length n

  long n() const { return rows.rows(); }
  long dim() const { return rows.cols(); }
  bool has_labels() const { return !labels.empty(); }

  // samples as columns (model-facing layout)
  ad::Mat columns() const { return rows.transpose(); }
};

// Spiral-arm point cloud: per arm k, radius r ~ N(1, radial_std^2) and angle
// 2*pi*k/arms + N(0, tangential_std^2) + rate*(r - 1). Labels are arm
// indices; points are grouped by arm. n must be divisible by arms.
Dataset pinwheel(int n, int arms, double radial_std, double tangential_std,
                 double rate, std::uint64_t seed);

// Binary side x side images of one random shape each (filled rectangle,
// horizontal bar, vertical bar); labels are the shape class in {0, 1, 2}.
Dataset synth_images(int n, int side, std::uint64_t seed);

// Binary dataset file: magic "PVAEDS01", little-endian u64 n, u64 dim,
// u8 has_labels, n*dim f64 row-major payload, then n i64 labels if present.
// Round-trips are bit-exact; errors name the byte offset.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace privae
