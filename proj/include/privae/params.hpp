#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "privae/autodiff.hpp"

namespace privae {

// Flattened parameter-space vector: the unit of clipping, noising and
// aggregation.
using GradVec = Eigen::VectorXd;

// Named, ordered collection of dense f64 tensors holding all model
// parameters. Order is fixed at construction, which makes flattening
// reproducible.
struct ParamSet {
  struct Entry {
    std::string name;
    ad::Mat value;
  };

  std::vector<Entry> entries;

  long total_size() const;
  const ad::Mat& at(const std::string& name) const;
  ad::Mat& at(const std::string& name);

  // row-major per tensor, tensors in entry order
  GradVec flatten() const;
  // inverse of flatten; throws on length mismatch
  void unflatten(const GradVec& flat);

  // insert every tensor as a tape leaf, fixed entry order
  std::vector<ad::Var> attach(ad::Tape& tape) const;
};

// Flattened gradient of a scalar tape output with respect to the attached
// parameter leaves, in the ParamSet's fixed order.
GradVec gradient(ad::Tape& tape, ad::Var loss,
                 std::span<const ad::Var> param_vars);

// Builds a per-sample loss graph and runs one independent backward pass per
// sample. Gradient i depends only on sample i by construction.
using SampleLossFn =
    std::function<ad::Var(ad::Tape&, std::span<const ad::Var>, int)>;
std::vector<GradVec> per_sample_gradients(const ParamSet& params,
                                          const SampleLossFn& loss_fn,
                                          int batch_size);

// Checkpoint file: magic "PRIVAE01", u32 tensor count, then per tensor
// u32 name length + name bytes, u32 rank, u64 extents, row-major f64
// payload (little-endian).
void save_checkpoint(const std::string& path, const ParamSet& params);
ParamSet load_checkpoint(const std::string& path);

}  // namespace privae
