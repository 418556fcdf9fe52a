#include "privae/dataio.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "privae/rng.hpp"

namespace privae {

namespace {

constexpr char kMagic[8] = {'P', 'V', 'A', 'E', 'D', 'S', '0', '1'};
constexpr double kTwoPi = 6.283185307179586477;

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<std::uint64_t>(v));
}

void put_i64(std::ostream& os, std::int64_t v) {
  put_u64(os, static_cast<std::uint64_t>(v));
}

[[noreturn]] void fail_at(const std::string& path, std::uint64_t offset,
                          const std::string& what) {
  throw std::runtime_error(path + ": " + what + " (byte offset " +
                           std::to_string(offset) + ")");
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
  char b[8];
  const auto off = static_cast<std::uint64_t>(is.tellg());
  if (!is.read(b, 8)) fail_at(path, off, "truncated file, expected 8 bytes");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
         << (8 * i);
  }
  return v;
}

double get_f64(std::istream& is, const std::string& path) {
  return std::bit_cast<double>(get_u64(is, path));
}

std::int64_t get_i64(std::istream& is, const std::string& path) {
  return static_cast<std::int64_t>(get_u64(is, path));
}

}  // namespace

Dataset pinwheel(int n, int arms, double radial_std, double tangential_std,
                 double rate, std::uint64_t seed) {
  if (arms < 1) throw std::invalid_argument("pinwheel: need at least one arm");
  if (n < 0 || n % arms != 0) {
    throw std::invalid_argument("pinwheel: " + std::to_string(arms) +
                                " arms do not divide n = " + std::to_string(n));
  }
  Rng rng(seed);
  Dataset ds;
  ds.rows.resize(n, 2);
  ds.labels.resize(static_cast<std::size_t>(n));
  const int per_arm = arms > 0 ? n / arms : 0;
  int i = 0;
  for (int k = 0; k < arms; ++k) {
    const double base = kTwoPi * k / arms;
    for (int j = 0; j < per_arm; ++j, ++i) {
      const double r = 1.0 + radial_std * rng.normal();
      const double theta =
          base + tangential_std * rng.normal() + rate * (r - 1.0);
      ds.rows(i, 0) = r * std::cos(theta);
      ds.rows(i, 1) = r * std::sin(theta);
      ds.labels[static_cast<std::size_t>(i)] = k;
    }
  }
  return ds;
}

Dataset synth_images(int n, int side, std::uint64_t seed) {
  if (side < 4) throw std::invalid_argument("synth_images: side must be >= 4");
  if (n < 0) throw std::invalid_argument("synth_images: n must be >= 0");
  Rng rng(seed);
  Dataset ds;
  ds.rows = ad::Mat::Zero(n, static_cast<long>(side) * side);
  ds.labels.resize(static_cast<std::size_t>(n));
  auto set_pixel = [&](int img, int r, int c) {
    ds.rows(img, static_cast<long>(r) * side + c) = 1.0;
  };
  for (int img = 0; img < n; ++img) {
    const int cls = rng.uniform_int(3);
    ds.labels[static_cast<std::size_t>(img)] = cls;
    switch (cls) {
      case 0: {  // filled rectangle, extent >= 2 in both directions
        const int r0 = rng.uniform_int(side - 1);
        const int h = 2 + rng.uniform_int(side - r0 - 1);
        const int c0 = rng.uniform_int(side - 1);
        const int w = 2 + rng.uniform_int(side - c0 - 1);
        for (int r = r0; r < r0 + h; ++r) {
          for (int c = c0; c < c0 + w; ++c) set_pixel(img, r, c);
        }
        break;
      }
      case 1: {  // horizontal bar, thickness 1 or 2
        const int t = 1 + rng.uniform_int(2);
        const int r0 = rng.uniform_int(side - t + 1);
        for (int r = r0; r < r0 + t; ++r) {
          for (int c = 0; c < side; ++c) set_pixel(img, r, c);
        }
        break;
      }
      default: {  // vertical bar
        const int t = 1 + rng.uniform_int(2);
        const int c0 = rng.uniform_int(side - t + 1);
        for (int c = c0; c < c0 + t; ++c) {
          for (int r = 0; r < side; ++r) set_pixel(img, r, c);
        }
        break;
      }
    }
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  if (ds.has_labels() &&
      static_cast<long>(ds.labels.size()) != ds.n()) {
    throw std::invalid_argument("save_dataset: label count mismatch");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(kMagic, 8);
  put_u64(os, static_cast<std::uint64_t>(ds.n()));
  put_u64(os, static_cast<std::uint64_t>(ds.dim()));
  const char has = ds.has_labels() ? 1 : 0;
  os.write(&has, 1);
  for (long r = 0; r < ds.n(); ++r) {
    for (long c = 0; c < ds.dim(); ++c) put_f64(os, ds.rows(r, c));
  }
  for (const std::int64_t l : ds.labels) put_i64(os, l);
  if (!os) throw std::runtime_error(path + ": write failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  if (!is.read(magic, 8)) fail_at(path, 0, "truncated file, no magic");
  for (int i = 0; i < 8; ++i) {
    if (magic[i] != kMagic[i]) fail_at(path, 0, "bad magic, not a dataset file");
  }
  const std::uint64_t n = get_u64(is, path);
  const std::uint64_t dim = get_u64(is, path);
  char has = 0;
  if (!is.read(&has, 1)) fail_at(path, 24, "truncated file, no label flag");
  if (has != 0 && has != 1) fail_at(path, 24, "label flag must be 0 or 1");
  constexpr std::uint64_t kMaxElems = 1ULL << 32;
  if (n > kMaxElems || dim > kMaxElems || (dim != 0 && n > kMaxElems / dim)) {
    fail_at(path, 8, "implausible extents " + std::to_string(n) + " x " +
                         std::to_string(dim));
  }
  Dataset ds;
  ds.rows.resize(static_cast<long>(n), static_cast<long>(dim));
  for (std::uint64_t r = 0; r < n; ++r) {
    for (std::uint64_t c = 0; c < dim; ++c) {
      ds.rows(static_cast<long>(r), static_cast<long>(c)) = get_f64(is, path);
    }
  }
  if (has) {
    ds.labels.resize(n);
    for (std::uint64_t r = 0; r < n; ++r) ds.labels[r] = get_i64(is, path);
  }
  return ds;
}

}  // namespace privae
