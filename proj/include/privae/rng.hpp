#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace privae {

// Deterministic random source. All float conversions are spelled out here so
// that two runs of the same build produce bit-identical streams; the standard
// distributions are implementation-defined and are deliberately not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform in (0, 1], safe as a log argument
  double uniform_pos() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; consumes exactly two uniforms per draw
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // uniform integer in [0, n) via widening multiply (no modulo bias pattern
  // dependence on n)
  int uniform_int(int n) {
    const auto x = static_cast<unsigned __int128>(gen_());
    return static_cast<int>((x * static_cast<unsigned __int128>(n)) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Named substream of a master seed. Streams are independent of each other and
// of the step index, so fixing one stream never perturbs another; per-step
// indices make a run resumable from any step.
inline Rng substream(std::uint64_t master, std::string_view name,
                     std::uint64_t index = 0) {
  std::uint64_t s = detail::splitmix64(master ^ detail::fnv1a(name));
  s = detail::splitmix64(s ^ (0x632be59bd9b4e019ULL * (index + 1)));
  return Rng(s);
}

}  // namespace privae
