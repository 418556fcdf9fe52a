#include "privae/divergences.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace privae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// mean over all column pairs of the Cauchy kernel
double mean_kernel(const ad::Mat& a, const ad::Mat& b,
                   std::span<const double> scales) {
  double acc = 0.0;
  for (long i = 0; i < a.cols(); ++i) {
    for (long j = 0; j < b.cols(); ++j) {
      for (long d = 0; d < a.rows(); ++d) {
        const double dd = a(d, i) - b(d, j);
        const double dd2 = dd * dd;
        for (const double s : scales) acc += s / (s + dd2);
      }
    }
  }
  return acc / (static_cast<double>(a.cols()) * static_cast<double>(b.cols()));
}

// graph analogue of mean_kernel for one on-tape side
ad::Var mean_kernel_graph(ad::Tape& tape, ad::Var a, ad::Var b,
                          std::span<const double> scales) {
  using namespace ad;
  const long pairs = tape.value(a).cols() * tape.value(b).cols();
  Var d2 = square(pairwise_diff(a, b));
  Var acc;
  bool first = true;
  for (const double s : scales) {
    Var term = sum(reciprocal(d2 + s) * s);
    acc = first ? term : acc + term;
    first = false;
  }
  return acc * (1.0 / static_cast<double>(pairs));
}

// strict weak order on (cols, coefficients); used to pick a canonical
// argument order so mmd sums in the same fp order under argument swap
bool mmd_before(const ad::Mat& a, const ad::Mat& b) {
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  for (long i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return a.data()[i] < b.data()[i];
  }
  return false;
}

void check_mmd_args(const ad::Mat& zq, const ad::Mat& zp,
                    std::span<const double> scales) {
  if (zq.cols() < 1 || zp.cols() < 1) {
    throw std::invalid_argument("mmd: empty sample set");
  }
  if (zq.rows() != zp.rows()) {
    throw std::invalid_argument("mmd: dimension mismatch (" +
                                std::to_string(zq.rows()) + " vs " +
                                std::to_string(zp.rows()) + ")");
  }
  if (scales.empty()) {
    throw std::invalid_argument("mmd: need at least one kernel scale");
  }
}

}  // namespace

void DivergenceSpec::validate() const {
  if (alpha < 0.0) {
    throw std::invalid_argument("divergence: alpha must be >= 0");
  }
  if (kind == Kind::DimwiseMMD) {
    if (scales.empty()) {
      throw std::invalid_argument("divergence: mmd needs kernel scales");
    }
    for (const double s : scales) {
      if (s <= 0.0) {
        throw std::invalid_argument(
            "divergence: kernel scales must be positive");
      }
    }
  }
}

double cauchy_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     std::span<const double> scales) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("cauchy_kernel: dimension mismatch (" +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  double acc = 0.0;
  for (long d = 0; d < x.size(); ++d) {
    const double dd2 = (x[d] - y[d]) * (x[d] - y[d]);
    for (const double s : scales) acc += s / (s + dd2);
  }
  return acc;
}

double mmd(const ad::Mat& zq, const ad::Mat& zp,
           std::span<const double> scales) {
  check_mmd_args(zq, zp, scales);
  const bool swapped = mmd_before(zp, zq);
  const ad::Mat& a = swapped ? zp : zq;
  const ad::Mat& b = swapped ? zq : zp;
  return mean_kernel(a, a, scales) - 2.0 * mean_kernel(a, b, scales) +
         mean_kernel(b, b, scales);
}

double reverse_kl_estimate(const Prior& prior, const ad::Mat& mu,
                           const ad::Mat& log_var, const ad::Mat& z_prior,
                           bool literal) {
  const long comps = mu.cols();
  const long draws = z_prior.cols();
  if (comps < 1) throw std::invalid_argument("reverse_kl: empty partition");
  if (draws < 1) throw std::invalid_argument("reverse_kl: no prior draws");
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols() ||
      mu.rows() != z_prior.rows()) {
    throw std::invalid_argument("reverse_kl: inconsistent shapes");
  }
  const long d = mu.rows();

  double log_p_sum = 0.0;
  double lse_sum = 0.0;
  Eigen::VectorXd a(comps);
  for (long j = 0; j < draws; ++j) {
    log_p_sum += prior.log_density(z_prior.col(j));
    for (long i = 0; i < comps; ++i) {
      double quad = 0.0;
      for (long r = 0; r < d; ++r) {
        const double diff = z_prior(r, j) - mu(r, i);
        quad += diff * diff * std::exp(-log_var(r, i)) + log_var(r, i);
      }
      a[i] = -0.5 * (quad + d * kLog2Pi);
    }
    const double m = a.maxCoeff();
    lse_sum += m + std::log((a.array() - m).exp().sum());
  }
  if (literal) return log_p_sum - lse_sum;
  return (log_p_sum - lse_sum) / static_cast<double>(draws) +
         std::log(static_cast<double>(comps));
}

ad::Var mmd_graph(ad::Tape& tape, ad::Var zq, const ad::Mat& z_prior,
                  std::span<const double> scales) {
  check_mmd_args(tape.value(zq), z_prior, scales);
  using namespace ad;
  Var zp = tape.constant(z_prior);
  Var kqq = mean_kernel_graph(tape, zq, zq, scales);
  Var kqp = mean_kernel_graph(tape, zq, zp, scales);
  const double kpp = mean_kernel(z_prior, z_prior, scales);
  return kqq - kqp * 2.0 + kpp;
}

ad::Var reverse_kl_graph(ad::Tape& tape, const Prior& prior,
                         const EncodeGraph& enc, const ad::Mat& z_prior,
                         bool literal) {
  using namespace ad;
  const ad::Mat& mu_v = tape.value(enc.mu);
  const long comps = mu_v.cols();
  const long draws = z_prior.cols();
  if (comps < 1) throw std::invalid_argument("reverse_kl: empty partition");
  if (draws < 1) throw std::invalid_argument("reverse_kl: no prior draws");
  if (mu_v.rows() != z_prior.rows()) {
    throw std::invalid_argument("reverse_kl: inconsistent shapes");
  }
  const double d = static_cast<double>(mu_v.rows());

  Var zc = tape.constant(z_prior);
  std::vector<Var> rows;
  rows.reserve(static_cast<std::size_t>(comps));
  for (long i = 0; i < comps; ++i) {
    Var mu_i = col(enc.mu, i);
    Var lv_i = col(enc.log_var, i);
    Var diff = add_colvec(zc, -mu_i);                          // D x J
    Var quad = mul_colvec(square(diff), exp(-lv_i));           // D x J
    Var srow = add_colvec(colwise_sum(quad), sum(lv_i));       // 1 x J
    rows.push_back(srow * -0.5 + (-0.5 * d * kLog2Pi));
  }
  Var a = concat_rows(rows);            // comps x draws
  Var lse_sum = sum(logsumexp_rows(a));  // sums over draws

  double log_p_sum = 0.0;
  for (long j = 0; j < draws; ++j) {
    log_p_sum += prior.log_density(z_prior.col(j));
  }

  if (literal) return log_p_sum - lse_sum;
  return (log_p_sum - lse_sum) * (1.0 / static_cast<double>(draws)) +
         std::log(static_cast<double>(comps));
}

ad::Var psi_loss(ad::Tape& tape, const VaeVars& v, const DivergenceSpec& spec,
                 const Prior& prior, const ad::Mat& xs, const ad::Mat& eps,
                 const ad::Mat& z_prior) {
  spec.validate();
  if (spec.kind == DivergenceSpec::Kind::None) {
    throw std::invalid_argument("psi: no divergence configured");
  }
  if (xs.cols() < 1) throw std::invalid_argument("psi: empty partition");

  EncodeGraph enc = encode(tape, v, tape.constant(xs));
  switch (spec.kind) {
    case DivergenceSpec::Kind::DimwiseMMD: {
      if (eps.rows() != tape.value(enc.mu).rows() || eps.cols() != xs.cols()) {
        throw std::invalid_argument("psi: eps must be latent_dim x |s|");
      }
      ad::Var zq = reparameterize(tape, enc, tape.constant(eps));
      return mmd_graph(tape, zq, z_prior, spec.scales) * spec.alpha;
    }
    case DivergenceSpec::Kind::ReverseKL:
      return reverse_kl_graph(tape, prior, enc, z_prior,
                              spec.literal_reverse_kl) *
             spec.alpha;
    case DivergenceSpec::Kind::None:
      break;
  }
  throw std::logic_error("psi: unknown divergence kind");
}

}  // namespace privae
