#include "privae/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace privae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_normal_pdf(double x, double mu, double var) {
  const double d = x - mu;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

}  // namespace

Prior Prior::standard_normal(int dim) {
  Prior p;
  p.kind = Kind::StandardNormal;
  p.dim = dim;
  p.validate();
  return p;
}

Prior Prior::spike_slab(int dim, double gamma, double sigma0_sq) {
  Prior p;
  p.kind = Kind::SpikeSlab;
  p.dim = dim;
  p.gamma = gamma;
  p.sigma0_sq = sigma0_sq;
  p.validate();
  return p;
}

Prior Prior::gauss_mixture(ad::Mat means, ad::Mat stds,
                           Eigen::VectorXd weights) {
  Prior p;
  p.kind = Kind::GaussMixture;
  p.dim = static_cast<int>(means.rows());
  p.means = std::move(means);
  p.stds = std::move(stds);
  p.weights = std::move(weights);
  p.validate();
  return p;
}

void Prior::validate() const {
  if (dim < 1) throw std::invalid_argument("prior: dimension must be positive");
  switch (kind) {
    case Kind::StandardNormal:
      break;
    case Kind::SpikeSlab:
      if (gamma < 0.0 || gamma > 1.0) {
        throw std::invalid_argument("prior: gamma must lie in [0, 1]");
      }
      if (sigma0_sq <= 0.0) {
        throw std::invalid_argument("prior: sigma0_sq must be positive");
      }
      break;
    case Kind::GaussMixture: {
      const long k = weights.size();
      if (k < 1 || means.cols() != k || stds.cols() != k ||
          means.rows() != dim || stds.rows() != dim) {
        throw std::invalid_argument("prior: inconsistent mixture shapes");
      }
      if (weights.minCoeff() < 0.0) {
        throw std::invalid_argument("prior: mixture weights must be nonnegative");
      }
      if (std::abs(weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("prior: mixture weights must sum to 1");
      }
      if (stds.minCoeff() <= 0.0) {
        throw std::invalid_argument("prior: mixture stds must be positive");
      }
      break;
    }
  }
}

double Prior::log_density(const Eigen::VectorXd& z) const {
  if (z.size() != dim) {
    throw std::invalid_argument("prior log_density: z has dimension " +
                                std::to_string(z.size()) + ", expected " +
                                std::to_string(dim));
  }
  switch (kind) {
    case Kind::StandardNormal: {
      return -0.5 * (dim * kLog2Pi + z.squaredNorm());
    }
    case Kind::SpikeSlab: {
      // per-dimension two-term log-sum-exp; the sigma0_sq spike is sharp, so
      // the shifted form matters
      double total = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double a =
            std::log1p(-gamma) + log_normal_pdf(z[d], 0.0, 1.0);
        const double b = std::log(gamma) + log_normal_pdf(z[d], 0.0, sigma0_sq);
        if (gamma == 0.0) {
          total += a;
        } else if (gamma == 1.0) {
          total += b;
        } else {
          const double m = std::max(a, b);
          total += m + std::log(std::exp(a - m) + std::exp(b - m));
        }
      }
      return total;
    }
    case Kind::GaussMixture: {
      const long k = weights.size();
      Eigen::VectorXd comp(k);
      for (long c = 0; c < k; ++c) {
        double lp = weights[c] > 0.0 ? std::log(weights[c])
                                     : -std::numeric_limits<double>::infinity();
        for (int d = 0; d < dim; ++d) {
          const double s = stds(d, c);
          lp += log_normal_pdf(z[d], means(d, c), s * s);
        }
        comp[c] = lp;
      }
      const double m = comp.maxCoeff();
      return m + std::log((comp.array() - m).exp().sum());
    }
  }
  throw std::logic_error("prior: unknown kind");
}

ad::Var Prior::log_density_graph(ad::Tape& tape, ad::Var z) const {
  const ad::Mat& zv = tape.value(z);
  if (zv.rows() != dim || zv.cols() != 1) {
    throw std::invalid_argument("prior log_density_graph: z has shape " +
                                std::to_string(zv.rows()) + "x" +
                                std::to_string(zv.cols()) + ", expected " +
                                std::to_string(dim) + "x1");
  }
  using namespace ad;
  switch (kind) {
    case Kind::StandardNormal: {
      return sum(square(z)) * -0.5 + (-0.5 * dim * kLog2Pi);
    }
    case Kind::SpikeSlab: {
      Var z2 = square(z);
      // log[(1-gamma) N(z;0,1)]
      Var a = z2 * -0.5 + (std::log1p(-gamma) - 0.5 * kLog2Pi);
      // log[gamma N(z;0,sigma0_sq)]
      Var b = z2 * (-0.5 / sigma0_sq) +
              (std::log(gamma) - 0.5 * (kLog2Pi + std::log(sigma0_sq)));
      if (gamma == 0.0) return sum(a);
      if (gamma == 1.0) return sum(b);
      return sum(logsumexp2(a, b));
    }
    case Kind::GaussMixture: {
      const long k = weights.size();
      std::vector<Var> comp;
      comp.reserve(static_cast<std::size_t>(k));
      for (long c = 0; c < k; ++c) {
        Var diff = z - tape.constant(means.col(c));
        Var prec = tape.constant(
            stds.col(c).array().square().inverse().matrix());
        double log_norm = std::log(weights[c]) - 0.5 * dim * kLog2Pi -
                          stds.col(c).array().log().sum();
        comp.push_back(sum(hadamard(square(diff), prec)) * -0.5 + log_norm);
      }
      // scalar log-sum-exp with a detached shift
      double m = tape.value(comp[0])(0, 0);
      for (long c = 1; c < k; ++c) m = std::max(m, tape.value(comp[c])(0, 0));
      Var acc = exp(comp[0] - m);
      for (long c = 1; c < k; ++c) acc = acc + exp(comp[c] - m);
      return log(acc) + m;
    }
  }
  throw std::logic_error("prior: unknown kind");
}

Eigen::VectorXd Prior::sample(Rng& rng) const {
  Eigen::VectorXd z(dim);
  switch (kind) {
    case Kind::StandardNormal: {
      for (int d = 0; d < dim; ++d) z[d] = rng.normal();
      return z;
    }
    case Kind::SpikeSlab: {
      const double s0 = std::sqrt(sigma0_sq);
      for (int d = 0; d < dim; ++d) {
        const bool spike = rng.uniform() < gamma;
        z[d] = rng.normal() * (spike ? s0 : 1.0);
      }
      return z;
    }
    case Kind::GaussMixture: {
      const double u = rng.uniform();
      long c = 0;
      double cdf = 0.0;
      for (; c < weights.size(); ++c) {
        cdf += weights[c];
        if (u < cdf) break;
      }
      c = std::min(c, weights.size() - 1);
      for (int d = 0; d < dim; ++d) {
        z[d] = means(d, c) + stds(d, c) * rng.normal();
      }
      return z;
    }
  }
  throw std::logic_error("prior: unknown kind");
}

ad::Mat Prior::sample_matrix(int n, Rng& rng) const {
  ad::Mat out(dim, n);
  for (int i = 0; i < n; ++i) out.col(i) = sample(rng);
  return out;
}

}  // namespace privae
