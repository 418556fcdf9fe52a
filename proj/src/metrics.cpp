#include "privae/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "privae/divergences.hpp"

namespace privae {

double hoyer(const Eigen::VectorXd& y) {
  const long d = y.size();
  if (d < 2) throw std::invalid_argument("hoyer: need at least 2 dimensions");
  const Eigen::VectorXd a = y.cwiseAbs();
  const double amax = a.maxCoeff();
  if (amax == 0.0) throw std::invalid_argument("hoyer: zero vector");
  // The score's endpoints are attained exactly by one-hot vectors (1) and
  // vectors whose entries all share one magnitude (0); return them directly
  // so rounding in the norm ratio cannot blur either endpoint.
  long nonzero = 0;
  bool uniform = true;
  for (long i = 0; i < d; ++i) {
    if (a[i] == 0.0) continue;
    ++nonzero;
    if (a[i] != amax) uniform = false;
  }
  if (nonzero == 1) return 1.0;
  if (uniform && nonzero == d) return 0.0;
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  return (sqrt_d - a.sum() / a.norm()) / (sqrt_d - 1.0);
}

double sparsity(const ad::Mat& latents) {
  const long n = latents.rows(), d = latents.cols();
  if (n < 2 || d < 2) {
    throw std::invalid_argument("sparsity: need at least 2 samples and 2 dims");
  }
  // values are divided by the per-dimension std but not centered; the std
  // itself is the usual population deviation about the column mean
  Eigen::VectorXd sd(d);
  for (long j = 0; j < d; ++j) {
    const double mu = latents.col(j).mean();
    sd[j] = std::sqrt((latents.col(j).array() - mu).square().mean());
  }
  double acc = 0.0;
  Eigen::VectorXd row(d);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < d; ++j) {
      row[j] = sd[j] > 0.0 ? latents(i, j) / sd[j] : 0.0;
    }
    acc += hoyer(row);
  }
  return acc / static_cast<double>(n);
}

ad::Mat normal_matrix(long rows, long cols, Rng& rng) {
  ad::Mat out(rows, cols);
  for (long c = 0; c < cols; ++c) {
    for (long r = 0; r < rows; ++r) out(r, c) = rng.normal();
  }
  return out;
}

double mmd_metric(const ParamSet& params, const ad::Mat& data,
                  const Prior& prior, int n_eval,
                  std::span<const double> scales, Rng& rng) {
  if (n_eval < 2) throw std::invalid_argument("mmd_metric: need n_eval >= 2");
  if (data.cols() < n_eval) {
    throw std::invalid_argument("mmd_metric: dataset has " +
                                std::to_string(data.cols()) +
                                " samples, need " + std::to_string(n_eval));
  }
  EncodeValues enc = encode_values(params, data.leftCols(n_eval));
  ad::Mat eps = normal_matrix(enc.mu.rows(), n_eval, rng);
  ad::Mat zq =
      enc.mu + ((enc.log_var * 0.5).array().exp() * eps.array()).matrix();
  ad::Mat zp = prior.sample_matrix(n_eval, rng);
  return mmd(zq, zp, scales);
}

double loglik_proxy(const ParamSet& params, Likelihood lik, const ad::Mat& data,
                    int draws, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("loglik_proxy: need draws >= 1");
  if (data.cols() < 1) throw std::invalid_argument("loglik_proxy: empty data");
  EncodeValues enc = encode_values(params, data);
  ad::Mat std = (enc.log_var * 0.5).array().exp().matrix();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(data.cols());
  for (int l = 0; l < draws; ++l) {
    ad::Mat eps = normal_matrix(enc.mu.rows(), data.cols(), rng);
    ad::Mat z = enc.mu + std.cwiseProduct(eps);
    acc += reconstruction_loss_values(lik, data, decode_values(params, z));
  }
  return -acc.mean() / static_cast<double>(draws);
}

}  // namespace privae
