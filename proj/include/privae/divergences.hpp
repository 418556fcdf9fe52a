#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "privae/autodiff.hpp"
#include "privae/priors.hpp"
#include "privae/vae.hpp"

namespace privae {

// Batch-wise regularizer psi(s) = alpha * D(q(z), p(z)) over a sample group.
struct DivergenceSpec {
  enum class Kind { None, DimwiseMMD, ReverseKL };

  Kind kind = Kind::None;
  double alpha = 0.0;
  std::vector<double> scales;  // Cauchy kernel scales (DimwiseMMD)

  // Reverse KL normally averages over draws and uses the mixture mean over
  // components; this switch drops both factors (plain sums) for comparison.
  bool literal_reverse_kl = false;

  void validate() const;
};

// k(x, y) = sum_d sum_l s_l / (s_l + (x_d - y_d)^2)
double cauchy_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     std::span<const double> scales);

// Biased V-statistic MMD^2 between column sets zq (D x m) and zp (D x n):
// mean k(zq, zq) - 2 mean k(zq, zp) + mean k(zp, zp). Symmetric, >= -1e-12.
double mmd(const ad::Mat& zq, const ad::Mat& zp,
           std::span<const double> scales);

// Monte-Carlo estimate of KL(p || q) with q the aggregate posterior over the
// encoder outputs (columns of mu / log_var) and z_prior the p-draws:
//   (1/J) sum_j [ log p(z_j) - log((1/I) sum_i q(z_j | x_i)) ]
// The inner sum goes through log-sum-exp.
double reverse_kl_estimate(const Prior& prior, const ad::Mat& mu,
                           const ad::Mat& log_var, const ad::Mat& z_prior,
                           bool literal = false);

// --- graph builders ---------------------------------------------------------

// MMD^2 with zq on the tape and constant prior draws.
ad::Var mmd_graph(ad::Tape& tape, ad::Var zq, const ad::Mat& z_prior,
                  std::span<const double> scales);

// Reverse-KL estimate with encoder outputs on the tape; gradient flows through
// the mixture term (the p-draws are constants).
ad::Var reverse_kl_graph(ad::Tape& tape, const Prior& prior,
                         const EncodeGraph& enc, const ad::Mat& z_prior,
                         bool literal = false);

// psi(s) for one partition: encodes xs (input_dim x |s|), then
//   DimwiseMMD: alpha * mmd(reparametrized latents, z_prior)
//   ReverseKL:  alpha * reverse_kl_estimate
// eps (latent_dim x |s|, one draw per sample) and z_prior are constants, so
// the caller controls all randomness. Kind::None is an error.
ad::Var psi_loss(ad::Tape& tape, const VaeVars& v, const DivergenceSpec& spec,
                 const Prior& prior, const ad::Mat& xs, const ad::Mat& eps,
                 const ad::Mat& z_prior);

}  // namespace privae
