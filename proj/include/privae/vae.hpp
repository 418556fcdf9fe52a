#pragma once

#include <Eigen/Dense>
#include <span>

#include "privae/autodiff.hpp"
#include "privae/params.hpp"
#include "privae/priors.hpp"
#include "privae/rng.hpp"

namespace privae {

enum class Likelihood { Bernoulli, Gaussian };

// Two-hidden-layer tanh MLPs for encoder and decoder. The encoder ends in two
// linear heads (mu, log_var); the decoder ends in a linear output read as
// Bernoulli logits or a Gaussian mean depending on the likelihood.
struct VaeArch {
  int input_dim = 0;
  int latent_dim = 0;
  int hidden1 = 64;
  int hidden2 = 64;
  Likelihood likelihood = Likelihood::Bernoulli;
};

// Weights uniform in +-sqrt(6/fan_in), biases zero, filled row-major from rng
// so initialization is reproducible. Entry order is fixed: enc.W1, enc.b1,
// enc.W2, enc.b2, enc.Wmu, enc.bmu, enc.Wlv, enc.blv, dec.W1, dec.b1,
// dec.W2, dec.b2, dec.Wout, dec.bout. The decoder mirrors the encoder's
// hidden widths (hidden2 first).
ParamSet init_vae_params(const VaeArch& arch, Rng& rng);

// Recover the architecture from parameter shapes (checkpoint loading).
VaeArch arch_from_params(const ParamSet& params, Likelihood likelihood);

// Handles to the parameter leaves of one tape, in init_vae_params order.
struct VaeVars {
  ad::Var enc_w1, enc_b1, enc_w2, enc_b2, enc_wmu, enc_bmu, enc_wlv, enc_blv;
  ad::Var dec_w1, dec_b1, dec_w2, dec_b2, dec_wout, dec_bout;

  static VaeVars from(std::span<const ad::Var> vars);
};

struct EncodeGraph {
  ad::Var mu;       // latent_dim x n
  ad::Var log_var;  // latent_dim x n, clamped to [-10, 10]
};

// --- differentiable forward passes (x, z may have several columns) ---------

EncodeGraph encode(ad::Tape& tape, const VaeVars& v, ad::Var x);

// z = mu + exp(log_var / 2) .* eps; gradient flows through mu and log_var only
ad::Var reparameterize(ad::Tape& tape, const EncodeGraph& enc, ad::Var eps);

// raw decoder output: Bernoulli logits or Gaussian mean
ad::Var decode(ad::Tape& tape, const VaeVars& v, ad::Var z);

// negative log-likelihood summed over all entries of x:
//   Bernoulli: sum softplus(t) - x .* t   (t = logits)
//   Gaussian:  0.5 * ||x - out||^2        (unit variance, constant dropped)
ad::Var reconstruction_loss(ad::Tape& tape, Likelihood lik, ad::Var x,
                            ad::Var dec_out);

// single-draw Monte-Carlo KL term: log q(z|x) - log p(z), z of shape Dx1
ad::Var kld_term(ad::Tape& tape, const EncodeGraph& enc, ad::Var z,
                 const Prior& prior);

// Sample-wise objective for one input column x (input_dim x 1):
//   phi = (1/L) sum_l rec(x, decode(z_l)) + beta * (log q(z_1|x) - log p(z_1))
// with z_l reparametrized from eps column l. eps is latent_dim x L and is
// treated as a constant, so the caller controls all randomness. rec_out /
// kld_out receive the forward values of the two terms (kld_out stays 0 when
// beta = 0, where the term is not built).
ad::Var phi_loss(ad::Tape& tape, const VaeVars& v, Likelihood lik,
                 const Prior& prior, double beta, const ad::Mat& x,
                 const ad::Mat& eps, double* rec_out = nullptr,
                 double* kld_out = nullptr);

// --- plain forward passes (no tape), for evaluation ------------------------

struct EncodeValues {
  ad::Mat mu;       // latent_dim x n
  ad::Mat log_var;  // latent_dim x n
};

EncodeValues encode_values(const ParamSet& params, const ad::Mat& x);
ad::Mat decode_values(const ParamSet& params, const ad::Mat& z);

// per-column reconstruction loss, same formulas as the graph version
Eigen::VectorXd reconstruction_loss_values(Likelihood lik, const ad::Mat& x,
                                           const ad::Mat& dec_out);

// Draw n latents from the prior and decode. Bernoulli outputs are sigmoid
// means in [0, 1]; Gaussian outputs are the raw decoder means.
ad::Mat generate(const ParamSet& params, Likelihood lik, const Prior& prior,
                 int n, Rng& rng);

}  // namespace privae
