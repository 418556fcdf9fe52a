#pragma once

#include <Eigen/Dense>
#include <span>

#include "privae/priors.hpp"
#include "privae/vae.hpp"

namespace privae {

// Hoyer(y) = (sqrt(d) - ||y||_1/||y||_2) / (sqrt(d) - 1): 0 for a fully dense
// vector (all equal magnitude), 1 for a one-hot vector. Needs d >= 2 and a
// nonzero y.
double hoyer(const Eigen::VectorXd& y);

// Mean Hoyer over the rows of an n x D latent matrix after dividing each
// column by its per-dimension standard deviation over the dataset (no
// centering; dead dimensions standardize to 0). Latents are encoder means.
double sparsity(const ad::Mat& latents);

// MMD^2 between n_eval encoded latents (one reparametrized draw per sample,
// first n_eval dataset columns) and n_eval prior draws. Eps draws come first
// on the rng, then the prior draws.
double mmd_metric(const ParamSet& params, const ad::Mat& data,
                  const Prior& prior, int n_eval,
                  std::span<const double> scales, Rng& rng);

// Mean over the dataset of minus the reconstruction loss, averaging the loss
// over `draws` reparametrized samples per input.
double loglik_proxy(const ParamSet& params, Likelihood lik, const ad::Mat& data,
                    int draws, Rng& rng);

// rows x cols standard-normal draws, filled column by column
ad::Mat normal_matrix(long rows, long cols, Rng& rng);

}  // namespace privae
