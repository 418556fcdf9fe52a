#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "privae/divergences.hpp"
#include "privae/dp.hpp"
#include "privae/params.hpp"
#include "privae/priors.hpp"
#include "privae/rng.hpp"
#include "privae/vae.hpp"

namespace privae {

// Model-side ingredients of the loss; the data batch and the random draws are
// passed separately so callers control and replay every source of randomness.
struct ObjectiveContext {
  Likelihood likelihood = Likelihood::Bernoulli;
  Prior prior;
  DivergenceSpec divergence;
  double beta = 1.0;
};

// All random draws one training step consumes. eps[i] holds the latent_dim x L
// reparametrization draws for batch slot i; slots keep their draws when the
// sample occupying them changes, which is what sensitivity measurements need.
struct StepRandomness {
  std::vector<ad::Mat> eps;           // per slot: latent_dim x L
  PartitionPlan plan;                 // term-wise grouping (empty otherwise)
  std::vector<ad::Mat> prior_draws;   // per group: latent_dim x |group|
  ad::Mat batch_prior_draws;          // latent_dim x B (whole-batch psi)
};

// Draws eps always (standard normal), the plan when groups > 1 is requested,
// and draws from `prior` when with_prior_draws is set. Consumption order: eps
// slot by slot (columns in draw order), then the partition, then group prior
// draws, then whole-batch prior draws.
StepRandomness draw_step_randomness(Rng& rng, const Prior& prior,
                                    int batch_size, int draws, int groups,
                                    bool with_prior_draws);

// latent_dim x B matrix of each slot's first eps column (the draw shared with
// the batch-term latents).
ad::Mat first_draws(const std::vector<ad::Mat>& eps);

// Forward values of the loss pieces, averaged over the batch, for run logs.
struct PhiBatchStats {
  double rec_mean = 0.0;
  double kld_mean = 0.0;
};

// Per-sample gradients of phi(x_i). xs is input_dim x B.
std::vector<GradVec> phi_gradients(const ParamSet& params,
                                   const ObjectiveContext& ctx,
                                   const ad::Mat& xs,
                                   const std::vector<ad::Mat>& eps,
                                   PhiBatchStats* stats = nullptr);

// Per-sample gradients of phi(x_i) + psi(batch): every sample's loss shares
// the same batch term, so one swapped sample moves all B gradients at once.
std::vector<GradVec> phi_plus_batch_psi_gradients(
    const ParamSet& params, const ObjectiveContext& ctx, const ad::Mat& xs,
    const std::vector<ad::Mat>& eps, const ad::Mat& batch_prior_draws,
    PhiBatchStats* stats = nullptr, double* psi_value = nullptr);

// Gradient of psi(batch) alone.
GradVec psi_batch_gradient(const ParamSet& params, const ObjectiveContext& ctx,
                           const ad::Mat& xs, const ad::Mat& eps_first,
                           const ad::Mat& prior_draws,
                           double* psi_value = nullptr);

// Per-group gradients of psi(group), in group order.
std::vector<GradVec> psi_partition_gradients(
    const ParamSet& params, const ObjectiveContext& ctx, const ad::Mat& xs,
    const ad::Mat& eps_first, const PartitionPlan& plan,
    const std::vector<ad::Mat>& prior_draws, double* psi_mean = nullptr);

// Gradient of (1/B) sum_i phi(x_i) [+ psi(batch) when batch_prior_draws is
// non-null and a divergence is configured] on a single graph.
GradVec batch_loss_gradient(const ParamSet& params, const ObjectiveContext& ctx,
                            const ad::Mat& xs, const std::vector<ad::Mat>& eps,
                            const ad::Mat* batch_prior_draws,
                            PhiBatchStats* stats = nullptr,
                            double* psi_value = nullptr);

}  // namespace privae
