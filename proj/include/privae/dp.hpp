#pragma once

#include <vector>

#include "privae/params.hpp"
#include "privae/rng.hpp"

namespace privae {

// Clip bounds for the aggregation schemes. c is the single bound used by the
// micro/batch baselines; c1/c2 are the sample-wise and batch-wise bounds of
// the term-wise scheme (c2 = 0 disables the batch-wise branch).
struct ClipConfig {
  double c = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

enum class AggregationMode { MicroAgg, BatchAgg, TermWise };

// Disjoint equal-size grouping of a batch: shuffle, then chunk into `groups`
// pieces of batch_size/groups samples each.
struct PartitionPlan {
  int groups = 0;
  std::vector<int> assignment;  // sample index -> group in [0, groups)

  std::vector<std::vector<int>> members() const;
  void validate(int batch_size) const;
};

PartitionPlan partition_batch(int batch_size, int groups, Rng& rng);

// g * min(1, c / ||g||_2); zero vector maps to itself
GradVec clip(const GradVec& g, double c);

// sum_i clip(g_i, c) — the pre-noise aggregate the noise has to cover
GradVec clipped_sum(const std::vector<GradVec>& grads, double c);

// n i.i.d. N(0, std^2) entries; std = 0 yields zeros without consuming rng
GradVec gaussian_noise(long n, double std, Rng& rng);

// (1/B) * (sum_i clip(g_i, c) + n), n ~ N(0, (sigma_eps*c)^2 I)
GradVec microagg_gradient(const std::vector<GradVec>& per_sample_grads,
                          double c, double sigma_eps, Rng& noise_rng);

// clip(g_batch, c) + n, n ~ N(0, (sigma_eps*c)^2 I) — no 1/B reduction
GradVec batchagg_gradient(const GradVec& batch_grad, double c,
                          double sigma_eps, Rng& noise_rng);

// g~ = (1/B)(sum_i clip(g_phi_i, c1) + n1) + (1/b)(sum_j clip(g_psi_j, c2) + n2)
// n1 ~ N(0, (sigma_prime*c1)^2 I), n2 ~ N(0, (sigma_prime*c2)^2 I), drawn from
// separate streams. The batch-wise branch is skipped when c2 = 0.
GradVec termwise_gradient(const std::vector<GradVec>& phi_grads,
                          const std::vector<GradVec>& psi_grads,
                          const ClipConfig& clip_cfg, double sigma_prime,
                          Rng& sample_noise_rng, Rng& batch_noise_rng);

// theta <- theta - eta * g, elementwise over the flattened parameters
void sgd_step(ParamSet& params, const GradVec& g, double eta);

// Noise inflation turning a (eps, delta) scale into the per-branch
// (eps/2, delta/2) scale: 2*sqrt(ln(delta/2)/ln(delta)) when the batch-wise
// branch is active, 1 otherwise.
double kappa(double delta, bool batch_branch_active = true);

}  // namespace privae
