#include "privae/dp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace privae {

std::vector<std::vector<int>> PartitionPlan::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(groups));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[static_cast<std::size_t>(assignment[i])].push_back(
        static_cast<int>(i));
  }
  return out;
}

void PartitionPlan::validate(int batch_size) const {
  if (groups < 1) throw std::invalid_argument("partition: groups must be >= 1");
  if (static_cast<int>(assignment.size()) != batch_size) {
    throw std::invalid_argument("partition: assignment covers " +
                                std::to_string(assignment.size()) +
                                " samples, batch has " +
                                std::to_string(batch_size));
  }
  if (batch_size % groups != 0) {
    throw std::invalid_argument("partition: " + std::to_string(groups) +
                                " groups do not divide batch size " +
                                std::to_string(batch_size));
  }
  std::vector<int> counts(static_cast<std::size_t>(groups), 0);
  for (const int g : assignment) {
    if (g < 0 || g >= groups) {
      throw std::invalid_argument("partition: group index out of range");
    }
    ++counts[static_cast<std::size_t>(g)];
  }
  const int per_group = batch_size / groups;
  for (const int c : counts) {
    if (c != per_group) {
      throw std::invalid_argument("partition: groups are not equal-sized");
    }
  }
}

PartitionPlan partition_batch(int batch_size, int groups, Rng& rng) {
  if (batch_size < 1) {
    throw std::invalid_argument("partition: batch must be nonempty");
  }
  if (groups < 1 || batch_size % groups != 0) {
    throw std::invalid_argument("partition: " + std::to_string(groups) +
                                " groups do not divide batch size " +
                                std::to_string(batch_size));
  }
  std::vector<int> order(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = batch_size - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  const int per_group = batch_size / groups;
  PartitionPlan plan;
  plan.groups = groups;
  plan.assignment.assign(static_cast<std::size_t>(batch_size), 0);
  for (int pos = 0; pos < batch_size; ++pos) {
    plan.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(
        pos)])] = pos / per_group;
  }
  return plan;
}

GradVec clip(const GradVec& g, double c) {
  if (c <= 0.0) throw std::invalid_argument("clip: bound must be positive");
  const double norm = g.norm();
  if (norm <= c) return g;
  // rounding can leave the rescaled norm a hair above c; shave the scale by
  // ulps until it fits, which makes clipping exactly idempotent
  double s = c / norm;
  GradVec out = g * s;
  while (out.norm() > c) {
    s = std::nextafter(s, 0.0);
    out = g * s;
  }
  return out;
}

GradVec clipped_sum(const std::vector<GradVec>& grads, double c) {
  if (grads.empty()) throw std::invalid_argument("clipped_sum: empty batch");
  GradVec acc = clip(grads.front(), c);
  for (std::size_t i = 1; i < grads.size(); ++i) {
    if (grads[i].size() != acc.size()) {
      throw std::invalid_argument("clipped_sum: gradient length mismatch");
    }
    acc += clip(grads[i], c);
  }
  return acc;
}

GradVec gaussian_noise(long n, double std, Rng& rng) {
  GradVec out = GradVec::Zero(n);
  if (std == 0.0) return out;
  for (long i = 0; i < n; ++i) out[i] = std * rng.normal();
  return out;
}

GradVec microagg_gradient(const std::vector<GradVec>& per_sample_grads,
                          double c, double sigma_eps, Rng& noise_rng) {
  GradVec acc = clipped_sum(per_sample_grads, c);
  acc += gaussian_noise(acc.size(), sigma_eps * c, noise_rng);
  return acc / static_cast<double>(per_sample_grads.size());
}

GradVec batchagg_gradient(const GradVec& batch_grad, double c,
                          double sigma_eps, Rng& noise_rng) {
  if (batch_grad.size() == 0) {
    throw std::invalid_argument("batchagg: empty gradient");
  }
  GradVec out = clip(batch_grad, c);
  out += gaussian_noise(out.size(), sigma_eps * c, noise_rng);
  return out;
}

GradVec termwise_gradient(const std::vector<GradVec>& phi_grads,
                          const std::vector<GradVec>& psi_grads,
                          const ClipConfig& clip_cfg, double sigma_prime,
                          Rng& sample_noise_rng, Rng& batch_noise_rng) {
  if (clip_cfg.c1 <= 0.0) {
    throw std::invalid_argument("termwise: c1 must be positive");
  }
  if (clip_cfg.c2 < 0.0) {
    throw std::invalid_argument("termwise: c2 must be >= 0");
  }
  GradVec sample_sum = clipped_sum(phi_grads, clip_cfg.c1);
  sample_sum += gaussian_noise(sample_sum.size(), sigma_prime * clip_cfg.c1,
                               sample_noise_rng);
  GradVec out = sample_sum / static_cast<double>(phi_grads.size());

  if (clip_cfg.c2 > 0.0) {
    if (psi_grads.empty()) {
      throw std::invalid_argument("termwise: c2 > 0 but no partition gradients");
    }
    GradVec batch_sum = clipped_sum(psi_grads, clip_cfg.c2);
    batch_sum += gaussian_noise(batch_sum.size(), sigma_prime * clip_cfg.c2,
                                batch_noise_rng);
    if (batch_sum.size() != out.size()) {
      throw std::invalid_argument("termwise: gradient length mismatch");
    }
    out += batch_sum / static_cast<double>(psi_grads.size());
  }
  return out;
}

void sgd_step(ParamSet& params, const GradVec& g, double eta) {
  GradVec flat = params.flatten();
  if (flat.size() != g.size()) {
    throw std::invalid_argument("sgd_step: gradient has length " +
                                std::to_string(g.size()) + ", parameters " +
                                std::to_string(flat.size()));
  }
  flat -= eta * g;
  params.unflatten(flat);
}

double kappa(double delta, bool batch_branch_active) {
  if (delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("kappa: delta must lie in (0, 1)");
  }
  if (!batch_branch_active) return 1.0;
  return 2.0 * std::sqrt(std::log(delta / 2.0) / std::log(delta));
}

}  // namespace privae
