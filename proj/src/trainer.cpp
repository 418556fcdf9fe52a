#include "privae/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "privae/accountant.hpp"
#include "privae/rng.hpp"

namespace privae {

NoisePlan make_noise_plan(const RunConfig& cfg, long total_steps, double q) {
  NoisePlan plan;
  if (!cfg.is_private() || total_steps == 0) return plan;
  plan.sigma_eps = sigma_for_budget(cfg.epsilon, cfg.delta, q, total_steps,
                                    cfg.accountant_const);
  plan.kappa = cfg.mode == RunConfig::Mode::TermWise
                   ? kappa(cfg.delta, cfg.batch_branch_active())
                   : 1.0;
  plan.sigma_prime = plan.kappa * plan.sigma_eps;
  const double c_ref = cfg.clip.c > 0.0 ? cfg.clip.c : cfg.clip.c1;
  if (c_ref > 0.0) {
    plan.microagg_effective = microagg_noise_scale(c_ref, plan.sigma_eps);
  }
  if (cfg.clip.c1 > 0.0) {
    plan.termwise_effective = termwise_noise_scale(
        cfg.clip.c1, cfg.clip.c2, cfg.batch_size, cfg.groups, plan.sigma_eps,
        kappa(cfg.delta, cfg.batch_branch_active()));
  }
  return plan;
}

Trainer::Trainer(const RunConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), data_(cfg.make_dataset()) {
  if (data_.n() < cfg_.batch_size) {
    throw ConfigError("train: dataset has " + std::to_string(data_.n()) +
                      " samples, fewer than batch_size = " +
                      std::to_string(cfg_.batch_size));
  }
  columns_ = data_.columns();
  ctx_.likelihood = cfg_.likelihood;
  ctx_.prior = cfg_.make_prior();
  ctx_.divergence = cfg_.divergence;
  ctx_.beta = cfg_.beta;

  Rng init_rng = substream(seed_, "init");
  params_ = init_vae_params(cfg_.make_arch(data_.dim()), init_rng);

  const long n = data_.n();
  steps_per_epoch_ = (n + cfg_.batch_size - 1) / cfg_.batch_size;
  total_steps_ = static_cast<long>(cfg_.epochs) * steps_per_epoch_;
  q_ = static_cast<double>(cfg_.batch_size) / static_cast<double>(n);
  noise_ = make_noise_plan(cfg_, total_steps_, q_);
}

void Trainer::restore(const ParamSet& params, long next_step) {
  if (next_step < 0 || next_step > total_steps_) {
    throw std::invalid_argument("restore: step " + std::to_string(next_step) +
                                " outside [0, " + std::to_string(total_steps_) +
                                "]");
  }
  if (params.total_size() != params_.total_size()) {
    throw std::invalid_argument(
        "restore: checkpoint has " + std::to_string(params.total_size()) +
        " parameters, model needs " + std::to_string(params_.total_size()));
  }
  params_ = params;
  step_ = next_step;
}

ad::Mat Trainer::batch_for_step(long step) {
  const long epoch = step / steps_per_epoch_;
  const long offset = (step % steps_per_epoch_) * cfg_.batch_size;
  const long n = data_.n();
  if (epoch != cached_epoch_) {
    cached_order_.resize(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) cached_order_[static_cast<std::size_t>(i)] =
        static_cast<int>(i);
    Rng shuffle_rng =
        substream(seed_, "batch-order", static_cast<std::uint64_t>(epoch));
    for (long i = n - 1; i >= 1; --i) {
      const auto j = static_cast<long>(
          shuffle_rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
      std::swap(cached_order_[static_cast<std::size_t>(i)],
                cached_order_[static_cast<std::size_t>(j)]);
    }
    cached_epoch_ = epoch;
  }
  ad::Mat xs(columns_.rows(), cfg_.batch_size);
  // The final batch of an epoch wraps around to the front of the same
  // shuffled order, keeping every batch exactly batch_size wide.
  for (int i = 0; i < cfg_.batch_size; ++i) {
    xs.col(i) = columns_.col(cached_order_[static_cast<std::size_t>(
        (offset + i) % n)]);
  }
  return xs;
}

StepRecord Trainer::run_step() {
  if (done()) {
    throw std::logic_error("run_step: schedule already finished");
  }
  const long t = step_;
  const ad::Mat xs = batch_for_step(t);
  const bool with_psi = ctx_.divergence.kind != DivergenceSpec::Kind::None;
  const bool termwise = cfg_.mode == RunConfig::Mode::TermWise;

  StepRandomness sr;
  Rng eps_rng =
      substream(seed_, "reparam-eps", static_cast<std::uint64_t>(t));
  sr.eps.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int i = 0; i < cfg_.batch_size; ++i) {
    ad::Mat e(ctx_.prior.dim, cfg_.draws);
    for (long c = 0; c < e.cols(); ++c) {
      for (long d = 0; d < e.rows(); ++d) e(d, c) = eps_rng.normal();
    }
    sr.eps.push_back(std::move(e));
  }
  if (termwise && cfg_.groups > 1) {
    Rng part_rng =
        substream(seed_, "partition", static_cast<std::uint64_t>(t));
    sr.plan = partition_batch(cfg_.batch_size, cfg_.groups, part_rng);
  } else if (termwise) {
    Rng part_rng =
        substream(seed_, "partition", static_cast<std::uint64_t>(t));
    sr.plan = partition_batch(cfg_.batch_size, 1, part_rng);
  }
  if (with_psi) {
    Rng prior_rng =
        substream(seed_, "prior-draws", static_cast<std::uint64_t>(t));
    if (termwise) {
      const int per = cfg_.batch_size / cfg_.groups;
      for (int j = 0; j < cfg_.groups; ++j) {
        sr.prior_draws.push_back(ctx_.prior.sample_matrix(per, prior_rng));
      }
    } else {
      sr.batch_prior_draws =
          ctx_.prior.sample_matrix(cfg_.batch_size, prior_rng);
    }
  }

  StepRecord rec;
  rec.step = t + 1;
  PhiBatchStats stats;
  GradVec g;
  switch (cfg_.mode) {
    case RunConfig::Mode::NonPrivate: {
      g = batch_loss_gradient(params_, ctx_, xs, sr.eps,
                              with_psi ? &sr.batch_prior_draws : nullptr,
                              &stats, &rec.psi);
      break;
    }
    case RunConfig::Mode::MicroAgg: {
      std::vector<GradVec> grads =
          with_psi ? phi_plus_batch_psi_gradients(params_, ctx_, xs, sr.eps,
                                                  sr.batch_prior_draws, &stats,
                                                  &rec.psi)
                   : phi_gradients(params_, ctx_, xs, sr.eps, &stats);
      // With the shared batch term inside every per-sample loss, one sample
      // can move the whole sum by up to B*C, so the noise is scaled by B.
      const double sigma =
          with_psi ? noise_.sigma_eps * cfg_.batch_size : noise_.sigma_eps;
      Rng noise_rng =
          substream(seed_, "dp-noise-sample", static_cast<std::uint64_t>(t));
      g = microagg_gradient(grads, cfg_.clip.c, sigma, noise_rng);
      break;
    }
    case RunConfig::Mode::BatchAgg: {
      GradVec batch_grad = batch_loss_gradient(
          params_, ctx_, xs, sr.eps,
          with_psi ? &sr.batch_prior_draws : nullptr, &stats, &rec.psi);
      Rng noise_rng =
          substream(seed_, "dp-noise-batch", static_cast<std::uint64_t>(t));
      g = batchagg_gradient(batch_grad, cfg_.clip.c, noise_.sigma_eps,
                            noise_rng);
      break;
    }
    case RunConfig::Mode::TermWise: {
      std::vector<GradVec> phi =
          phi_gradients(params_, ctx_, xs, sr.eps, &stats);
      std::vector<GradVec> psi;
      if (with_psi) {
        psi = psi_partition_gradients(params_, ctx_, xs, first_draws(sr.eps),
                                      sr.plan, sr.prior_draws, &rec.psi);
      }
      Rng sample_rng =
          substream(seed_, "dp-noise-sample", static_cast<std::uint64_t>(t));
      Rng batch_rng =
          substream(seed_, "dp-noise-batch", static_cast<std::uint64_t>(t));
      g = termwise_gradient(phi, psi, cfg_.clip, noise_.sigma_prime,
                            sample_rng, batch_rng);
      break;
    }
  }

  rec.rec = stats.rec_mean;
  rec.kld = stats.kld_mean;
  rec.grad_norm = g.norm();
  if (!std::isfinite(rec.rec) || !std::isfinite(rec.kld) ||
      !std::isfinite(rec.psi) || !g.allFinite()) {
    throw NumericError("step " + std::to_string(rec.step) +
                       ": loss or gradient is not finite");
  }

  sgd_step(params_, g, cfg_.eta);
  step_ = t + 1;
  rec.epsilon_spent =
      cfg_.is_private()
          ? epsilon_for_sigma(noise_.sigma_eps, cfg_.delta, q_, step_,
                              cfg_.accountant_const)
          : 0.0;
  return rec;
}

}  // namespace privae
