#include "privae/objective.hpp"

#include <stdexcept>
#include <string>

namespace privae {

StepRandomness draw_step_randomness(Rng& rng, const Prior& prior,
                                    int batch_size, int draws, int groups,
                                    bool with_prior_draws) {
  if (batch_size < 1 || draws < 1) {
    throw std::invalid_argument("draw_step_randomness: sizes must be >= 1");
  }
  const int latent_dim = prior.dim;
  StepRandomness r;
  r.eps.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    ad::Mat e(latent_dim, draws);
    for (long c = 0; c < e.cols(); ++c) {
      for (long d = 0; d < e.rows(); ++d) e(d, c) = rng.normal();
    }
    r.eps.push_back(std::move(e));
  }
  if (groups > 1) {
    r.plan = partition_batch(batch_size, groups, rng);
  }
  if (with_prior_draws) {
    if (groups > 1) {
      const int per = batch_size / groups;
      r.prior_draws.reserve(static_cast<std::size_t>(groups));
      for (int j = 0; j < groups; ++j) {
        r.prior_draws.push_back(prior.sample_matrix(per, rng));
      }
    }
    r.batch_prior_draws = prior.sample_matrix(batch_size, rng);
  }
  return r;
}

ad::Mat first_draws(const std::vector<ad::Mat>& eps) {
  if (eps.empty()) {
    throw std::invalid_argument("first_draws: no eps slots");
  }
  ad::Mat out(eps.front().rows(), static_cast<long>(eps.size()));
  for (std::size_t i = 0; i < eps.size(); ++i) {
    out.col(static_cast<long>(i)) = eps[i].col(0);
  }
  return out;
}

namespace {

void check_batch(const ad::Mat& xs, const std::vector<ad::Mat>& eps,
                 const char* where) {
  if (xs.cols() != static_cast<long>(eps.size())) {
    throw std::invalid_argument(std::string(where) + ": batch has " +
                                std::to_string(xs.cols()) + " columns but " +
                                std::to_string(eps.size()) + " eps slots");
  }
  if (xs.cols() == 0) {
    throw std::invalid_argument(std::string(where) + ": empty batch");
  }
}

ad::Mat gather_cols(const ad::Mat& m, const std::vector<int>& idx) {
  ad::Mat out(m.rows(), static_cast<long>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<long>(k)) = m.col(idx[k]);
  }
  return out;
}

}  // namespace

std::vector<GradVec> phi_gradients(const ParamSet& params,
                                   const ObjectiveContext& ctx,
                                   const ad::Mat& xs,
                                   const std::vector<ad::Mat>& eps,
                                   PhiBatchStats* stats) {
  check_batch(xs, eps, "phi_gradients");
  const int n = static_cast<int>(xs.cols());
  double rec_sum = 0.0, kld_sum = 0.0;
  auto grads = per_sample_gradients(
      params,
      [&](ad::Tape& tape, std::span<const ad::Var> vars, int i) {
        VaeVars v = VaeVars::from(vars);
        double rec = 0.0, kld = 0.0;
        ad::Var loss = phi_loss(tape, v, ctx.likelihood, ctx.prior, ctx.beta,
                                xs.col(i), eps[static_cast<std::size_t>(i)],
                                &rec, &kld);
        rec_sum += rec;
        kld_sum += kld;
        return loss;
      },
      n);
  if (stats) {
    stats->rec_mean = rec_sum / n;
    stats->kld_mean = kld_sum / n;
  }
  return grads;
}

std::vector<GradVec> phi_plus_batch_psi_gradients(
    const ParamSet& params, const ObjectiveContext& ctx, const ad::Mat& xs,
    const std::vector<ad::Mat>& eps, const ad::Mat& batch_prior_draws,
    PhiBatchStats* stats, double* psi_value) {
  check_batch(xs, eps, "phi_plus_batch_psi_gradients");
  ctx.divergence.validate();
  if (ctx.divergence.kind == DivergenceSpec::Kind::None) {
    throw std::invalid_argument(
        "phi_plus_batch_psi_gradients: no divergence configured");
  }
  const int n = static_cast<int>(xs.cols());
  const ad::Mat eps1 = first_draws(eps);
  double rec_sum = 0.0, kld_sum = 0.0, psi_last = 0.0;
  auto grads = per_sample_gradients(
      params,
      [&](ad::Tape& tape, std::span<const ad::Var> vars, int i) {
        VaeVars v = VaeVars::from(vars);
        double rec = 0.0, kld = 0.0;
        ad::Var phi = phi_loss(tape, v, ctx.likelihood, ctx.prior, ctx.beta,
                               xs.col(i), eps[static_cast<std::size_t>(i)],
                               &rec, &kld);
        rec_sum += rec;
        kld_sum += kld;
        ad::Var psi = psi_loss(tape, v, ctx.divergence, ctx.prior, xs, eps1,
                               batch_prior_draws);
        psi_last = tape.value(psi)(0, 0);
        return phi + psi;
      },
      n);
  if (stats) {
    stats->rec_mean = rec_sum / n;
    stats->kld_mean = kld_sum / n;
  }
  if (psi_value) *psi_value = psi_last;
  return grads;
}

GradVec psi_batch_gradient(const ParamSet& params, const ObjectiveContext& ctx,
                           const ad::Mat& xs, const ad::Mat& eps_first,
                           const ad::Mat& prior_draws, double* psi_value) {
  ad::Tape tape;
  auto vars = params.attach(tape);
  VaeVars v = VaeVars::from(vars);
  ad::Var psi =
      psi_loss(tape, v, ctx.divergence, ctx.prior, xs, eps_first, prior_draws);
  if (psi_value) *psi_value = tape.value(psi)(0, 0);
  return gradient(tape, psi, vars);
}

std::vector<GradVec> psi_partition_gradients(
    const ParamSet& params, const ObjectiveContext& ctx, const ad::Mat& xs,
    const ad::Mat& eps_first, const PartitionPlan& plan,
    const std::vector<ad::Mat>& prior_draws, double* psi_mean) {
  plan.validate(static_cast<int>(xs.cols()));
  if (prior_draws.size() != static_cast<std::size_t>(plan.groups)) {
    throw std::invalid_argument("psi_partition_gradients: " +
                                std::to_string(prior_draws.size()) +
                                " prior draw blocks for " +
                                std::to_string(plan.groups) + " groups");
  }
  std::vector<GradVec> out;
  out.reserve(static_cast<std::size_t>(plan.groups));
  double psi_sum = 0.0;
  const std::vector<std::vector<int>> groups = plan.members();
  for (int j = 0; j < plan.groups; ++j) {
    const std::vector<int>& idx = groups[static_cast<std::size_t>(j)];
    ad::Tape tape;
    auto vars = params.attach(tape);
    VaeVars v = VaeVars::from(vars);
    ad::Var psi =
        psi_loss(tape, v, ctx.divergence, ctx.prior, gather_cols(xs, idx),
                 gather_cols(eps_first, idx),
                 prior_draws[static_cast<std::size_t>(j)]);
    psi_sum += tape.value(psi)(0, 0);
    out.push_back(gradient(tape, psi, vars));
  }
  if (psi_mean) *psi_mean = psi_sum / plan.groups;
  return out;
}

GradVec batch_loss_gradient(const ParamSet& params, const ObjectiveContext& ctx,
                            const ad::Mat& xs, const std::vector<ad::Mat>& eps,
                            const ad::Mat* batch_prior_draws,
                            PhiBatchStats* stats, double* psi_value) {
  check_batch(xs, eps, "batch_loss_gradient");
  const int n = static_cast<int>(xs.cols());
  ad::Tape tape;
  auto vars = params.attach(tape);
  VaeVars v = VaeVars::from(vars);

  double rec_sum = 0.0, kld_sum = 0.0;
  ad::Var total;
  for (int i = 0; i < n; ++i) {
    double rec = 0.0, kld = 0.0;
    ad::Var phi = phi_loss(tape, v, ctx.likelihood, ctx.prior, ctx.beta,
                           xs.col(i), eps[static_cast<std::size_t>(i)], &rec,
                           &kld);
    rec_sum += rec;
    kld_sum += kld;
    total = (i == 0) ? phi : total + phi;
  }
  total = total * (1.0 / n);

  if (psi_value) *psi_value = 0.0;
  if (batch_prior_draws != nullptr &&
      ctx.divergence.kind != DivergenceSpec::Kind::None) {
    ad::Var psi = psi_loss(tape, v, ctx.divergence, ctx.prior, xs,
                           first_draws(eps), *batch_prior_draws);
    if (psi_value) *psi_value = tape.value(psi)(0, 0);
    total = total + psi;
  }
  if (stats) {
    stats->rec_mean = rec_sum / n;
    stats->kld_mean = kld_sum / n;
  }
  return gradient(tape, total, vars);
}

}  // namespace privae
