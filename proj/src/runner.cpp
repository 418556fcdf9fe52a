#include "privae/runner.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "privae/accountant.hpp"
#include "privae/audit.hpp"
#include "privae/metrics.hpp"
#include "privae/rng.hpp"
#include "privae/trainer.hpp"

namespace privae {

namespace {

using nlohmann::json;

constexpr double kDefaultScales[] = {0.2, 0.4, 1.0, 2.0, 4.0, 10.0};

const char* divergence_name(DivergenceSpec::Kind k) {
  switch (k) {
    case DivergenceSpec::Kind::None: return "none";
    case DivergenceSpec::Kind::DimwiseMMD: return "mmd";
    case DivergenceSpec::Kind::ReverseKL: return "reverse_kl";
  }
  return "?";
}

const char* prior_name(Prior::Kind k) {
  switch (k) {
    case Prior::Kind::StandardNormal: return "standard_normal";
    case Prior::Kind::SpikeSlab: return "spike_slab";
    case Prior::Kind::GaussMixture: return "gauss_mixture";
  }
  return "?";
}

double effective_noise(const RunConfig& cfg, const NoisePlan& plan) {
  switch (cfg.mode) {
    case RunConfig::Mode::NonPrivate: return 0.0;
    case RunConfig::Mode::MicroAgg:
    case RunConfig::Mode::BatchAgg: return cfg.clip.c * plan.sigma_eps;
    case RunConfig::Mode::TermWise: return plan.termwise_effective;
  }
  return 0.0;
}

json header_record(const Trainer& tr, std::uint64_t seed) {
  const RunConfig& cfg = tr.config();
  const NoisePlan& plan = tr.noise();
  json h{{"type", "header"},
         {"seed", seed},
         {"mode", RunConfig::mode_name(cfg.mode)},
         {"likelihood",
          cfg.likelihood == Likelihood::Bernoulli ? "bernoulli" : "gaussian"},
         {"prior", prior_name(cfg.prior_kind)},
         {"divergence", divergence_name(cfg.divergence.kind)},
         {"alpha", cfg.divergence.alpha},
         {"beta", cfg.beta},
         {"epochs", cfg.epochs},
         {"batch_size", cfg.batch_size},
         {"groups", cfg.groups},
         {"draws", cfg.draws},
         {"eta", cfg.eta},
         {"steps", tr.total_steps()},
         {"steps_per_epoch", tr.steps_per_epoch()},
         {"sampling_rate", tr.sampling_rate()},
         {"batch_sampling",
          "shuffled epochs with fixed batch size; q = B/N in accounting"},
         {"dataset",
          {{"source", RunConfig::source_name(cfg.source)},
           {"n", tr.dataset().n()},
           {"dim", tr.dataset().dim()}}}};
  json privacy{{"private", cfg.is_private()}};
  if (cfg.is_private()) {
    privacy["epsilon"] = cfg.epsilon;
    privacy["delta"] = cfg.delta;
    privacy["accountant_const"] = cfg.accountant_const;
    privacy["clip"] = {{"c", cfg.clip.c}, {"c1", cfg.clip.c1},
                       {"c2", cfg.clip.c2}};
    privacy["sigma_eps"] = plan.sigma_eps;
    privacy["noise_scales"] = {
        {"microagg_effective", plan.microagg_effective},
        {"termwise_effective", plan.termwise_effective}};
    if (cfg.mode == RunConfig::Mode::TermWise && tr.total_steps() > 0) {
      TermwiseBudgetReport rep = termwise_budget(
          cfg.epsilon, cfg.delta, tr.sampling_rate(), tr.total_steps(),
          cfg.accountant_const, cfg.batch_branch_active());
      privacy["kappa"] = rep.kappa_value;
      privacy["sigma_prime"] = rep.sigma_prime;
      privacy["branches"] = {{"batch_branch_active", rep.batch_branch_active},
                             {"epsilon", rep.branch_epsilon},
                             {"delta", rep.branch_delta},
                             {"composed_epsilon", rep.composed_epsilon},
                             {"composed_delta", rep.composed_delta}};
    }
  }
  h["privacy"] = std::move(privacy);
  return h;
}

std::span<const double> eval_scales(const RunConfig& cfg) {
  if (!cfg.divergence.scales.empty()) return cfg.divergence.scales;
  return kDefaultScales;
}

int eval_count(const RunConfig& cfg, long n) {
  const long cap = cfg.eval_samples > 0 ? cfg.eval_samples : 2048;
  return static_cast<int>(std::min(n, cap));
}

}  // namespace

void run_train(const RunConfig& cfg, std::uint64_t seed,
               const std::string& out_dir, std::ostream& out,
               std::ostream* progress, int verbosity) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  Trainer tr(cfg, seed);
  out << header_record(tr, seed) << '\n';

  const double noise_eff = effective_noise(cfg, tr.noise());
  StepRecord last;
  const auto run_start = std::chrono::steady_clock::now();
  while (!tr.done()) {
    const auto step_start = std::chrono::steady_clock::now();
    last = tr.run_step();
    out << json{{"type", "step"},
                {"step", last.step},
                {"rec", last.rec},
                {"kld", last.kld},
                {"psi", last.psi},
                {"grad_norm", last.grad_norm},
                {"epsilon_spent", last.epsilon_spent},
                {"noise_effective", noise_eff}}
        << '\n';
    if (progress && verbosity >= 1) {
      const bool epoch_end = last.step % tr.steps_per_epoch() == 0;
      if (verbosity >= 2 || epoch_end || tr.done()) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - step_start);
        *progress << "step " << last.step << "/" << tr.total_steps()
                  << " rec=" << last.rec << " kld=" << last.kld
                  << " psi=" << last.psi << " eps=" << last.epsilon_spent
                  << " (" << ms.count() << " ms)\n";
      }
    }
  }

  const std::string ckpt = (fs::path(out_dir) / "checkpoint.bin").string();
  save_checkpoint(ckpt, tr.params());
  out << json{{"type", "summary"},
              {"steps", tr.total_steps()},
              {"epsilon_spent", last.epsilon_spent},
              {"rec", last.rec},
              {"kld", last.kld},
              {"psi", last.psi},
              {"checkpoint", ckpt}}
      << '\n';
  if (progress && verbosity >= 1) {
    const auto total = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - run_start);
    *progress << "trained " << tr.total_steps() << " steps in "
              << total.count() << " ms; checkpoint: " << ckpt << '\n';
  }
}

void run_eval(const std::string& checkpoint_path, const RunConfig& cfg,
              std::uint64_t seed, std::ostream& out) {
  ParamSet params = load_checkpoint(checkpoint_path);
  Dataset ds = cfg.make_dataset();
  if (params.at("enc.W1").cols() != ds.dim()) {
    throw ConfigError("eval: checkpoint expects input dimension " +
                      std::to_string(params.at("enc.W1").cols()) +
                      ", dataset has " + std::to_string(ds.dim()));
  }
  if (params.at("enc.Wmu").rows() != cfg.latent_dim) {
    throw ConfigError("eval: checkpoint has latent dimension " +
                      std::to_string(params.at("enc.Wmu").rows()) +
                      ", config says " + std::to_string(cfg.latent_dim));
  }
  const Prior prior = cfg.make_prior();
  const ad::Mat data = ds.columns();
  const int n_eval = eval_count(cfg, ds.n());

  EncodeValues enc = encode_values(params, data);
  const double sparse = sparsity(enc.mu.transpose());

  Rng ll_rng = substream(seed, "eval-loglik");
  const double loglik =
      loglik_proxy(params, cfg.likelihood, data, cfg.eval_draws, ll_rng);

  Rng mmd_rng = substream(seed, "eval-mmd");
  const double mmd_val =
      mmd_metric(params, data, prior, n_eval, eval_scales(cfg), mmd_rng);

  Rng rkl_rng = substream(seed, "eval-rkl");
  const ad::Mat z_prior = prior.sample_matrix(n_eval, rkl_rng);
  const double rkl = reverse_kl_estimate(
      prior, enc.mu.leftCols(n_eval), enc.log_var.leftCols(n_eval), z_prior,
      cfg.divergence.literal_reverse_kl);

  out << json{{"type", "eval"},
              {"checkpoint", checkpoint_path},
              {"n", ds.n()},
              {"n_eval", n_eval},
              {"eval_draws", cfg.eval_draws},
              {"seed", seed},
              {"sparsity", sparse},
              {"loglik_proxy", loglik},
              {"mmd", mmd_val},
              {"reverse_kl", rkl}}
      << '\n';
}

void run_audit(const RunConfig& cfg, std::uint64_t seed, std::ostream& out,
               std::ostream* table_out) {
  std::vector<AuditReport> reports = audit_suite(cfg, seed);
  bool all_ok = true;
  for (const AuditReport& r : reports) {
    out << json{{"type", "audit"},
                {"aggregate", r.mode},
                {"trials", r.trials},
                {"bound", r.bound},
                {"convention_factor", r.convention_factor},
                {"threshold", r.threshold},
                {"observed_sup", r.observed_sup},
                {"within_bound", r.within_bound},
                {"leakage_expected", r.leakage_expected},
                {"single_clip_threshold", r.single_clip_threshold},
                {"leakage_shown", r.leakage_shown}}
        << '\n';
    all_ok = all_ok && r.within_bound &&
             (!r.leakage_expected || r.leakage_shown);
  }
  out << json{{"type", "summary"}, {"passed", all_ok}} << '\n';
  if (table_out) *table_out << render_audit_table(reports);
}

void run_generate(const std::string& checkpoint_path, long n,
                  std::uint64_t seed, const std::string& out_path,
                  const RunConfig* cfg, std::ostream& out) {
  if (n < 0) throw ConfigError("generate: n must be >= 0");
  ParamSet params = load_checkpoint(checkpoint_path);
  const long latent_dim = params.at("enc.Wmu").rows();
  Prior prior = cfg ? cfg->make_prior()
                    : Prior::standard_normal(static_cast<int>(latent_dim));
  if (prior.dim != latent_dim) {
    throw ConfigError("generate: prior dimension " +
                      std::to_string(prior.dim) +
                      " does not match checkpoint latent dimension " +
                      std::to_string(latent_dim));
  }
  const Likelihood lik = cfg ? cfg->likelihood : Likelihood::Bernoulli;
  Rng rng = substream(seed, "generate");
  Dataset ds;
  ds.rows = generate(params, lik, prior, static_cast<int>(n), rng).transpose();
  save_dataset(out_path, ds);
  out << json{{"type", "generate"},
              {"n", n},
              {"dim", ds.dim()},
              {"path", out_path}}
      << '\n';
}

}  // namespace privae
