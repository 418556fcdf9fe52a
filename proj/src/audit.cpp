#include "privae/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "privae/objective.hpp"
#include "privae/rng.hpp"

namespace privae {

namespace {

// The pool-construction probes draw from the audit stream at indices far
// beyond any trial index, so trial randomness is untouched by pool size.
constexpr std::uint64_t kPoolProbeBase = std::uint64_t{1} << 32;
constexpr int kPoolBaseSize = 16;
constexpr int kPoolScaledSize = 8;
constexpr double kMaxScale = 1048576.0;  // 2^20 cap for the saturation search

const char* mode_tag(AuditMode m) {
  switch (m) {
    case AuditMode::MicroPhi: return "microagg_phi";
    case AuditMode::MicroSharedPsi: return "microagg_shared_psi";
    case AuditMode::BatchPsi: return "batchagg_psi";
    case AuditMode::TermWise: return "termwise";
  }
  throw std::logic_error("mode_tag: bad mode");
}

bool needs_psi(AuditMode m) { return m != AuditMode::MicroPhi; }

ObjectiveContext context_for(const RunConfig& cfg) {
  ObjectiveContext ctx;
  ctx.likelihood = cfg.likelihood;
  ctx.prior = cfg.make_prior();
  ctx.divergence = cfg.divergence;
  ctx.beta = cfg.beta;
  return ctx;
}

// The aggregate under test, before noise and before any 1/B or 1/b scaling.
// TermWise keeps its two branch sums separate.
struct Aggregate {
  GradVec main;
  GradVec second;  // term-wise psi branch; empty otherwise
};

Aggregate compute_aggregate(AuditMode mode, const RunConfig& cfg,
                            const ObjectiveContext& ctx, const ParamSet& params,
                            const ad::Mat& xs, const StepRandomness& sr) {
  Aggregate out;
  switch (mode) {
    case AuditMode::MicroPhi: {
      out.main = clipped_sum(phi_gradients(params, ctx, xs, sr.eps), cfg.clip.c);
      break;
    }
    case AuditMode::MicroSharedPsi: {
      out.main = clipped_sum(phi_plus_batch_psi_gradients(
                                 params, ctx, xs, sr.eps, sr.batch_prior_draws),
                             cfg.clip.c);
      break;
    }
    case AuditMode::BatchPsi: {
      out.main = clip(psi_batch_gradient(params, ctx, xs, first_draws(sr.eps),
                                         sr.batch_prior_draws),
                      cfg.clip.c);
      break;
    }
    case AuditMode::TermWise: {
      out.main =
          clipped_sum(phi_gradients(params, ctx, xs, sr.eps), cfg.clip.c1);
      out.second = clipped_sum(
          psi_partition_gradients(params, ctx, xs, first_draws(sr.eps),
                                  sr.plan, sr.prior_draws),
          cfg.clip.c2);
      break;
    }
  }
  return out;
}

double aggregate_delta(const Aggregate& a, const Aggregate& b) {
  double d = (a.main - b.main).norm();
  if (a.second.size() > 0) d += (a.second - b.second).norm();
  return d;
}

// Replacement candidates: dataset rows following the batch. MicroSharedPsi
// additionally gets copies scaled up until the batch-term gradient saturates
// its clip norm, which is what makes the shared-term movement visible.
std::vector<Eigen::VectorXd> build_pool(AuditMode mode, const RunConfig& cfg,
                                        const ObjectiveContext& ctx,
                                        const ParamSet& params,
                                        const ad::Mat& columns,
                                        const ad::Mat& batch,
                                        std::uint64_t seed) {
  const long n = columns.cols();
  const int batch_size = cfg.batch_size;
  std::vector<Eigen::VectorXd> pool;
  pool.reserve(kPoolBaseSize + kPoolScaledSize);
  for (int k = 0; k < kPoolBaseSize; ++k) {
    pool.emplace_back(columns.col((batch_size + k) % n));
  }
  if (mode != AuditMode::MicroSharedPsi) return pool;

  for (int k = 0; k < kPoolScaledSize; ++k) {
    Rng probe = substream(seed, "audit", kPoolProbeBase + k);
    StepRandomness sr =
        draw_step_randomness(probe, ctx.prior, batch_size, cfg.draws, 1, true);
    const ad::Mat eps1 = first_draws(sr.eps);
    double scale = 1.0;
    ad::Mat xs = batch;
    while (scale < kMaxScale) {
      xs.col(0) = scale * pool[static_cast<std::size_t>(k)];
      GradVec g = psi_batch_gradient(params, ctx, xs, eps1,
                                     sr.batch_prior_draws);
      if (g.norm() >= cfg.clip.c) break;
      scale *= 2.0;
    }
    pool.emplace_back(scale * pool[static_cast<std::size_t>(k)]);
  }
  return pool;
}

}  // namespace

AuditReport empirical_sensitivity(AuditMode mode, const RunConfig& cfg,
                                  const ParamSet& params, const Dataset& ds,
                                  int trials, std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("empirical_sensitivity: trials must be >= 1");
  }
  const int batch_size = cfg.batch_size;
  if (batch_size < 1 || ds.n() < batch_size) {
    throw std::invalid_argument(
        "empirical_sensitivity: dataset smaller than one batch");
  }
  ObjectiveContext ctx = context_for(cfg);
  if (needs_psi(mode) && ctx.divergence.kind == DivergenceSpec::Kind::None) {
    throw std::invalid_argument(std::string("empirical_sensitivity: mode ") +
                                mode_tag(mode) + " needs a divergence");
  }

  const ad::Mat columns = ds.columns();
  const ad::Mat batch = columns.leftCols(batch_size);
  const std::vector<Eigen::VectorXd> pool =
      build_pool(mode, cfg, ctx, params, columns, batch, seed);

  const int groups = mode == AuditMode::TermWise ? cfg.groups : 1;

  AuditReport rep;
  rep.mode = mode_tag(mode);
  rep.trials = trials;
  switch (mode) {
    case AuditMode::MicroPhi: rep.bound = cfg.clip.c; break;
    case AuditMode::MicroSharedPsi: rep.bound = batch_size * cfg.clip.c; break;
    case AuditMode::BatchPsi: rep.bound = cfg.clip.c; break;
    case AuditMode::TermWise: rep.bound = cfg.clip.c1 + cfg.clip.c2; break;
  }
  rep.threshold = rep.convention_factor * rep.bound;
  rep.leakage_expected = mode == AuditMode::MicroSharedPsi;
  rep.single_clip_threshold = 2.0 * cfg.clip.c;

  rep.deltas.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Rng r = substream(seed, "audit", static_cast<std::uint64_t>(t));
    const int swap_pos = static_cast<int>(r.uniform_int(
        static_cast<std::uint64_t>(batch_size)));
    const int pool_idx = static_cast<int>(r.uniform_int(
        static_cast<std::uint64_t>(pool.size())));
    StepRandomness sr = draw_step_randomness(r, ctx.prior, batch_size,
                                             cfg.draws, groups,
                                             needs_psi(mode));

    Aggregate before = compute_aggregate(mode, cfg, ctx, params, batch, sr);
    ad::Mat swapped = batch;
    swapped.col(swap_pos) = pool[static_cast<std::size_t>(pool_idx)];
    Aggregate after = compute_aggregate(mode, cfg, ctx, params, swapped, sr);

    rep.deltas.push_back(aggregate_delta(before, after));
  }
  rep.observed_sup =
      *std::max_element(rep.deltas.begin(), rep.deltas.end());
  rep.within_bound = rep.observed_sup <= rep.threshold + 1e-9;
  rep.leakage_shown = rep.leakage_expected &&
                      rep.observed_sup > rep.single_clip_threshold;
  return rep;
}

std::vector<AuditReport> audit_suite(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.divergence.kind == DivergenceSpec::Kind::None) {
    throw ConfigError("audit: [divergence] must configure mmd or reverse_kl");
  }
  if (cfg.clip.c <= 0.0 || cfg.clip.c1 <= 0.0 || cfg.clip.c2 <= 0.0) {
    throw ConfigError("audit: [dp] c, c1 and c2 must all be > 0");
  }
  Dataset ds = cfg.make_dataset();
  if (ds.n() < cfg.batch_size) {
    throw ConfigError("audit: dataset smaller than one batch");
  }
  Rng init_rng = substream(seed, "init");
  ParamSet params = init_vae_params(cfg.make_arch(ds.dim()), init_rng);

  std::vector<AuditReport> out;
  for (AuditMode m : {AuditMode::MicroPhi, AuditMode::MicroSharedPsi,
                      AuditMode::BatchPsi, AuditMode::TermWise}) {
    out.push_back(
        empirical_sensitivity(m, cfg, params, ds, cfg.audit_trials, seed));
  }
  return out;
}

std::string render_audit_table(std::span<const AuditReport> reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-22s %8s %12s %12s %12s %7s %s\n",
                "aggregate", "trials", "bound", "threshold", "observed",
                "within", "note");
  out += line;
  for (const AuditReport& r : reports) {
    std::string note = "-";
    if (r.leakage_expected) {
      std::snprintf(line, sizeof(line), "exceeds 2C=%.4g: %s",
                    r.single_clip_threshold, r.leakage_shown ? "yes" : "no");
      note = line;
    }
    std::snprintf(line, sizeof(line), "%-22s %8d %12.6g %12.6g %12.6g %7s %s\n",
                  r.mode.c_str(), r.trials, r.bound, r.threshold,
                  r.observed_sup, r.within_bound ? "yes" : "NO", note.c_str());
    out += line;
  }
  return out;
}

}  // namespace privae
