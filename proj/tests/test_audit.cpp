#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "privae/audit.hpp"
#include "privae/rng.hpp"
#include "test_util.hpp"

using namespace privae;

namespace {

RunConfig audit_config() { return parse_config("configs/audit.cfg"); }

void check_report_invariants(const AuditReport& r, int trials) {
  CHECK(r.trials == trials);
  REQUIRE(r.deltas.size() == static_cast<std::size_t>(trials));
  CHECK(r.threshold == r.convention_factor * r.bound);
  CHECK(r.convention_factor == 2.0);
  double sup = 0.0;
  for (const double d : r.deltas) {
    CHECK(d >= 0.0);
    sup = std::max(sup, d);
  }
  CHECK(r.observed_sup == sup);
  CHECK(r.within_bound == (r.observed_sup <= r.threshold + 1e-9));
}

}  // namespace

TEST_CASE("replace-one sensitivity per aggregate") {
  const RunConfig cfg = audit_config();
  const Dataset ds = cfg.make_dataset();
  Rng init(5);
  const ParamSet params = init_vae_params(cfg.make_arch(ds.dim()), init);
  const int trials = 40;

  SUBCASE("per-sample aggregate stays under twice the clip bound") {
    const AuditReport r =
        empirical_sensitivity(AuditMode::MicroPhi, cfg, params, ds, trials, 3);
    check_report_invariants(r, trials);
    CHECK(r.mode == "microagg_phi");
    CHECK(r.bound == cfg.clip.c);
    CHECK_FALSE(r.leakage_expected);
    CHECK(r.within_bound);
    CHECK(r.observed_sup > 0.0);  // swaps do move the aggregate
  }

  SUBCASE("shared batch term can exceed the per-sample reference") {
    const AuditReport r = empirical_sensitivity(AuditMode::MicroSharedPsi, cfg,
                                                params, ds, trials, 3);
    check_report_invariants(r, trials);
    CHECK(r.mode == "microagg_shared_psi");
    CHECK(r.bound == cfg.batch_size * cfg.clip.c);
    CHECK(r.leakage_expected);
    CHECK(r.single_clip_threshold == 2.0 * cfg.clip.c);
    CHECK(r.within_bound);  // the loose B*C bound still holds
    CHECK(r.leakage_shown ==
          (r.observed_sup > r.single_clip_threshold));
    CHECK(r.leakage_shown);
  }

  SUBCASE("whole-batch aggregate is a single clipped term") {
    const AuditReport r =
        empirical_sensitivity(AuditMode::BatchPsi, cfg, params, ds, trials, 3);
    check_report_invariants(r, trials);
    CHECK(r.mode == "batchagg_psi");
    CHECK(r.bound == cfg.clip.c);
    CHECK(r.within_bound);
  }

  SUBCASE("split branches bound by the sum of their clips") {
    const AuditReport r =
        empirical_sensitivity(AuditMode::TermWise, cfg, params, ds, trials, 3);
    check_report_invariants(r, trials);
    CHECK(r.mode == "termwise");
    CHECK(r.bound == cfg.clip.c1 + cfg.clip.c2);
    CHECK(r.within_bound);
  }

  SUBCASE("measurements are deterministic in the seed") {
    const AuditReport a =
        empirical_sensitivity(AuditMode::MicroPhi, cfg, params, ds, 10, 42);
    const AuditReport b =
        empirical_sensitivity(AuditMode::MicroPhi, cfg, params, ds, 10, 42);
    CHECK(a.deltas == b.deltas);
    const AuditReport c =
        empirical_sensitivity(AuditMode::MicroPhi, cfg, params, ds, 10, 43);
    CHECK(a.deltas != c.deltas);
  }
}

TEST_CASE("audit suite covers all four aggregates in order") {
  RunConfig cfg = audit_config();
  cfg.audit_trials = 25;  // keep the unit run fast
  const std::vector<AuditReport> reports = audit_suite(cfg, 7);
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].mode == "microagg_phi");
  CHECK(reports[1].mode == "microagg_shared_psi");
  CHECK(reports[2].mode == "batchagg_psi");
  CHECK(reports[3].mode == "termwise");
  for (const AuditReport& r : reports) check_report_invariants(r, 25);

  SUBCASE("suite runs are reproducible") {
    const std::vector<AuditReport> again = audit_suite(cfg, 7);
    REQUIRE(again.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(reports[i].deltas == again[i].deltas);
      CHECK(reports[i].observed_sup == again[i].observed_sup);
    }
  }

  SUBCASE("rendered table lists every mode") {
    const std::string table = render_audit_table(reports);
    CHECK(table.find("microagg_phi") != std::string::npos);
    CHECK(table.find("microagg_shared_psi") != std::string::npos);
    CHECK(table.find("batchagg_psi") != std::string::npos);
    CHECK(table.find("termwise") != std::string::npos);
    CHECK(table.find("threshold") != std::string::npos);
  }
}

TEST_CASE("audit rejects configurations it cannot probe") {
  SUBCASE("a divergence is required") {
    RunConfig cfg = audit_config();
    cfg.divergence = DivergenceSpec{};
    cfg.clip.c2 = 0.0;
    CHECK_THROWS_AS(audit_suite(cfg, 1), ConfigError);
  }

  SUBCASE("all three clip bounds are required") {
    RunConfig cfg = audit_config();
    cfg.clip.c = 0.0;
    CHECK_THROWS_AS(audit_suite(cfg, 1), ConfigError);
    RunConfig cfg2 = audit_config();
    cfg2.clip.c1 = 0.0;
    CHECK_THROWS_AS(audit_suite(cfg2, 1), ConfigError);
    RunConfig cfg3 = audit_config();
    cfg3.clip.c2 = 0.0;
    CHECK_THROWS_AS(audit_suite(cfg3, 1), ConfigError);
  }
}
