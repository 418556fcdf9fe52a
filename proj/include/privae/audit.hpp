#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "privae/config.hpp"
#include "privae/dataio.hpp"
#include "privae/params.hpp"

namespace privae {

// Which pre-noise aggregate a sensitivity measurement probes. All four use
// sigma = 0 and hold every random draw fixed while one batch sample is
// replaced, so the observed change isolates the aggregate's data sensitivity.
enum class AuditMode {
  MicroPhi,        // sum_i clip(grad phi_i, C); one term moves, sup <= 2C
  MicroSharedPsi,  // sum_i clip(grad [phi_i + psi(batch)], C); the shared
                   // batch term lets one swap move all B terms, sup <= 2BC
  BatchPsi,        // clip(grad psi(batch), C); sup <= 2C
  TermWise         // sum clip(phi, C1) and sum clip(psi(group), C2) kept as
                   // separate branches; sup of the summed changes <= 2(C1+C2)
};

struct AuditReport {
  std::string mode;
  int trials = 0;
  double bound = 0.0;              // replace-one sensitivity of the aggregate
  double convention_factor = 2.0;  // replace-one moves a term both ways
  double threshold = 0.0;          // convention_factor * bound
  double observed_sup = 0.0;
  std::vector<double> deltas;      // per-trial l2 change of the aggregate
  bool within_bound = false;       // observed_sup <= threshold + 1e-9

  // MicroSharedPsi is the cautionary case: it should land above the
  // single-sample reference 2C in at least one adversarial trial.
  bool leakage_expected = false;
  double single_clip_threshold = 0.0;
  bool leakage_shown = false;
};

// Runs `trials` replace-one trials for one aggregate at the given parameters.
// The batch is the first batch_size dataset rows; replacements come from the
// following rows, extended for MicroSharedPsi with copies scaled up until the
// batch-term gradient saturates its clip norm.
AuditReport empirical_sensitivity(AuditMode mode, const RunConfig& cfg,
                                  const ParamSet& params, const Dataset& ds,
                                  int trials, std::uint64_t seed);

// All four reports at freshly initialized parameters on the configured
// dataset. Requires c, c1, c2 > 0 and a configured divergence.
std::vector<AuditReport> audit_suite(const RunConfig& cfg, std::uint64_t seed);

// Fixed-width text table, one row per report.
std::string render_audit_table(std::span<const AuditReport> reports);

}  // namespace privae
