#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "privae/config.hpp"
#include "privae/dataio.hpp"
#include "privae/objective.hpp"
#include "privae/params.hpp"

namespace privae {

// Raised when a loss or gradient stops being finite mid-run.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// What one optimizer step produced, for the metrics stream.
struct StepRecord {
  long step = 0;  // 1-based index of the step just taken
  double rec = 0.0;
  double kld = 0.0;
  double psi = 0.0;
  double grad_norm = 0.0;      // applied update direction, after noise
  double epsilon_spent = 0.0;  // budget consumed through this step
};

// Noise constants fixed for a whole run, all derived from the accountant.
// The two *_effective values are the per-step noise stds after averaging that
// runs log for cross-scheme comparison (0 when the scheme's clip is unset).
struct NoisePlan {
  double sigma_eps = 0.0;
  double kappa = 1.0;
  double sigma_prime = 0.0;
  double microagg_effective = 0.0;
  double termwise_effective = 0.0;
};

NoisePlan make_noise_plan(const RunConfig& cfg, long total_steps, double q);

// Steps a model through the configured schedule. All randomness comes from
// named substreams of (seed, step/epoch index), so any step can be replayed
// in isolation and a restored checkpoint continues exactly where it left off.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, std::uint64_t seed);

  // Takes the next step; throws NumericError if anything goes non-finite.
  StepRecord run_step();

  // Resume: replace the parameters and continue from next_step (0-based).
  void restore(const ParamSet& params, long next_step);

  long next_step() const { return step_; }
  long total_steps() const { return total_steps_; }
  long steps_per_epoch() const { return steps_per_epoch_; }
  bool done() const { return step_ >= total_steps_; }
  double sampling_rate() const { return q_; }
  const ParamSet& params() const { return params_; }
  const Dataset& dataset() const { return data_; }
  const RunConfig& config() const { return cfg_; }
  const NoisePlan& noise() const { return noise_; }

 private:
  ad::Mat batch_for_step(long step);

  RunConfig cfg_;
  std::uint64_t seed_ = 0;
  Dataset data_;
  ad::Mat columns_;  // input_dim x N
  ObjectiveContext ctx_;
  ParamSet params_;
  long steps_per_epoch_ = 0;
  long total_steps_ = 0;
  double q_ = 0.0;
  NoisePlan noise_;
  long step_ = 0;
  long cached_epoch_ = -1;
  std::vector<int> cached_order_;
};

}  // namespace privae
