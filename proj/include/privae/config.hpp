#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "privae/dataio.hpp"
#include "privae/divergences.hpp"
#include "privae/dp.hpp"
#include "privae/priors.hpp"
#include "privae/vae.hpp"

namespace privae {

// Raised for any malformed or out-of-range configuration; the message carries
// "<path>:<line>:" where a specific line is to blame.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fully validated run description parsed from an INI-style file:
// `key = value` lines under [section] headers, `#` comments, blank lines
// ignored. Sections: [model], [prior], [divergence], [dp], [train], [data],
// [audit].
struct RunConfig {
  // [model]
  int latent_dim = 0;
  int hidden1 = 64;
  int hidden2 = 64;
  Likelihood likelihood = Likelihood::Bernoulli;

  // [prior]
  Prior::Kind prior_kind = Prior::Kind::StandardNormal;
  double gamma = 0.8;          // spike_slab
  double sigma0_sq = 0.05;     // spike_slab
  ad::Mat mixture_means;       // gauss_mixture, D x K
  ad::Mat mixture_stds;        // D x K
  Eigen::VectorXd mixture_weights;

  // [divergence]
  DivergenceSpec divergence;

  // [dp]
  enum class Mode { NonPrivate, MicroAgg, BatchAgg, TermWise };
  Mode mode = Mode::NonPrivate;
  ClipConfig clip;
  double epsilon = 1.0;
  double delta = 1e-5;
  double accountant_const = 1.0;

  // [train]
  int epochs = 0;
  int batch_size = 0;
  int groups = 1;     // partitions per batch (b)
  int draws = 1;      // reconstruction samples per input (L)
  double eta = 0.0;
  double beta = 1.0;
  int eval_samples = 0;  // 0 -> min(dataset size, 2048)
  int eval_draws = 1;

  // [data]
  enum class Source { Pinwheel, SynthImages, File };
  Source source = Source::Pinwheel;
  std::string data_path;
  int data_n = 400;
  int arms = 4;
  double radial_std = 0.3;
  double tangential_std = 0.05;
  double rate = 0.25;
  int side = 8;
  std::uint64_t data_seed = 1234;

  // [audit]
  int audit_trials = 200;

  Prior make_prior() const;
  VaeArch make_arch(long input_dim) const;
  Dataset make_dataset() const;
  bool is_private() const { return mode != Mode::NonPrivate; }
  bool batch_branch_active() const;

  static const char* mode_name(Mode m);
  static const char* source_name(Source s);
};

RunConfig parse_config(const std::string& path);

// Same parser over an in-memory string; `origin` stands in for the path in
// error messages.
RunConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace privae
