#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "privae/config.hpp"

namespace privae {

// Orchestration behind the CLI. Each run_* writes one JSON object per line to
// `out`; errors propagate (ConfigError for bad inputs, NumericError for
// non-finite training, std::runtime_error for IO).
//
// `progress` (may be null) receives human-readable status lines, including
// wall-clock timings, which stay out of the JSONL stream so identical
// (config, seed) runs produce byte-identical metrics.

// Trains, writes <out_dir>/checkpoint.bin, emits header/step/summary records.
void run_train(const RunConfig& cfg, std::uint64_t seed,
               const std::string& out_dir, std::ostream& out,
               std::ostream* progress = nullptr, int verbosity = 1);

// Emits one record with sparsity, loglik_proxy, mmd and reverse_kl.
void run_eval(const std::string& checkpoint_path, const RunConfig& cfg,
              std::uint64_t seed, std::ostream& out);

// Emits one record per probed aggregate plus a summary; the aligned text
// table goes to `table_out` when non-null.
void run_audit(const RunConfig& cfg, std::uint64_t seed, std::ostream& out,
               std::ostream* table_out = nullptr);

// Decodes n prior draws into a dataset file at out_path. cfg may be null:
// then the prior is standard normal and outputs are Bernoulli means.
void run_generate(const std::string& checkpoint_path, long n,
                  std::uint64_t seed, const std::string& out_path,
                  const RunConfig* cfg, std::ostream& out);

}  // namespace privae
