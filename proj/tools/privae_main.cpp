#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "privae/config.hpp"
#include "privae/runner.hpp"
#include "privae/trainer.hpp"

namespace {

// PRIVAE_LOG: 0 = silent, 1 = per-epoch progress (default), 2 = per-step.
int verbosity_from_env() {
  const char* v = std::getenv("PRIVAE_LOG");
  if (!v || *v == '\0') return 1;
  char* end = nullptr;
  const long level = std::strtol(v, &end, 10);
  if (end == v || *end != '\0') return 1;
  return static_cast<int>(std::clamp(level, 0L, 2L));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privae: differentially private VAE training toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string out_dir = ".";
  std::string out_path;
  std::string gen_config_path;
  std::uint64_t seed = 1;
  long n = 0;

  CLI::App* train = app.add_subcommand(
      "train", "Train; writes metrics.jsonl and checkpoint.bin into --out");
  train->add_option("--config", config_path, "run configuration file")
      ->required();
  train->add_option("--seed", seed, "master seed (default 1)");
  train->add_option("--out", out_dir, "output directory (default .)");

  CLI::App* eval = app.add_subcommand(
      "eval", "Evaluate a checkpoint; metrics JSON on stdout");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval->add_option("--config", config_path, "run configuration file")
      ->required();
  eval->add_option("--seed", seed, "evaluation seed (default 1)");

  CLI::App* audit = app.add_subcommand(
      "audit", "Replace-one sensitivity audit; JSONL on stdout, table on "
               "stderr");
  audit->add_option("--config", config_path, "run configuration file")
      ->required();
  audit->add_option("--seed", seed, "audit seed (default 1)");

  CLI::App* gen = app.add_subcommand(
      "generate", "Decode prior draws from a checkpoint into a dataset file");
  gen->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  gen->add_option("-n,--num", n, "number of samples")->required();
  gen->add_option("--seed", seed, "sampling seed (default 1)");
  gen->add_option("--out", out_path, "output dataset path")->required();
  gen->add_option("--config", gen_config_path,
                  "optional config supplying the prior and likelihood");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const int verbosity = verbosity_from_env();
  try {
    if (train->parsed()) {
      privae::RunConfig cfg = privae::parse_config(config_path);
      std::filesystem::create_directories(out_dir);
      const std::string metrics_path =
          (std::filesystem::path(out_dir) / "metrics.jsonl").string();
      std::ofstream metrics(metrics_path, std::ios::trunc);
      if (!metrics) {
        throw std::runtime_error("cannot open " + metrics_path +
                                 " for writing");
      }
      privae::run_train(cfg, seed, out_dir, metrics,
                        verbosity > 0 ? &std::cerr : nullptr, verbosity);
    } else if (eval->parsed()) {
      privae::RunConfig cfg = privae::parse_config(config_path);
      privae::run_eval(checkpoint_path, cfg, seed, std::cout);
    } else if (audit->parsed()) {
      privae::RunConfig cfg = privae::parse_config(config_path);
      privae::run_audit(cfg, seed, std::cout, &std::cerr);
    } else {
      std::optional<privae::RunConfig> cfg;
      if (!gen_config_path.empty()) {
        cfg = privae::parse_config(gen_config_path);
      }
      privae::run_generate(checkpoint_path, n, seed, out_path,
                           cfg ? &*cfg : nullptr, std::cout);
    }
  } catch (const privae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const privae::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
