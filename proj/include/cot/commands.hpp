#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cot {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::optional<std::string> out;     // overrides the config's out directory
  bool quiet = false;
};

/// Trains per the config and writes log.csv, model.ckpt, eval.json, eval.csv
/// (and embeddings.csv when requested) into the output directory.
int cmd_train(const CommonOptions& options);

struct AttackOptions {
  CommonOptions common;
  std::string target_checkpoint;
  std::string source_checkpoint;  // empty: white-box, source = target
};

/// Runs the configured attack from a source checkpoint against a target
/// checkpoint on the config's test split; writes attack_report.json/.csv.
int cmd_attack(const AttackOptions& options);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t batches = 1000;
  bool corrupt_gradients = false;  // negative-control hook
  bool quiet = false;
};

/// Finite-difference sweep over the objective and model gradients; prints the
/// maxima and exits 0 only if every error is below its tolerance.
int cmd_gradcheck(const GradcheckOptions& options);

/// Trains baseline and alternating modes for every seed in compare.seeds and
/// writes a two-row summary table to compare.csv.
int cmd_compare(const CommonOptions& options);

/// Full argument parsing + dispatch; returns the process exit code
/// (0 success, 1 runtime failure, 2 usage or config error).
int run_cli(int argc, char** argv);

}  // namespace cot
