#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cot/adversarial.hpp"
#include "cot/dataset.hpp"
#include "cot/training.hpp"

namespace cot {

/// data.* keys: which corpus to build and how to split/scale it.
struct DataConfig {
  std::string kind;  // two_moons | spirals | digits | idx
  std::size_t n = 1000;
  std::size_t classes = 3;  // spirals only
  double noise = 0.0;       // resolved default depends on kind
  double train_fraction = 0.75;
  bool stratified = false;
  bool standardize = false;  // resolved default depends on kind
  std::string images;        // idx only
  std::string labels;
  std::string test_images;  // optional; otherwise train files are split
  std::string test_labels;
};

/// attack.* keys; gradient_mode and clip stay symbolic ("auto") until the
/// attack command resolves them against the source checkpoint and dataset.
struct AttackSection {
  AttackConfig config;
  std::string gradient_mode = "auto";  // auto | primary_only | primary_plus_complement
  std::string clip = "auto";           // auto | none | "lo,hi"
  bool export_idx = false;
};

/// One parsed experiment file with every default materialized.
struct ExperimentConfig {
  DataConfig data;
  std::vector<std::size_t> hidden{64, 64};
  TrainConfig train;
  bool export_embeddings = false;
  AttackSection attack;
  std::vector<std::uint64_t> compare_seeds{1, 2, 3, 4, 5};
  std::uint64_t seed = 0;
  std::string out = "out";
  /// FNV-1a over the canonical key=value lines (everything except `out`,
  /// which cannot affect results). Recomputed after CLI overrides.
  std::uint64_t config_hash = 0;
};

/// Parses the flat key=value format: '#' starts a comment, blank lines are
/// ignored, keys are dotted, unknown or duplicate keys are errors with
/// file:line positions. Defaults are filled in and the hash computed.
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies --seed/--out and recomputes the hash.
void apply_overrides(ExperimentConfig& config,
                     const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& out);

/// The canonical serialization the hash is computed over (sorted lines).
std::string canonical_config(const ExperimentConfig& config);

std::uint64_t compute_config_hash(const ExperimentConfig& config);

struct DataBundle {
  Dataset train;
  Dataset test;
};

/// Materializes the configured corpus deterministically from config.seed.
DataBundle build_data(const ExperimentConfig& config);

MlpArchitecture architecture_for(const ExperimentConfig& config,
                                 const DataBundle& data);

}  // namespace cot
