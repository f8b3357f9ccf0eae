#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cot/dataset.hpp"
#include "cot/model.hpp"

namespace cot {

/// baseline_ce: cross entropy only. cot: each step runs a cross-entropy
/// update followed by a complement-objective update on the same mini-batch.
enum class TrainMode { kBaselineCe, kCot };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& text);

/// SGD with momentum and decoupled-by-flag weight decay:
///   g' = g + weight_decay * theta   (when the step applies decay)
///   v  = momentum * v + g'
///   theta -= learning_rate * v
struct OptimizerState {
  double learning_rate = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::vector<Layer> velocity;
  /// Populated only when the complement step keeps its own momentum buffers.
  std::vector<Layer> complement_velocity;
  bool separate_velocity = false;
};

/// Which velocity buffers a step updates; with shared buffers (the default)
/// both slots name the same storage.
enum class VelocitySlot { kPrimary, kComplement };

OptimizerState make_optimizer(const ModelState& model, double learning_rate,
                              double momentum, double weight_decay,
                              bool separate_velocity = false);

void sgd_step(ModelState& model, const ParamGrads& grads, OptimizerState& opt,
              bool apply_weight_decay,
              VelocitySlot slot = VelocitySlot::kPrimary);

/// Step schedule: lr(e) = initial_lr * factor^(number of milestones <= e),
/// epochs counted from 0.
struct Schedule {
  double initial_lr = 0.1;
  std::vector<std::size_t> milestones;
  double factor = 0.1;

  double lr_at(std::size_t epoch) const;
  void validate() const;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kBaselineCe;
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  Schedule schedule;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  /// Give the complement updates their own momentum buffers instead of
  /// sharing the primary ones.
  bool cot_separate_velocity = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Mean per-sample losses over one epoch. comp_loss is absent in baseline
/// mode (the CSV cell stays empty).
struct EpochStats {
  double ce_loss = 0.0;
  std::optional<double> comp_loss;
};

EpochStats train_epoch_baseline(ModelState& model, const Dataset& train,
                                OptimizerState& opt, std::size_t batch_size,
                                Rng& shuffle_rng);

/// One epoch of alternating updates: per mini-batch, a cross-entropy step
/// with weight decay, then a fresh forward pass and a complement-objective
/// step without weight decay on the same batch. For K=2 the complement
/// gradient is identically zero, so the second update is skipped outright and
/// the trajectory coincides with the baseline bit for bit.
EpochStats train_epoch_cot(ModelState& model, const Dataset& train,
                           OptimizerState& opt, std::size_t batch_size,
                           Rng& shuffle_rng);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double ce_loss = 0.0;
  std::optional<double> comp_loss;
  double test_error = 0.0;
  double epoch_seconds = 0.0;  // training only, evaluation excluded
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

/// CSV columns: epoch,lr,ce_loss,comp_loss,test_error,epoch_seconds with a
/// '#' provenance line first.
void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path,
                         std::uint64_t config_hash, std::uint64_t seed);

struct TrainResult {
  ModelState model;
  TrainLog log;
};

/// Full run: seeded init, per-epoch schedule, per-epoch test error. The
/// callback (if any) sees each record as it is produced.
TrainResult run_training(
    const TrainConfig& config, const MlpArchitecture& arch,
    const Dataset& train, const Dataset& test,
    const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace cot
