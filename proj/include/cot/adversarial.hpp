#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cot/model.hpp"
#include "cot/objectives.hpp"

namespace cot {

enum class AttackKind { kFgsm, kIfgsm };

/// Which loss the attack differentiates through: the cross entropy alone, or
/// the elementwise sum of the cross-entropy and complement input gradients.
enum class GradientMode { kPrimaryOnly, kPrimaryPlusComplement };

/// Sign convention for the complement term: the gradient of the loss the
/// training minimizes (negative normalized complement entropy), or of the
/// raw entropy itself.
enum class ComplementSign { kMinimizedLoss, kRawEntropy };

enum class InputObjective { kPrimary, kComplement, kSum };

std::string to_string(AttackKind kind);
std::string to_string(GradientMode mode);

struct AttackConfig {
  AttackKind kind = AttackKind::kFgsm;
  double epsilon = 0.1;
  std::size_t iterations = 10;  // ifgsm only
  double step_size = 0.0;       // ifgsm only; 0 means epsilon / iterations
  std::optional<std::pair<double, double>> clip_range;
  GradientMode gradient_mode = GradientMode::kPrimaryOnly;
  ComplementSign complement_sign = ComplementSign::kMinimizedLoss;
  /// Perturbations beyond 0.1 need this explicit override.
  bool allow_large_epsilon = false;

  void validate() const;
};

/// Gradient of the selected objective with respect to the inputs, N x D.
Tensor input_gradient(const ModelState& model, const LabeledBatch& batch,
                      InputObjective objective,
                      ComplementSign sign = ComplementSign::kMinimizedLoss);

/// x + epsilon * sign(grad), with sign(0) = 0, then clipped to clip_range
/// when one is set.
Tensor fgsm(const ModelState& model, const LabeledBatch& batch,
            const AttackConfig& config);

/// iterations rounds of x += step * sign(grad), each followed by projection
/// onto the epsilon-ball around the original inputs and onto clip_range.
Tensor ifgsm(const ModelState& model, const LabeledBatch& batch,
             const AttackConfig& config);

struct AttackReport {
  std::string kind;
  std::string protocol;  // "white_box" or "transfer"
  std::string gradient_mode;
  double epsilon = 0.0;
  std::size_t iterations = 0;  // 0 for fgsm
  double step_size = 0.0;      // 0 for fgsm
  std::optional<std::pair<double, double>> clip_range;
  double clean_error = 0.0;
  double adversarial_error = 0.0;
  double max_perturbation = 0.0;
  std::vector<double> perturbation_norms;  // per-sample L-infinity
  std::size_t sample_count = 0;
};

/// Generates adversarial examples against source_model and measures
/// target_model on them; "white_box" when the two parameter sets are
/// bit-identical. The caller picks gradient_mode (the convention is
/// primary-only for cross-entropy-trained sources, primary-plus-complement
/// for alternating-objective sources).
AttackReport evaluate_attack(const ModelState& target_model,
                             const ModelState& source_model,
                             const LabeledBatch& batch,
                             const AttackConfig& config);

/// The adversarial inputs used by evaluate_attack, for export.
Tensor adversarial_inputs(const ModelState& source_model,
                          const LabeledBatch& batch, const AttackConfig& config);

void write_attack_report_json(const AttackReport& report,
                              const std::filesystem::path& path,
                              std::uint64_t config_hash, std::uint64_t seed);

/// Summary fields as '#' comment lines, then one row per sample with its
/// perturbation norm.
void write_attack_report_csv(const AttackReport& report,
                             const std::filesystem::path& path,
                             std::uint64_t config_hash, std::uint64_t seed);

}  // namespace cot
