#pragma once

#include <cstdint>
#include <string>

namespace cot {

/// Acceptance thresholds for the finite-difference suite. Errors use
/// |analytic - numeric| / max(1, |numeric|), so tiny gradient components are
/// judged on absolute error and large ones on relative error.
inline constexpr double kLossGradTolerance = 1e-6;
inline constexpr double kModelGradTolerance = 1e-5;
inline constexpr double kFiniteDifferenceStep = 1e-5;

struct GradCheckResult {
  double max_loss_error = 0.0;   // losses as functions of logits
  double max_model_error = 0.0;  // losses through the full model
  std::size_t loss_batches = 0;
  std::size_t model_cases = 0;
  bool passed = false;
  std::string worst_offender;
};

/// Compares every analytic gradient in the library against central finite
/// differences: both losses over random logit batches (N <= 8, K <= 12), and
/// parameter + input gradients of both losses through random small MLPs
/// (D <= 6, up to two hidden layers of <= 8, K <= 5). `corrupt` deliberately
/// damages one analytic gradient, for exercising the failure path.
GradCheckResult run_gradient_checks(std::uint64_t seed,
                                    std::size_t loss_batches = 1000,
                                    bool corrupt = false);

}  // namespace cot
