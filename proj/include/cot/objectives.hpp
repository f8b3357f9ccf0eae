#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cot/tensor.hpp"

namespace cot {

/// Probabilities at or below this are handled under the p*log(p) = 0
/// convention; samples whose complement mass 1 - p_g falls at or below it
/// contribute zero complement entropy (the analytic limit).
inline constexpr double kProbEpsilon = 1e-12;

/// N input rows with their integer class labels in {0..K-1}.
struct LabeledBatch {
  Tensor inputs;            // N x D
  std::vector<int> labels;  // N
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
};

/// A scalar loss together with its gradient with respect to the logits that
/// produced it.
struct LossResult {
  double value = 0.0;
  Tensor grad_logits;  // same shape as the logits
};

/// Mean negative log-probability of the ground-truth class,
/// -(1/N) sum_i log p_{i,g_i}, evaluated stably from logits. The gradient is
/// (1/N)(softmax(logits) - onehot(g)) per row.
LossResult cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Mean per-sample Shannon entropy of the predicted distribution restricted
/// to the complement (non-ground-truth) classes, each sample renormalized by
/// 1 - p_g. Lies in [0, ln(K-1)]; the bound is attained exactly when every
/// sample's complement probabilities are uniform.
double complement_entropy(const ProbBatch& probs, std::span<const int> labels);

/// complement_entropy divided by (K-1); the same floating-point division is
/// used everywhere so the two agree exactly.
double normalized_complement_entropy(const ProbBatch& probs,
                                     std::span<const int> labels);

/// The complement objective as a minimized loss: the negative normalized
/// complement entropy of softmax(logits), with the analytic gradient with
/// respect to logits. Minimizing it drives each sample's complement
/// probabilities toward a uniform conditional distribution.
///
/// For K = 2 the single complement class has zero entropy for every input,
/// so value and gradient are identically zero.
LossResult complement_loss(const Tensor& logits, std::span<const int> labels);

/// Per-sample complement entropy of one probability row (shared by the batch
/// losses and the evaluation statistics).
double complement_entropy_row(std::span<const double> probs, int label);

using LossFn = std::function<double(const Tensor&, std::span<const int>)>;

/// Central-difference gradient estimate (f(z+he) - f(z-he)) / (2h) per
/// coordinate; the verification oracle for the analytic gradients above.
Tensor finite_difference_grad(const LossFn& loss_fn, const Tensor& logits,
                              std::span<const int> labels, double step);

}  // namespace cot
