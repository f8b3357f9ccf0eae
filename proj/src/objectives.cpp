#include "cot/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cot {

namespace {

void check_labels(std::span<const int> labels, std::size_t n, std::size_t k) {
  if (labels.size() != n) {
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match batch size " + std::to_string(n));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " is out of range for K=" +
                       std::to_string(k));
    }
  }
}

void check_prob_batch(const ProbBatch& probs) {
  if (probs.probs.rank() != 2) {
    throw InputError("ProbBatch must be NxK, got " +
                     probs.probs.shape_string());
  }
  const std::size_t n = probs.batch_size();
  const std::size_t k = probs.num_classes();
  if (k < 2) {
    throw InputError("ProbBatch needs K >= 2, got K=" + std::to_string(k));
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double p : probs.probs.row(i)) {
      if (!(p >= -kProbEpsilon && p <= 1.0 + 1e-9)) {
        throw InputError("ProbBatch row " + std::to_string(i) +
                         " has an entry outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InputError("ProbBatch row " + std::to_string(i) +
                       " does not sum to 1");
    }
  }
}

}  // namespace

double complement_entropy_row(std::span<const double> probs, int label) {
  const std::size_t k = probs.size();
  if (k < 2) {
    throw InputError("complement entropy needs K >= 2, got K=" +
                     std::to_string(k));
  }
  if (k == 2) {
    return 0.0;  // a single complement class has zero entropy
  }
  const double complement_mass = 1.0 - probs[static_cast<std::size_t>(label)];
  if (complement_mass <= kProbEpsilon) {
    return 0.0;
  }
  double entropy = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == static_cast<std::size_t>(label)) continue;
    const double q = probs[j] / complement_mass;
    if (q > kProbEpsilon) {
      entropy -= q * std::log(q);
    }
  }
  // Roundoff can land a hair outside the provable range [0, ln(K-1)];
  // clamp back so the mathematical bound holds for every caller.
  return std::clamp(entropy, 0.0, std::log(static_cast<double>(k - 1)));
}

LossResult cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  check_labels(labels, n, k);

  ProbBatch probs = softmax(logits);
  const double inv_n = 1.0 / static_cast<double>(n);

  double value = 0.0;
  Tensor grad({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(labels[i]);
    auto zi = logits.row(i);
    value += (log_sum_exp(zi) - zi[g]) * inv_n;
    auto pi = probs.probs.row(i);
    auto gi = grad.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      gi[j] = pi[j] * inv_n;
    }
    gi[g] -= inv_n;
  }
  return LossResult{value, std::move(grad)};
}

double complement_entropy(const ProbBatch& probs,
                          std::span<const int> labels) {
  check_prob_batch(probs);
  const std::size_t n = probs.batch_size();
  check_labels(labels, n, probs.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += complement_entropy_row(probs.probs.row(i), labels[i]);
  }
  return total / static_cast<double>(n);
}

double normalized_complement_entropy(const ProbBatch& probs,
                                     std::span<const int> labels) {
  return complement_entropy(probs, labels) /
         static_cast<double>(probs.num_classes() - 1);
}

LossResult complement_loss(const Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  check_labels(labels, n, k);
  if (k < 2) {
    throw InputError("complement loss needs K >= 2, got K=" +
                     std::to_string(k));
  }
  if (k == 2) {
    // The lone complement class carries probability 1 after renormalization,
    // so the entropy is identically zero and so is its gradient.
    return LossResult{0.0, Tensor({n, k})};
  }

  ProbBatch probs = softmax(logits);
  const double scale = -1.0 / (static_cast<double>(n) * static_cast<double>(k - 1));

  double entropy_sum = 0.0;
  Tensor grad({n, k});
  std::vector<double> dh_dp(k);  // d(sample entropy)/d(probability)
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = static_cast<std::size_t>(labels[i]);
    auto pi = probs.probs.row(i);
    const double complement_mass = 1.0 - pi[g];

    double entropy = 0.0;
    if (complement_mass <= kProbEpsilon) {
      std::fill(dh_dp.begin(), dh_dp.end(), 0.0);
    } else {
      double raw_entropy = 0.0;  // unclamped, consistent with dh_dp below
      double kept_mass = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == g) continue;
        const double q = pi[j] / complement_mass;
        if (q > kProbEpsilon) {
          raw_entropy -= q * std::log(q);
          kept_mass += q;
          dh_dp[j] = -(std::log(q) + 1.0) / complement_mass;
        } else {
          dh_dp[j] = 0.0;  // p*log(p) -> 0 convention flattens the term
        }
      }
      dh_dp[g] = (raw_entropy - kept_mass) / complement_mass;
      entropy = std::clamp(raw_entropy, 0.0,
                           std::log(static_cast<double>(k - 1)));
    }
    entropy_sum += entropy;

    // Chain through the softmax Jacobian:
    // dz_m = p_m * (a_m - sum_k a_k p_k) with a = scale * dh_dp.
    double weighted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      weighted += dh_dp[j] * pi[j];
    }
    auto gi = grad.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      gi[j] = scale * pi[j] * (dh_dp[j] - weighted);
    }
  }

  const double value = scale * entropy_sum;
  return LossResult{value, std::move(grad)};
}

Tensor finite_difference_grad(const LossFn& loss_fn, const Tensor& logits,
                              std::span<const int> labels, double step) {
  if (!(step > 0.0)) {
    throw InputError("finite_difference_grad: step must be positive");
  }
  Tensor probe = logits;
  Tensor grad(std::vector<std::size_t>(logits.shape()));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double original = probe.at(i);
    probe.at(i) = original + step;
    const double plus = loss_fn(probe, labels);
    probe.at(i) = original - step;
    const double minus = loss_fn(probe, labels);
    probe.at(i) = original;
    grad.at(i) = (plus - minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace cot
