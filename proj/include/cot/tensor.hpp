#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cot/errors.hpp"

namespace cot {

/// Dense tensor of 64-bit reals in row-major order, rank <= 2.
///
/// The flat data length always equals the product of the shape. Instances
/// are plain values: copyable, movable, safe to share read-only across
/// threads.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape) {
    return Tensor(std::move(shape));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// Row/column counts; valid for rank-2 tensors only.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Renders a shape as e.g. "[3x4]" for error messages.
  static std::string shape_string(const std::vector<std::size_t>& shape);
  std::string shape_string() const { return shape_string(shape_); }

 private:
  std::vector<std::size_t> shape_;
  std::size_t cols_ = 0;  // stride of the leading dimension (1 for rank-1)
  std::vector<double> data_;
};

/// Predicted class probabilities, one row per sample, each row on the
/// probability simplex.
struct ProbBatch {
  Tensor probs;  // N x K

  std::size_t batch_size() const { return probs.rows(); }
  std::size_t num_classes() const { return probs.cols(); }
};

/// Standard matrix product; inner dimensions must agree.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& m);

/// Row-stabilized softmax: exp(z - max(z)) / sum. Throws InputError on
/// non-finite logits; requires K >= 2.
ProbBatch softmax(const Tensor& logits);

/// log(sum(exp(row))) computed as max + log(sum(exp(row - max))).
double log_sum_exp(std::span<const double> row);

}  // namespace cot
