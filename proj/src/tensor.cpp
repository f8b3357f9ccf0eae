#include "cot/tensor.hpp"

#include <cmath>
#include <sstream>

namespace cot {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.size() > 2) {
    throw DimensionError("tensor rank must be <= 2, got " +
                         Tensor::shape_string(shape));
  }
  for (std::size_t d : shape) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           Tensor::shape_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  cols_ = shape_.size() == 2 ? shape_[1] : 1;
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  cols_ = shape_.size() == 2 ? shape_[1] : 1;
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
  }
}

std::size_t Tensor::rows() const {
  if (rank() != 2) {
    throw DimensionError("rows() requires a rank-2 tensor, got " +
                         shape_string());
  }
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) {
    throw DimensionError("cols() requires a rank-2 tensor, got " +
                         shape_string());
  }
  return shape_[1];
}

std::string Tensor::shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " +
                         a.shape_string() + " vs " + b.shape_string());
  }
  const std::size_t m = a.rows();
  const std::size_t p = a.cols();
  const std::size_t q = b.cols();
  Tensor c({m, q});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  // i-k-j order keeps the inner loop contiguous in both B and C.
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = pc + i * q;
    const double* ai = pa + i * p;
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = ai[k];
      const double* bk = pb + k * q;
      for (std::size_t j = 0; j < q; ++j) {
        ci[j] += aik * bk[j];
      }
    }
  }
  return c;
}

Tensor transpose(const Tensor& m) {
  if (m.rank() != 2) {
    throw DimensionError("transpose requires a rank-2 tensor, got " +
                         m.shape_string());
  }
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  Tensor t({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      t.at(j, i) = m.at(i, j);
    }
  }
  return t;
}

ProbBatch softmax(const Tensor& logits) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax requires an NxK tensor, got " +
                         logits.shape_string());
  }
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (k < 2) {
    throw InputError("softmax requires at least 2 classes, got " +
                     std::to_string(k));
  }
  for (double v : logits.data()) {
    if (!std::isfinite(v)) {
      throw InputError("softmax: logits contain a non-finite value");
    }
  }
  Tensor probs({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    auto zi = logits.row(i);
    auto pi = probs.row(i);
    double zmax = zi[0];
    for (double v : zi) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      pi[j] = std::exp(zi[j] - zmax);
      sum += pi[j];
    }
    for (std::size_t j = 0; j < k; ++j) pi[j] /= sum;
  }
  return ProbBatch{std::move(probs)};
}

double log_sum_exp(std::span<const double> row) {
  if (row.empty()) {
    throw InputError("log_sum_exp: empty row");
  }
  double zmax = row[0];
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw InputError("log_sum_exp: non-finite entry");
    }
    zmax = std::max(zmax, v);
  }
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - zmax);
  return zmax + std::log(sum);
}

}  // namespace cot
