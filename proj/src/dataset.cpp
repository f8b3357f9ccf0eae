#include "cot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cot/errors.hpp"

namespace cot {

void Dataset::validate() const {
  if (labels.empty()) throw InputError("dataset: empty");
  if (features.shape().size() != 2 || features.shape()[0] != labels.size()) {
    throw DimensionError("dataset: features shape " +
                         Tensor::shape_string(features.shape()) +
                         " does not match " + std::to_string(labels.size()) +
                         " labels");
  }
  if (num_classes < 2) throw InputError("dataset: need at least two classes");
  std::vector<bool> seen(num_classes, false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InputError("dataset: label " + std::to_string(y) + " at row " +
                       std::to_string(i) + " outside 0.." +
                       std::to_string(num_classes - 1));
    }
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (!seen[c]) {
      throw InputError("dataset: class " + std::to_string(c) +
                       " has no samples");
    }
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw InputError("dataset: non-finite feature value");
  }
}

namespace {

// i-th of `count` points evenly spaced over [0, hi], endpoints included.
double linspace_at(std::size_t i, std::size_t count, double hi) {
  if (count <= 1) return 0.0;
  return hi * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::string format_params(std::initializer_list<std::pair<const char*, double>> kv) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [k, v] : kv) {
    if (!first) out << " ";
    first = false;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s=%g", k, v);
    out << buf;
  }
  return out.str();
}

}  // namespace

Dataset gen_two_moons(std::size_t n, double noise, Rng& rng) {
  if (n < 2) throw InputError("gen_two_moons: need n >= 2");
  if (noise < 0.0) throw InputError("gen_two_moons: noise must be >= 0");
  const std::size_t n1 = n / 2;
  const std::size_t n0 = n - n1;
  std::vector<double> xy;
  xy.reserve(2 * n);
  std::vector<int> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n0; ++i) {
    const double t = linspace_at(i, n0, std::numbers::pi);
    xy.push_back(std::cos(t) + noise * rng.normal());
    xy.push_back(std::sin(t) + noise * rng.normal());
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double t = linspace_at(i, n1, std::numbers::pi);
    xy.push_back(1.0 - std::cos(t) + noise * rng.normal());
    xy.push_back(0.5 - std::sin(t) + noise * rng.normal());
    labels.push_back(1);
  }
  Dataset ds;
  ds.features = Tensor({n, 2}, std::move(xy));
  ds.labels = std::move(labels);
  ds.num_classes = 2;
  ds.name = "two_moons";
  ds.generation_params = format_params({{"n", static_cast<double>(n)}, {"noise", noise}});
  ds.validate();
  return ds;
}

Dataset gen_spirals(std::size_t n, std::size_t classes, double noise, Rng& rng) {
  if (classes < 2) throw InputError("gen_spirals: need at least two classes");
  if (n < classes) throw InputError("gen_spirals: need at least one sample per class");
  if (noise < 0.0) throw InputError("gen_spirals: noise must be >= 0");
  std::vector<double> xy;
  xy.reserve(2 * n);
  std::vector<int> labels;
  labels.reserve(n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t count = n / classes + (c < n % classes ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      const double u = linspace_at(i, count, 1.0);
      const double r = 2.0 * (0.15 + 0.85 * u);
      const double theta = two_pi * u + two_pi * static_cast<double>(c) /
                                            static_cast<double>(classes);
      xy.push_back(r * std::cos(theta) + noise * rng.normal());
      xy.push_back(r * std::sin(theta) + noise * rng.normal());
      labels.push_back(static_cast<int>(c));
    }
  }
  Dataset ds;
  ds.features = Tensor({n, 2}, std::move(xy));
  ds.labels = std::move(labels);
  ds.num_classes = classes;
  ds.name = "spirals";
  ds.generation_params =
      format_params({{"n", static_cast<double>(n)},
                     {"classes", static_cast<double>(classes)},
                     {"noise", noise}});
  ds.validate();
  return ds;
}

SplitResult split(const Dataset& dataset, double train_fraction, Rng& rng,
                  bool stratified) {
  dataset.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InputError("split: train_fraction must lie strictly between 0 and 1");
  }
  const std::size_t m = dataset.size();
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
    for (std::size_t i = 0; i < m; ++i) {
      by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& rows = by_class[c];
      rng.shuffle(rows);
      const std::size_t take = static_cast<std::size_t>(
          std::floor(train_fraction * static_cast<double>(rows.size()) + 0.5));
      if (take == 0 || take == rows.size()) {
        throw InputError("split: stratified split would leave class " +
                         std::to_string(c) + " empty on one side");
      }
      train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + take);
      test_rows.insert(test_rows.end(), rows.begin() + take, rows.end());
    }
    rng.shuffle(train_rows);
    rng.shuffle(test_rows);
  } else {
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t take = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(m) + 0.5));
    if (take == 0 || take == m) {
      throw InputError("split: fraction leaves one side empty");
    }
    train_rows.assign(order.begin(), order.begin() + take);
    test_rows.assign(order.begin() + take, order.end());
  }

  auto build = [&dataset](const std::vector<std::size_t>& rows, const char* part) {
    Dataset out;
    std::vector<double> data;
    data.reserve(rows.size() * dataset.dim());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
      auto row = dataset.features.row(r);
      data.insert(data.end(), row.begin(), row.end());
      out.labels.push_back(dataset.labels[r]);
    }
    out.features = Tensor({rows.size(), dataset.dim()}, std::move(data));
    out.num_classes = dataset.num_classes;
    out.name = dataset.name + "/" + part;
    out.generation_params = dataset.generation_params;
    out.value_range = dataset.value_range;
    return out;
  };
  SplitResult result{build(train_rows, "train"), build(test_rows, "test")};
  result.train.validate();
  result.test.validate();
  return result;
}

NormalizationRecord standardize(Dataset& train, Dataset& test) {
  if (train.size() == 0) throw InputError("standardize: empty training split");
  if (train.dim() != test.dim()) {
    throw DimensionError("standardize: train dimension " +
                         std::to_string(train.dim()) + " vs test " +
                         std::to_string(test.dim()));
  }
  const std::size_t d = train.dim();
  const std::size_t m = train.size();
  NormalizationRecord rec;
  rec.mean.assign(d, 0.0);
  rec.stddev.assign(d, 0.0);
  rec.zero_variance.assign(d, false);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = train.features.row(i);
    for (std::size_t j = 0; j < d; ++j) rec.mean[j] += row[j];
  }
  for (std::size_t j = 0; j < d; ++j) rec.mean[j] /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = train.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = row[j] - rec.mean[j];
      rec.stddev[j] += dv * dv;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    rec.stddev[j] = std::sqrt(rec.stddev[j] / static_cast<double>(m));
    if (rec.stddev[j] <= 1e-12) {
      rec.stddev[j] = 1.0;
      rec.zero_variance[j] = true;
    }
  }
  auto apply = [&rec, d](Dataset& ds) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto row = ds.features.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = (row[j] - rec.mean[j]) / rec.stddev[j];
      }
    }
    ds.normalization = rec;
    ds.value_range.reset();
  };
  apply(train);
  apply(test);
  return rec;
}

void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < dataset.dim(); ++j) out << "x" << j << ",";
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto row = dataset.features.row(i);
    for (double v : row) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ",";
    }
    out << dataset.labels[i] << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledBatch as_batch(const Dataset& dataset) {
  return LabeledBatch{dataset.features, dataset.labels, dataset.num_classes};
}

LabeledBatch gather_batch(const Dataset& dataset,
                          std::span<const std::size_t> rows) {
  std::vector<double> data;
  data.reserve(rows.size() * dataset.dim());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= dataset.size()) {
      throw InputError("gather_batch: row index " + std::to_string(r) +
                       " out of range");
    }
    auto row = dataset.features.row(r);
    data.insert(data.end(), row.begin(), row.end());
    labels.push_back(dataset.labels[r]);
  }
  return LabeledBatch{Tensor({rows.size(), dataset.dim()}, std::move(data)),
                      std::move(labels), dataset.num_classes};
}

}  // namespace cot
