#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cot/objectives.hpp"
#include "cot/rng.hpp"
#include "cot/tensor.hpp"

namespace cot {

/// Per-dimension statistics of the training split, applied verbatim to test
/// data. Dimensions with no spread keep stddev 1 and are flagged.
struct NormalizationRecord {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> zero_variance;
};

struct Dataset {
  Tensor features;  // M x D
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::string name;
  std::string generation_params;
  /// Natural input bounds when the data has any (IDX images: [0,1]).
  /// Standardized synthetic data has none.
  std::optional<std::pair<double, double>> value_range;
  std::optional<NormalizationRecord> normalization;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const {
    return features.shape().size() == 2 ? features.shape()[1] : 0;
  }
  /// Enforces label range, presence of every class, and finite features.
  void validate() const;
};

/// Two interleaved half-circles, K=2, noise as per-coordinate Gaussian stddev.
Dataset gen_two_moons(std::size_t n, double noise, Rng& rng);

/// K interleaved spiral arms with angular offset 2*pi/K.
Dataset gen_spirals(std::size_t n, std::size_t classes, double noise, Rng& rng);

/// Seven-segment digit glyphs rendered into 28x28 images with random affine
/// jitter and pixel noise, K=10, features in [0,1].
Dataset gen_digits(std::size_t n, double noise, Rng& rng);

/// IDX ingestion: big-endian, images magic 2051 (dims M, rows, cols), labels
/// magic 2049; pixel bytes scaled to [0,1] by /255.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Writes features (must lie in [0,1], quantized to bytes) and labels in IDX
/// form. rows/cols 0 means auto: square if D is a perfect square, else 1 x D.
void write_idx(const Dataset& dataset, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path, std::size_t rows = 0,
               std::size_t cols = 0);

struct SplitResult {
  Dataset train;
  Dataset test;
};

/// Seeded shuffle then split; n_train = round(fraction * M). Plain mode
/// verifies both parts still contain every class; stratified mode splits
/// within each class.
SplitResult split(const Dataset& dataset, double train_fraction, Rng& rng,
                  bool stratified = false);

/// Centers and scales both splits by the training split's statistics,
/// recording them on the datasets. Returns the record.
NormalizationRecord standardize(Dataset& train, Dataset& test);

/// Header row x0,...,x{D-1},label; values rendered with 17 significant digits.
void write_dataset_csv(const Dataset& dataset, const std::filesystem::path& path);

LabeledBatch as_batch(const Dataset& dataset);
LabeledBatch gather_batch(const Dataset& dataset, std::span<const std::size_t> rows);

}  // namespace cot
