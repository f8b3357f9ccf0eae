#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cot/dataset.hpp"
#include "cot/model.hpp"

namespace cot {

/// Classification metrics plus the prediction-distribution statistics that
/// quantify how evenly probability mass is spread over the non-true classes.
struct EvalReport {
  double error_rate = 0.0;
  double mean_true_confidence = 0.0;       // E[p_g]
  double mean_complement_entropy = 0.0;    // mean normalized, in [0, ln(K-1)/(K-1)]
  double mean_max_complement_prob = 0.0;   // E[max over j != g of p_j]
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t sample_count = 0;
  std::size_t num_classes = 0;
};

/// Index of the largest entry; ties break to the lowest index.
std::size_t argmax_lowest(std::span<const double> row);

/// Single pass over the dataset; deterministic for fixed inputs.
EvalReport evaluate(const ModelState& model, const Dataset& data);

/// Just the error rate, computed exactly as evaluate() computes it.
double error_rate(const ModelState& model, const Dataset& data);

void write_eval_report_json(const EvalReport& report,
                            const std::filesystem::path& path,
                            std::uint64_t config_hash, std::uint64_t seed);

void write_eval_report_csv(const EvalReport& report,
                           const std::filesystem::path& path,
                           std::uint64_t config_hash, std::uint64_t seed);

/// CSV of pre-softmax logit vectors: a provenance comment line, then columns
/// logit_0..logit_{K-1},label, one row per sample, 17 significant digits
/// (lossless for 64-bit reals). An empty dataset yields a header-only file.
void export_embeddings(const ModelState& model, const Dataset& data,
                       const std::filesystem::path& path,
                       std::uint64_t config_hash, std::uint64_t seed);

}  // namespace cot
