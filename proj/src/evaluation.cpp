#include "cot/evaluation.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cot/errors.hpp"

namespace cot {

std::size_t argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

namespace {

void check_dims(const ModelState& model, const Dataset& data) {
  if (data.dim() != model.architecture.input_dim ||
      data.num_classes != model.architecture.num_classes) {
    throw InputError(
        "dataset (D=" + std::to_string(data.dim()) +
        ", K=" + std::to_string(data.num_classes) + ") does not match model (D=" +
        std::to_string(model.architecture.input_dim) +
        ", K=" + std::to_string(model.architecture.num_classes) + ")");
  }
}

}  // namespace

EvalReport evaluate(const ModelState& model, const Dataset& data) {
  check_dims(model, data);
  if (data.size() == 0) throw InputError("evaluate: empty dataset");
  const std::size_t m = data.size();
  const std::size_t k = data.num_classes;

  const Tensor logits = embeddings(model, data.features);
  const ProbBatch probs = softmax(logits);

  EvalReport report;
  report.sample_count = m;
  report.num_classes = k;
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));

  double conf_sum = 0.0;
  double comp_entropy_sum = 0.0;
  double max_comp_sum = 0.0;
  const double norm = static_cast<double>(k - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const auto g = static_cast<std::size_t>(data.labels[i]);
    auto pi = probs.probs.row(i);
    const std::size_t pred = argmax_lowest(pi);
    report.confusion[g][pred] += 1;
    conf_sum += pi[g];
    comp_entropy_sum += complement_entropy_row(pi, data.labels[i]) / norm;
    double max_comp = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != g && pi[j] > max_comp) max_comp = pi[j];
    }
    max_comp_sum += max_comp;
  }

  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += report.confusion[c][c];
  report.error_rate = 1.0 - static_cast<double>(correct) / static_cast<double>(m);
  report.mean_true_confidence = conf_sum / static_cast<double>(m);
  report.mean_complement_entropy = comp_entropy_sum / static_cast<double>(m);
  report.mean_max_complement_prob = max_comp_sum / static_cast<double>(m);
  return report;
}

double error_rate(const ModelState& model, const Dataset& data) {
  check_dims(model, data);
  if (data.size() == 0) throw InputError("evaluate: empty dataset");
  const Tensor logits = embeddings(model, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax_lowest(logits.row(i)) ==
        static_cast<std::size_t>(data.labels[i])) {
      ++correct;
    }
  }
  return 1.0 - static_cast<double>(correct) / static_cast<double>(data.size());
}

void write_eval_report_json(const EvalReport& report,
                            const std::filesystem::path& path,
                            std::uint64_t config_hash, std::uint64_t seed) {
  nlohmann::ordered_json j;
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(config_hash));
  j["config_hash"] = hash_hex;
  j["seed"] = seed;
  j["sample_count"] = report.sample_count;
  j["num_classes"] = report.num_classes;
  j["error_rate"] = report.error_rate;
  j["mean_true_confidence"] = report.mean_true_confidence;
  j["mean_complement_entropy"] = report.mean_complement_entropy;
  j["mean_max_complement_prob"] = report.mean_max_complement_prob;
  j["confusion"] = report.confusion;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void write_eval_report_csv(const EvalReport& report,
                           const std::filesystem::path& path,
                           std::uint64_t config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[160];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx seed=%llu\n",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  out << buf;
  out << "error_rate,mean_true_confidence,mean_complement_entropy,"
         "mean_max_complement_prob,sample_count,num_classes\n";
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,", report.error_rate,
                report.mean_true_confidence, report.mean_complement_entropy,
                report.mean_max_complement_prob);
  out << buf << report.sample_count << "," << report.num_classes << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void export_embeddings(const ModelState& model, const Dataset& data,
                       const std::filesystem::path& path,
                       std::uint64_t config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char head[96];
  std::snprintf(head, sizeof head, "# config_hash=%016llx seed=%llu\n",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  out << head;
  const std::size_t k = model.architecture.num_classes;
  for (std::size_t j = 0; j < k; ++j) out << "logit_" << j << ",";
  out << "label\n";
  if (data.size() > 0) {
    check_dims(model, data);
    const Tensor logits = embeddings(model, data.features);
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (double v : logits.row(i)) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << ",";
      }
      out << data.labels[i] << "\n";
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace cot
