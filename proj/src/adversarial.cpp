#include "cot/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cot/errors.hpp"
#include "cot/evaluation.hpp"

namespace cot {

std::string to_string(AttackKind kind) {
  return kind == AttackKind::kFgsm ? "fgsm" : "ifgsm";
}

std::string to_string(GradientMode mode) {
  return mode == GradientMode::kPrimaryOnly ? "primary_only"
                                            : "primary_plus_complement";
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0)) throw InputError("attack: epsilon must be >= 0");
  if (epsilon > 0.1 && !allow_large_epsilon) {
    throw InputError(
        "attack: epsilon > 0.1 requires the allow_large_epsilon override");
  }
  if (kind == AttackKind::kIfgsm) {
    if (iterations < 1) throw InputError("attack: iterations must be >= 1");
    if (step_size < 0.0) throw InputError("attack: step_size must be >= 0");
  }
  if (clip_range && !(clip_range->first < clip_range->second)) {
    throw InputError("attack: clip range must have lo < hi");
  }
}

namespace {

void check_batch(const ModelState& model, const LabeledBatch& batch) {
  if (batch.size() == 0) throw InputError("attack: empty batch");
  if (batch.num_classes != model.architecture.num_classes) {
    throw InputError("attack: batch K=" + std::to_string(batch.num_classes) +
                     " does not match model K=" +
                     std::to_string(model.architecture.num_classes));
  }
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

Tensor input_gradient(const ModelState& model, const LabeledBatch& batch,
                      InputObjective objective, ComplementSign sign) {
  check_batch(model, batch);
  const ForwardTrace trace = forward(model, batch.inputs);

  Tensor grad;
  if (objective == InputObjective::kPrimary || objective == InputObjective::kSum) {
    LossResult ce = cross_entropy(trace.logits(), batch.labels);
    grad = backward_inputs(model, trace, ce.grad_logits);
  }
  if (objective == InputObjective::kComplement ||
      objective == InputObjective::kSum) {
    LossResult comp = complement_loss(trace.logits(), batch.labels);
    Tensor comp_grad = backward_inputs(model, trace, comp.grad_logits);
    if (sign == ComplementSign::kRawEntropy) {
      for (double& v : comp_grad.data()) v = -v;
    }
    if (objective == InputObjective::kComplement) {
      grad = std::move(comp_grad);
    } else {
      for (std::size_t i = 0; i < grad.size(); ++i) {
        grad.at(i) += comp_grad.at(i);
      }
    }
  }
  return grad;
}

namespace {

InputObjective objective_for(GradientMode mode) {
  return mode == GradientMode::kPrimaryOnly ? InputObjective::kPrimary
                                            : InputObjective::kSum;
}

void clip_to_range(Tensor& x, const std::optional<std::pair<double, double>>& range) {
  if (!range) return;
  for (double& v : x.data()) v = std::clamp(v, range->first, range->second);
}

}  // namespace

Tensor fgsm(const ModelState& model, const LabeledBatch& batch,
            const AttackConfig& config) {
  config.validate();
  if (config.kind != AttackKind::kFgsm) {
    throw InputError("fgsm called with a non-fgsm config");
  }
  const Tensor grad = input_gradient(model, batch, objective_for(config.gradient_mode),
                                     config.complement_sign);
  Tensor adv = batch.inputs;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    adv.at(i) += config.epsilon * sign0(grad.at(i));
  }
  clip_to_range(adv, config.clip_range);
  return adv;
}

Tensor ifgsm(const ModelState& model, const LabeledBatch& batch,
             const AttackConfig& config) {
  config.validate();
  if (config.kind != AttackKind::kIfgsm) {
    throw InputError("ifgsm called with a non-ifgsm config");
  }
  const double step = config.step_size > 0.0
                          ? config.step_size
                          : config.epsilon / static_cast<double>(config.iterations);
  const Tensor& x0 = batch.inputs;
  Tensor adv = x0;
  LabeledBatch probe{Tensor(), batch.labels, batch.num_classes};
  for (std::size_t t = 0; t < config.iterations; ++t) {
    probe.inputs = adv;
    const Tensor grad = input_gradient(model, probe,
                                       objective_for(config.gradient_mode),
                                       config.complement_sign);
    for (std::size_t i = 0; i < adv.size(); ++i) {
      double v = adv.at(i) + step * sign0(grad.at(i));
      v = std::min(v, x0.at(i) + config.epsilon);
      v = std::max(v, x0.at(i) - config.epsilon);
      adv.at(i) = v;
    }
    clip_to_range(adv, config.clip_range);
  }
  return adv;
}

Tensor adversarial_inputs(const ModelState& source_model,
                          const LabeledBatch& batch, const AttackConfig& config) {
  return config.kind == AttackKind::kFgsm ? fgsm(source_model, batch, config)
                                          : ifgsm(source_model, batch, config);
}

AttackReport evaluate_attack(const ModelState& target_model,
                             const ModelState& source_model,
                             const LabeledBatch& batch,
                             const AttackConfig& config) {
  config.validate();
  check_batch(source_model, batch);
  check_batch(target_model, batch);
  if (target_model.architecture.input_dim != source_model.architecture.input_dim ||
      target_model.architecture.num_classes !=
          source_model.architecture.num_classes) {
    throw InputError("attack: target and source models disagree on dimensions");
  }

  const Tensor adv = adversarial_inputs(source_model, batch, config);

  AttackReport report;
  report.kind = to_string(config.kind);
  report.protocol = param_fingerprint(target_model) == param_fingerprint(source_model)
                        ? "white_box"
                        : "transfer";
  report.gradient_mode = to_string(config.gradient_mode);
  report.epsilon = config.epsilon;
  if (config.kind == AttackKind::kIfgsm) {
    report.iterations = config.iterations;
    report.step_size = config.step_size > 0.0
                           ? config.step_size
                           : config.epsilon / static_cast<double>(config.iterations);
  }
  report.clip_range = config.clip_range;
  report.sample_count = batch.size();

  const Tensor clean_logits = embeddings(target_model, batch.inputs);
  const Tensor adv_logits = embeddings(target_model, adv);
  std::size_t clean_correct = 0;
  std::size_t adv_correct = 0;
  report.perturbation_norms.reserve(batch.size());
  const std::size_t d = batch.inputs.cols();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto g = static_cast<std::size_t>(batch.labels[i]);
    if (argmax_lowest(clean_logits.row(i)) == g) ++clean_correct;
    if (argmax_lowest(adv_logits.row(i)) == g) ++adv_correct;
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      norm = std::max(norm, std::abs(adv.at(i, j) - batch.inputs.at(i, j)));
    }
    report.perturbation_norms.push_back(norm);
    report.max_perturbation = std::max(report.max_perturbation, norm);
  }
  const double m = static_cast<double>(batch.size());
  report.clean_error = 1.0 - static_cast<double>(clean_correct) / m;
  report.adversarial_error = 1.0 - static_cast<double>(adv_correct) / m;
  return report;
}

void write_attack_report_json(const AttackReport& report,
                              const std::filesystem::path& path,
                              std::uint64_t config_hash, std::uint64_t seed) {
  nlohmann::ordered_json j;
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                static_cast<unsigned long long>(config_hash));
  j["config_hash"] = hash_hex;
  j["seed"] = seed;
  j["kind"] = report.kind;
  j["protocol"] = report.protocol;
  j["gradient_mode"] = report.gradient_mode;
  j["epsilon"] = report.epsilon;
  j["iterations"] = report.iterations;
  j["step_size"] = report.step_size;
  if (report.clip_range) {
    j["clip"] = {report.clip_range->first, report.clip_range->second};
  } else {
    j["clip"] = nullptr;
  }
  j["sample_count"] = report.sample_count;
  j["clean_error"] = report.clean_error;
  j["adversarial_error"] = report.adversarial_error;
  j["max_perturbation"] = report.max_perturbation;
  j["perturbation_norms"] = report.perturbation_norms;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void write_attack_report_csv(const AttackReport& report,
                             const std::filesystem::path& path,
                             std::uint64_t config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[160];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx seed=%llu\n",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  out << buf;
  std::snprintf(buf, sizeof buf,
                "# kind=%s protocol=%s gradient_mode=%s epsilon=%.17g"
                " iterations=%zu step_size=%.17g\n",
                report.kind.c_str(), report.protocol.c_str(),
                report.gradient_mode.c_str(), report.epsilon, report.iterations,
                report.step_size);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "# clean_error=%.17g adversarial_error=%.17g"
                " max_perturbation=%.17g sample_count=%zu\n",
                report.clean_error, report.adversarial_error,
                report.max_perturbation, report.sample_count);
  out << buf;
  out << "sample,perturbation_norm\n";
  for (std::size_t i = 0; i < report.perturbation_norms.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i,
                  report.perturbation_norms[i]);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace cot
