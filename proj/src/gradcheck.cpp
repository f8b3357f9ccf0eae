#include "cot/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cot/model.hpp"
#include "cot/objectives.hpp"
#include "cot/rng.hpp"
#include "cot/tensor.hpp"

namespace cot {
namespace {

double mixed_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

struct Tracker {
  double* slot;
  double value = 0.0;
  std::string description;

  void offer(double err, const std::string& what) {
    if (err > *slot) *slot = err;
    if (err > value) {
      value = err;
      description = what;
    }
  }
};

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> labels(n);
  for (int& y : labels) y = static_cast<int>(rng.below(k));
  return labels;
}

Tensor random_logits(Rng& rng, std::size_t n, std::size_t k, double scale) {
  Tensor t({n, k});
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

void check_grid(const Tensor& analytic, const Tensor& numeric, Tracker& tracker,
                const std::string& label) {
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = mixed_error(analytic.at(i), numeric.at(i));
    if (err > tracker.value || err > *tracker.slot) {
      char where[32];
      std::snprintf(where, sizeof where, " coord %zu", i);
      tracker.offer(err, label + where);
    }
  }
}

// Central differences over a single parameter tensor of the model.
void model_param_fd(ModelState& model, const LabeledBatch& batch,
                    const LossFn& loss, Tensor& param, const Tensor& analytic,
                    Tracker& tracker, const std::string& label) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double original = param.at(i);
    param.at(i) = original + kFiniteDifferenceStep;
    const double plus =
        loss(forward(model, batch.inputs).logits(), batch.labels);
    param.at(i) = original - kFiniteDifferenceStep;
    const double minus =
        loss(forward(model, batch.inputs).logits(), batch.labels);
    param.at(i) = original;
    const double numeric = (plus - minus) / (2.0 * kFiniteDifferenceStep);
    const double err = mixed_error(analytic.at(i), numeric);
    if (err > tracker.value || err > *tracker.slot) {
      char where[32];
      std::snprintf(where, sizeof where, " coord %zu", i);
      tracker.offer(err, label + where);
    }
  }
}

}  // namespace

GradCheckResult run_gradient_checks(std::uint64_t seed,
                                    std::size_t loss_batches, bool corrupt) {
  GradCheckResult result;
  Rng rng = Rng(seed).split(streams::kInit);

  Tracker loss_tracker{&result.max_loss_error};
  Tracker model_tracker{&result.max_model_error};

  const LossFn ce_value = [](const Tensor& z, std::span<const int> y) {
    return cross_entropy(z, y).value;
  };
  const LossFn comp_value = [](const Tensor& z, std::span<const int> y) {
    return complement_loss(z, y).value;
  };

  for (std::size_t b = 0; b < loss_batches; ++b) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t k = 2 + rng.below(11);
    const double scale = 0.5 + 3.5 * rng.uniform();
    const Tensor logits = random_logits(rng, n, k, scale);
    const std::vector<int> labels = random_labels(rng, n, k);
    char tag[48];

    Tensor ce_grad = cross_entropy(logits, labels).grad_logits;
    if (corrupt && b == 0) ce_grad.at(0) += 1e-3;
    std::snprintf(tag, sizeof tag, "cross_entropy batch %zu", b);
    check_grid(ce_grad,
               finite_difference_grad(ce_value, logits, labels,
                                      kFiniteDifferenceStep),
               loss_tracker, tag);

    const Tensor comp_grad = complement_loss(logits, labels).grad_logits;
    std::snprintf(tag, sizeof tag, "complement_loss batch %zu", b);
    check_grid(comp_grad,
               finite_difference_grad(comp_value, logits, labels,
                                      kFiniteDifferenceStep),
               loss_tracker, tag);
  }
  result.loss_batches = loss_batches;

  const std::size_t model_cases = std::max<std::size_t>(1, loss_batches / 5);
  for (std::size_t c = 0; c < model_cases; ++c) {
    // Finite differences are meaningless within h of a ReLU kink, so redraw
    // any case where a hidden pre-activation sits too close to zero (probe
    // steps shift pre-activations by well under the 1e-3 guard).
    MlpArchitecture arch;
    ModelState model;
    LabeledBatch batch;
    for (;;) {
      arch = MlpArchitecture{};
      arch.input_dim = 1 + rng.below(6);
      const std::size_t depth = rng.below(3);
      for (std::size_t h = 0; h < depth; ++h) {
        arch.hidden_dims.push_back(1 + rng.below(8));
      }
      arch.num_classes = 2 + rng.below(4);
      model = init_model(arch, rng);

      const std::size_t n = 1 + rng.below(6);
      batch = LabeledBatch{random_logits(rng, n, arch.input_dim, 1.5),
                           random_labels(rng, n, arch.num_classes),
                           arch.num_classes};
      const ForwardTrace probe_trace = forward(model, batch.inputs);
      bool near_kink = false;
      for (std::size_t l = 0; l + 1 < probe_trace.pre_activations.size(); ++l) {
        for (double z : probe_trace.pre_activations[l].data()) {
          if (std::abs(z) < 1e-3) near_kink = true;
        }
      }
      if (!near_kink) break;
    }

    for (int which = 0; which < 2; ++which) {
      const LossFn& loss = which == 0 ? ce_value : comp_value;
      const char* name = which == 0 ? "cross_entropy" : "complement_loss";

      const ForwardTrace trace = forward(model, batch.inputs);
      const LossResult at_logits =
          which == 0 ? cross_entropy(trace.logits(), batch.labels)
                     : complement_loss(trace.logits(), batch.labels);
      const ParamGrads grads = backward(model, trace, at_logits.grad_logits);
      const Tensor input_grads =
          backward_inputs(model, trace, at_logits.grad_logits);

      char tag[64];
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        std::snprintf(tag, sizeof tag, "%s model %zu layer %zu weight", name, c, l);
        model_param_fd(model, batch, loss, model.layers[l].weight,
                       grads.layers[l].weight, model_tracker, tag);
        std::snprintf(tag, sizeof tag, "%s model %zu layer %zu bias", name, c, l);
        model_param_fd(model, batch, loss, model.layers[l].bias,
                       grads.layers[l].bias, model_tracker, tag);
      }

      // Inputs get the same treatment as parameters.
      std::snprintf(tag, sizeof tag, "%s model %zu inputs", name, c);
      Tensor numeric_inputs(std::vector<std::size_t>(batch.inputs.shape()));
      LabeledBatch probe{batch.inputs, batch.labels, batch.num_classes};
      for (std::size_t i = 0; i < probe.inputs.size(); ++i) {
        const double original = probe.inputs.at(i);
        probe.inputs.at(i) = original + kFiniteDifferenceStep;
        const double plus =
            loss(forward(model, probe.inputs).logits(), probe.labels);
        probe.inputs.at(i) = original - kFiniteDifferenceStep;
        const double minus =
            loss(forward(model, probe.inputs).logits(), probe.labels);
        probe.inputs.at(i) = original;
        numeric_inputs.at(i) = (plus - minus) / (2.0 * kFiniteDifferenceStep);
      }
      check_grid(input_grads, numeric_inputs, model_tracker, tag);
    }
  }
  result.model_cases = model_cases;

  result.passed = result.max_loss_error < kLossGradTolerance &&
                  result.max_model_error < kModelGradTolerance;
  result.worst_offender = loss_tracker.value >= model_tracker.value
                              ? loss_tracker.description
                              : model_tracker.description;
  return result;
}

}  // namespace cot
