#include "cot/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "cot/errors.hpp"
#include "cot/evaluation.hpp"

namespace cot {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kBaselineCe ? "baseline_ce" : "cot";
}

TrainMode train_mode_from_string(const std::string& text) {
  if (text == "baseline_ce") return TrainMode::kBaselineCe;
  if (text == "cot") return TrainMode::kCot;
  throw InputError("unknown training mode \"" + text +
                   "\"; expected baseline_ce or cot");
}

namespace {

std::vector<Layer> zero_like(const ModelState& model) {
  std::vector<Layer> buffers;
  buffers.reserve(model.layers.size());
  for (const Layer& layer : model.layers) {
    buffers.push_back(Layer{Tensor(std::vector<std::size_t>(layer.weight.shape())),
                            Tensor(std::vector<std::size_t>(layer.bias.shape()))});
  }
  return buffers;
}

void step_tensor(Tensor& theta, const Tensor& grad, Tensor& velocity,
                 double lr, double momentum, double decay) {
  const std::size_t n = theta.size();
  double* t = theta.data().data();
  const double* g = grad.data().data();
  double* v = velocity.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double adjusted = g[i] + decay * t[i];
    v[i] = momentum * v[i] + adjusted;
    t[i] -= lr * v[i];
  }
}

}  // namespace

OptimizerState make_optimizer(const ModelState& model, double learning_rate,
                              double momentum, double weight_decay,
                              bool separate_velocity) {
  if (learning_rate < 0.0 || momentum < 0.0 || weight_decay < 0.0) {
    throw InputError("optimizer hyperparameters must be >= 0");
  }
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  opt.momentum = momentum;
  opt.weight_decay = weight_decay;
  opt.velocity = zero_like(model);
  opt.separate_velocity = separate_velocity;
  if (separate_velocity) opt.complement_velocity = zero_like(model);
  return opt;
}

void sgd_step(ModelState& model, const ParamGrads& grads, OptimizerState& opt,
              bool apply_weight_decay, VelocitySlot slot) {
  if (grads.layers.size() != model.layers.size()) {
    throw InputError("sgd_step: gradient layer count " +
                     std::to_string(grads.layers.size()) +
                     " does not match model layer count " +
                     std::to_string(model.layers.size()));
  }
  std::vector<Layer>& velocity =
      (slot == VelocitySlot::kComplement && opt.separate_velocity)
          ? opt.complement_velocity
          : opt.velocity;
  if (velocity.size() != model.layers.size()) {
    throw InputError("sgd_step: optimizer velocity buffers do not match model");
  }
  const double decay = apply_weight_decay ? opt.weight_decay : 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!grads.layers[l].weight.same_shape(model.layers[l].weight) ||
        !grads.layers[l].bias.same_shape(model.layers[l].bias)) {
      throw InputError("sgd_step: gradient shapes for layer " +
                       std::to_string(l) + " do not match parameters");
    }
    step_tensor(model.layers[l].weight, grads.layers[l].weight,
                velocity[l].weight, opt.learning_rate, opt.momentum, decay);
    step_tensor(model.layers[l].bias, grads.layers[l].bias, velocity[l].bias,
                opt.learning_rate, opt.momentum, decay);
  }
}

double Schedule::lr_at(std::size_t epoch) const {
  double lr = initial_lr;
  for (std::size_t m : milestones) {
    if (m <= epoch) lr *= factor;
  }
  return lr;
}

void Schedule::validate() const {
  if (!(initial_lr > 0.0)) throw InputError("schedule: initial_lr must be > 0");
  if (!(factor > 0.0)) throw InputError("schedule: factor must be > 0");
  if (!std::is_sorted(milestones.begin(), milestones.end())) {
    throw InputError("schedule: milestones must be sorted ascending");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("train config: epochs must be >= 1");
  if (batch_size < 1) throw InputError("train config: batch_size must be >= 1");
  if (momentum < 0.0 || weight_decay < 0.0) {
    throw InputError("train config: momentum and weight_decay must be >= 0");
  }
  schedule.validate();
}

namespace {

template <typename Fn>
auto with_batch_context(std::size_t batch_index, Fn&& fn) {
  try {
    return fn();
  } catch (const DimensionError& e) {
    throw DimensionError("batch " + std::to_string(batch_index) + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError("batch " + std::to_string(batch_index) + ": " + e.what());
  }
}

struct EpochAccumulator {
  double ce_sum = 0.0;
  double comp_sum = 0.0;
  std::size_t samples = 0;
};

EpochStats run_epoch(ModelState& model, const Dataset& train,
                     OptimizerState& opt, std::size_t batch_size,
                     Rng& shuffle_rng, bool complement_step) {
  if (batch_size == 0) throw InputError("train epoch: batch_size must be >= 1");
  train.validate();
  const std::size_t m = train.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng.shuffle(order);

  // K=2: the complement objective is identically zero, and even pushing a
  // zero gradient through shared momentum would move parameters; skipping the
  // update realizes the exact-equivalence guarantee.
  const bool do_complement = complement_step && train.num_classes > 2;

  EpochAccumulator acc;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < m; start += batch_size, ++batch_index) {
    const std::size_t end = std::min(m, start + batch_size);
    const std::span<const std::size_t> rows(order.data() + start, end - start);
    with_batch_context(batch_index, [&] {
      LabeledBatch batch = gather_batch(train, rows);
      const double n = static_cast<double>(batch.size());

      ForwardTrace trace = forward(model, batch.inputs);
      LossResult ce = cross_entropy(trace.logits(), batch.labels);
      ParamGrads grads = backward(model, trace, ce.grad_logits);
      sgd_step(model, grads, opt, true, VelocitySlot::kPrimary);
      acc.ce_sum += ce.value * n;

      if (do_complement) {
        ForwardTrace trace2 = forward(model, batch.inputs);
        LossResult comp = complement_loss(trace2.logits(), batch.labels);
        ParamGrads comp_grads = backward(model, trace2, comp.grad_logits);
        sgd_step(model, comp_grads, opt, false, VelocitySlot::kComplement);
        acc.comp_sum += comp.value * n;
      }
      acc.samples += batch.size();
      return 0;
    });
  }
  EpochStats stats;
  stats.ce_loss = acc.ce_sum / static_cast<double>(acc.samples);
  if (complement_step) {
    stats.comp_loss = acc.comp_sum / static_cast<double>(acc.samples);
  }
  return stats;
}

}  // namespace

EpochStats train_epoch_baseline(ModelState& model, const Dataset& train,
                                OptimizerState& opt, std::size_t batch_size,
                                Rng& shuffle_rng) {
  return run_epoch(model, train, opt, batch_size, shuffle_rng, false);
}

EpochStats train_epoch_cot(ModelState& model, const Dataset& train,
                           OptimizerState& opt, std::size_t batch_size,
                           Rng& shuffle_rng) {
  return run_epoch(model, train, opt, batch_size, shuffle_rng, true);
}

void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path,
                         std::uint64_t config_hash, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[96];
  std::snprintf(buf, sizeof buf, "# config_hash=%016llx seed=%llu\n",
                static_cast<unsigned long long>(config_hash),
                static_cast<unsigned long long>(seed));
  out << buf;
  out << "epoch,lr,ce_loss,comp_loss,test_error,epoch_seconds\n";
  for (const EpochRecord& r : log.epochs) {
    out << r.epoch << ",";
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", r.lr, r.ce_loss);
    out << buf;
    if (r.comp_loss) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.comp_loss);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.6f\n", r.test_error, r.epoch_seconds);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

TrainResult run_training(
    const TrainConfig& config, const MlpArchitecture& arch,
    const Dataset& train, const Dataset& test,
    const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  arch.validate();
  train.validate();
  test.validate();
  if (train.dim() != arch.input_dim || train.num_classes != arch.num_classes) {
    throw InputError("run_training: training data (D=" +
                     std::to_string(train.dim()) + ", K=" +
                     std::to_string(train.num_classes) +
                     ") does not match architecture (D=" +
                     std::to_string(arch.input_dim) + ", K=" +
                     std::to_string(arch.num_classes) + ")");
  }
  if (test.dim() != train.dim() || test.num_classes != train.num_classes) {
    throw InputError("run_training: test split does not match training split");
  }

  Rng root(config.seed);
  Rng init_rng = root.split(streams::kInit);
  Rng shuffle_rng = root.split(streams::kShuffle);

  TrainResult result;
  result.model = init_model(arch, init_rng);
  OptimizerState opt =
      make_optimizer(result.model, config.schedule.initial_lr, config.momentum,
                     config.weight_decay, config.cot_separate_velocity);

  const bool cot = config.mode == TrainMode::kCot;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    opt.learning_rate = config.schedule.lr_at(epoch);
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats stats =
        cot ? train_epoch_cot(result.model, train, opt, config.batch_size,
                              shuffle_rng)
            : train_epoch_baseline(result.model, train, opt, config.batch_size,
                                   shuffle_rng);
    const double test_error = error_rate(result.model, test);
    const auto t1 = std::chrono::steady_clock::now();

    EpochRecord record;
    record.epoch = epoch;
    record.lr = opt.learning_rate;
    record.ce_loss = stats.ce_loss;
    record.comp_loss = stats.comp_loss;
    record.test_error = test_error;
    // Wall time of the whole epoch body, evaluation included: the cost an
    // observer of the run actually experiences per epoch.
    record.epoch_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.log.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace cot
