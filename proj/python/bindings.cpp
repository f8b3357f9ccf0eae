#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>

#include "cot/adversarial.hpp"
#include "cot/dataset.hpp"
#include "cot/errors.hpp"
#include "cot/evaluation.hpp"
#include "cot/model.hpp"
#include "cot/objectives.hpp"
#include "cot/rng.hpp"
#include "cot/training.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<long, py::array::c_style | py::array::forcecast>;

cot::Tensor to_tensor(const DoubleArray& array) {
  if (array.ndim() != 2) throw cot::InputError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(array.shape(0));
  const auto cols = static_cast<std::size_t>(array.shape(1));
  std::vector<double> data(array.data(), array.data() + rows * cols);
  return cot::Tensor({rows, cols}, std::move(data));
}

DoubleArray from_tensor(const cot::Tensor& tensor) {
  DoubleArray array({tensor.rows(), tensor.cols()});
  std::copy(tensor.data().begin(), tensor.data().end(),
            array.mutable_data());
  return array;
}

std::vector<int> to_labels(const IntArray& array) {
  if (array.ndim() != 1) throw cot::InputError("expected a 1-d label array");
  std::vector<int> labels(array.shape(0));
  for (py::ssize_t i = 0; i < array.shape(0); ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int>(array.at(i));
  }
  return labels;
}

cot::Dataset to_dataset(const DoubleArray& features, const IntArray& labels,
                        std::size_t num_classes) {
  cot::Dataset ds;
  ds.features = to_tensor(features);
  ds.labels = to_labels(labels);
  ds.name = "arrays";
  if (num_classes == 0) {
    int max_label = 0;
    for (int l : ds.labels) max_label = std::max(max_label, l);
    num_classes = static_cast<std::size_t>(max_label) + 1;
  }
  ds.num_classes = num_classes;
  ds.validate();
  return ds;
}

py::tuple dataset_to_tuple(const cot::Dataset& ds) {
  DoubleArray x = from_tensor(ds.features);
  py::array_t<long> y(static_cast<py::ssize_t>(ds.labels.size()));
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    y.mutable_at(static_cast<py::ssize_t>(i)) = ds.labels[i];
  }
  return py::make_tuple(std::move(x), std::move(y));
}

struct PyModel {
  cot::ModelState state;
  cot::CheckpointMeta meta;
};

cot::LabeledBatch make_batch(const PyModel& model, const DoubleArray& x,
                             const IntArray& y) {
  cot::LabeledBatch batch;
  batch.inputs = to_tensor(x);
  batch.labels = to_labels(y);
  batch.num_classes = model.state.architecture.num_classes;
  return batch;
}

cot::AttackConfig make_attack(cot::AttackKind kind, double epsilon,
                              std::size_t iterations, double step_size,
                              const std::optional<std::pair<double, double>>& clip,
                              const std::string& gradient_mode,
                              bool allow_large_epsilon) {
  cot::AttackConfig config;
  config.kind = kind;
  config.epsilon = epsilon;
  config.iterations = iterations;
  config.step_size = step_size;
  config.clip_range = clip;
  config.allow_large_epsilon = allow_large_epsilon;
  if (gradient_mode == "primary_only") {
    config.gradient_mode = cot::GradientMode::kPrimaryOnly;
  } else if (gradient_mode == "primary_plus_complement") {
    config.gradient_mode = cot::GradientMode::kPrimaryPlusComplement;
  } else {
    throw cot::InputError("gradient_mode must be primary_only or "
                          "primary_plus_complement");
  }
  config.validate();
  return config;
}

py::dict report_to_dict(const cot::EvalReport& report) {
  py::dict d;
  d["error_rate"] = report.error_rate;
  d["mean_true_confidence"] = report.mean_true_confidence;
  d["mean_complement_entropy"] = report.mean_complement_entropy;
  d["mean_max_complement_prob"] = report.mean_max_complement_prob;
  d["confusion"] = report.confusion;
  d["sample_count"] = report.sample_count;
  d["num_classes"] = report.num_classes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Alternating cross-entropy / complement-entropy training lab";

  py::register_exception<cot::Error>(m, "CotError", PyExc_ValueError);

  m.def("softmax", [](const DoubleArray& logits) {
    return from_tensor(cot::softmax(to_tensor(logits)).probs);
  }, py::arg("logits"), "Row-wise softmax of an N x K logit array.");

  m.def("cross_entropy", [](const DoubleArray& logits, const IntArray& labels) {
    const cot::LossResult r = cot::cross_entropy(to_tensor(logits), to_labels(labels));
    return py::make_tuple(r.value, from_tensor(r.grad_logits));
  }, py::arg("logits"), py::arg("labels"),
     "Mean negative log-likelihood and its logit gradient.");

  m.def("complement_loss", [](const DoubleArray& logits, const IntArray& labels) {
    const cot::LossResult r = cot::complement_loss(to_tensor(logits), to_labels(labels));
    return py::make_tuple(r.value, from_tensor(r.grad_logits));
  }, py::arg("logits"), py::arg("labels"),
     "Negative normalized complement entropy and its logit gradient.");

  m.def("normalized_complement_entropy",
        [](const DoubleArray& probs, const IntArray& labels) {
          return cot::normalized_complement_entropy(
              cot::ProbBatch{to_tensor(probs)}, to_labels(labels));
        }, py::arg("probs"), py::arg("labels"),
        "Mean complement entropy divided by K-1; in [0, ln(K-1)/(K-1)].");

  m.def("two_moons", [](std::size_t n, double noise, std::uint64_t seed) {
    cot::Rng rng(seed);
    return dataset_to_tuple(cot::gen_two_moons(n, noise, rng));
  }, py::arg("n"), py::arg("noise") = 0.2, py::arg("seed") = 0);

  m.def("spirals", [](std::size_t n, std::size_t classes, double noise,
                      std::uint64_t seed) {
    cot::Rng rng(seed);
    return dataset_to_tuple(cot::gen_spirals(n, classes, noise, rng));
  }, py::arg("n"), py::arg("classes") = 3, py::arg("noise") = 0.25,
     py::arg("seed") = 0);

  m.def("digits", [](std::size_t n, double noise, std::uint64_t seed) {
    cot::Rng rng(seed);
    return dataset_to_tuple(cot::gen_digits(n, noise, rng));
  }, py::arg("n"), py::arg("noise") = 0.05, py::arg("seed") = 0);

  py::class_<PyModel>(m, "Model")
      .def_static("init", [](std::size_t input_dim,
                             const std::vector<std::size_t>& hidden,
                             std::size_t num_classes, std::uint64_t seed) {
        cot::MlpArchitecture arch{input_dim, hidden, num_classes};
        cot::Rng rng = cot::Rng(seed).split(cot::streams::kInit);
        return PyModel{cot::init_model(arch, rng), {0, seed, ""}};
      }, py::arg("input_dim"), py::arg("hidden"), py::arg("num_classes"),
         py::arg("seed") = 0)
      .def_static("load", [](const std::string& path) {
        cot::LoadedCheckpoint ckpt = cot::load_checkpoint(path);
        return PyModel{std::move(ckpt.model), std::move(ckpt.meta)};
      }, py::arg("path"))
      .def("save", [](const PyModel& self, const std::string& path) {
        cot::save_checkpoint(self.state, self.meta, path);
      }, py::arg("path"))
      .def("logits", [](const PyModel& self, const DoubleArray& x) {
        return from_tensor(cot::embeddings(self.state, to_tensor(x)));
      }, py::arg("x"))
      .def("predict", [](const PyModel& self, const DoubleArray& x) {
        const cot::Tensor logits = cot::embeddings(self.state, to_tensor(x));
        py::array_t<long> out(static_cast<py::ssize_t>(logits.rows()));
        for (std::size_t i = 0; i < logits.rows(); ++i) {
          out.mutable_at(static_cast<py::ssize_t>(i)) =
              static_cast<long>(cot::argmax_lowest(logits.row(i)));
        }
        return out;
      }, py::arg("x"))
      .def_property_readonly("mode_tag",
                             [](const PyModel& self) { return self.meta.mode_tag; })
      .def_property_readonly("seed",
                             [](const PyModel& self) { return self.meta.seed; })
      .def_property_readonly("hidden", [](const PyModel& self) {
        return self.state.architecture.hidden_dims;
      })
      .def_property_readonly("num_classes", [](const PyModel& self) {
        return self.state.architecture.num_classes;
      });

  m.def("train", [](const DoubleArray& train_x, const IntArray& train_y,
                    const DoubleArray& test_x, const IntArray& test_y,
                    const std::vector<std::size_t>& hidden,
                    const std::string& mode, std::size_t epochs,
                    std::size_t batch_size, double lr,
                    const std::vector<std::size_t>& milestones, double lr_factor,
                    double momentum, double weight_decay, std::uint64_t seed,
                    std::size_t num_classes) {
    cot::Dataset train_ds = to_dataset(train_x, train_y, num_classes);
    cot::Dataset test_ds = to_dataset(test_x, test_y, train_ds.num_classes);
    train_ds.num_classes = test_ds.num_classes =
        std::max(train_ds.num_classes, test_ds.num_classes);

    cot::TrainConfig config;
    config.mode = cot::train_mode_from_string(mode);
    config.epochs = epochs;
    config.batch_size = batch_size;
    config.schedule = {lr, milestones, lr_factor};
    config.momentum = momentum;
    config.weight_decay = weight_decay;
    config.seed = seed;

    cot::MlpArchitecture arch{train_ds.dim(), hidden, train_ds.num_classes};
    cot::TrainResult result =
        cot::run_training(config, arch, train_ds, test_ds);

    py::list log;
    for (const cot::EpochRecord& r : result.log.epochs) {
      py::dict entry;
      entry["epoch"] = r.epoch;
      entry["lr"] = r.lr;
      entry["ce_loss"] = r.ce_loss;
      entry["comp_loss"] = r.comp_loss ? py::cast(*r.comp_loss) : py::none();
      entry["test_error"] = r.test_error;
      log.append(std::move(entry));
    }
    PyModel model{std::move(result.model), {0, seed, mode}};
    return py::make_tuple(std::move(model), std::move(log));
  }, py::arg("train_x"), py::arg("train_y"), py::arg("test_x"),
     py::arg("test_y"), py::arg("hidden"), py::arg("mode") = "baseline_ce",
     py::arg("epochs") = 10, py::arg("batch_size") = 128, py::arg("lr") = 0.1,
     py::arg("milestones") = std::vector<std::size_t>{},
     py::arg("lr_factor") = 0.1, py::arg("momentum") = 0.9,
     py::arg("weight_decay") = 1e-4, py::arg("seed") = 0,
     py::arg("num_classes") = 0,
     "Trains an MLP; mode is baseline_ce or cot. Returns (model, epoch log).");

  m.def("evaluate", [](const PyModel& model, const DoubleArray& x,
                       const IntArray& y) {
    return report_to_dict(cot::evaluate(
        model.state, to_dataset(x, y, model.state.architecture.num_classes)));
  }, py::arg("model"), py::arg("x"), py::arg("y"));

  m.def("fgsm", [](const PyModel& model, const DoubleArray& x, const IntArray& y,
                   double epsilon,
                   const std::optional<std::pair<double, double>>& clip,
                   const std::string& gradient_mode, bool allow_large_epsilon) {
    const cot::AttackConfig config =
        make_attack(cot::AttackKind::kFgsm, epsilon, 1, 0.0, clip,
                    gradient_mode, allow_large_epsilon);
    return from_tensor(cot::fgsm(model.state, make_batch(model, x, y), config));
  }, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("epsilon") = 0.1,
     py::arg("clip") = std::nullopt, py::arg("gradient_mode") = "primary_only",
     py::arg("allow_large_epsilon") = false);

  m.def("ifgsm", [](const PyModel& model, const DoubleArray& x, const IntArray& y,
                    double epsilon, std::size_t iterations, double step_size,
                    const std::optional<std::pair<double, double>>& clip,
                    const std::string& gradient_mode, bool allow_large_epsilon) {
    const cot::AttackConfig config =
        make_attack(cot::AttackKind::kIfgsm, epsilon, iterations, step_size,
                    clip, gradient_mode, allow_large_epsilon);
    return from_tensor(cot::ifgsm(model.state, make_batch(model, x, y), config));
  }, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("epsilon") = 0.1,
     py::arg("iterations") = 10, py::arg("step_size") = 0.0,
     py::arg("clip") = std::nullopt, py::arg("gradient_mode") = "primary_only",
     py::arg("allow_large_epsilon") = false);
}
