#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cot/objectives.hpp"
#include "cot/rng.hpp"
#include "cot/tensor.hpp"

namespace cot {

enum class Activation { kRelu };

/// Shape of a feed-forward classifier: D inputs, zero or more ReLU hidden
/// layers, K output logits.
struct MlpArchitecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;
  Activation activation = Activation::kRelu;

  std::size_t layer_count() const { return hidden_dims.size() + 1; }
  void validate() const;
  bool operator==(const MlpArchitecture&) const = default;
};

struct Layer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

/// Ordered layer parameters of an MLP plus its architecture descriptor.
struct ModelState {
  MlpArchitecture architecture;
  std::vector<Layer> layers;
};

/// Gradients with the same layout as the model parameters.
struct ParamGrads {
  std::vector<Layer> layers;
};

/// Intermediates cached by forward() for the backward pass. The parameter
/// fingerprint ties the trace to the exact parameter values it was computed
/// from; backward() rejects traces taken before an update.
struct ForwardTrace {
  Tensor inputs;
  std::vector<Tensor> pre_activations;  // one per layer; back() is the logits
  std::vector<Tensor> activations;      // ReLU outputs of the hidden layers
  std::uint64_t param_fingerprint = 0;

  const Tensor& logits() const { return pre_activations.back(); }
};

/// He-normal weights (stddev sqrt(2/fan_in)), zero biases; deterministic for
/// a given rng stream.
ModelState init_model(const MlpArchitecture& arch, Rng& rng);

std::uint64_t param_fingerprint(const ModelState& model);

ForwardTrace forward(const ModelState& model, const Tensor& inputs);

/// Backpropagates grad_logits to every weight and bias. The ReLU derivative
/// at exactly zero is taken to be zero.
ParamGrads backward(const ModelState& model, const ForwardTrace& trace,
                    const Tensor& grad_logits);

/// Backpropagates grad_logits to the inputs only (used by the attacks).
Tensor backward_inputs(const ModelState& model, const ForwardTrace& trace,
                       const Tensor& grad_logits);

/// The pre-softmax logit vectors, exported for cluster visualization.
Tensor embeddings(const ModelState& model, const Tensor& inputs);

/// Provenance carried inside a checkpoint alongside the parameters.
struct CheckpointMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string mode_tag;  // "baseline_ce", "cot", or empty
};

struct LoadedCheckpoint {
  ModelState model;
  CheckpointMeta meta;
};

/// Binary checkpoint, format version 1, all integers and IEEE-754 doubles
/// little-endian. Round-trips are bit-exact. Layout documented in README.md.
void save_checkpoint(const ModelState& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cot
