#include "cot/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "cot/errors.hpp"

namespace cot {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_mix_u64(std::uint64_t& h, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  fnv_mix(h, b, 8);
}

}  // namespace

void MlpArchitecture::validate() const {
  if (input_dim == 0) throw InputError("model: input dimension must be positive");
  if (num_classes < 2) {
    throw InputError("model: need at least two classes, got " +
                     std::to_string(num_classes));
  }
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw InputError("model: hidden layer width must be positive");
  }
}

ModelState init_model(const MlpArchitecture& arch, Rng& rng) {
  arch.validate();
  ModelState model;
  model.architecture = arch;
  std::size_t fan_in = arch.input_dim;
  std::vector<std::size_t> outs = arch.hidden_dims;
  outs.push_back(arch.num_classes);
  for (std::size_t out : outs) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<double> w(out * fan_in);
    for (double& v : w) v = stddev * rng.normal();
    Layer layer{Tensor({out, fan_in}, std::move(w)),
                Tensor({out}, std::vector<double>(out, 0.0))};
    model.layers.push_back(std::move(layer));
    fan_in = out;
  }
  return model;
}

std::uint64_t param_fingerprint(const ModelState& model) {
  std::uint64_t h = kFnvOffset;
  fnv_mix_u64(h, model.architecture.input_dim);
  for (std::size_t d : model.architecture.hidden_dims) fnv_mix_u64(h, d);
  fnv_mix_u64(h, model.architecture.num_classes);
  for (const Layer& layer : model.layers) {
    for (double v : layer.weight.data()) fnv_mix_u64(h, std::bit_cast<std::uint64_t>(v));
    for (double v : layer.bias.data()) fnv_mix_u64(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

namespace {

Tensor affine(const Tensor& a, const Layer& layer) {
  Tensor z = matmul(a, transpose(layer.weight));
  const std::size_t rows = z.shape()[0];
  const std::size_t cols = z.shape()[1];
  const double* b = layer.bias.data().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double* zi = z.row(i).data();
    for (std::size_t j = 0; j < cols; ++j) zi[j] += b[j];
  }
  return z;
}

Tensor relu(const Tensor& z) {
  std::vector<double> out(z.data().begin(), z.data().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor({z.shape()[0], z.shape()[1]}, std::move(out));
}

void check_inputs(const ModelState& model, const Tensor& inputs) {
  if (inputs.shape().size() != 2 ||
      inputs.shape()[1] != model.architecture.input_dim) {
    std::ostringstream msg;
    msg << "forward: expected inputs of shape [N x "
        << model.architecture.input_dim << "], got "
        << Tensor::shape_string(inputs.shape());
    throw DimensionError(msg.str());
  }
}

}  // namespace

ForwardTrace forward(const ModelState& model, const Tensor& inputs) {
  check_inputs(model, inputs);
  ForwardTrace trace;
  trace.inputs = inputs;
  trace.param_fingerprint = param_fingerprint(model);
  const Tensor* current = &trace.inputs;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    trace.pre_activations.push_back(affine(*current, model.layers[l]));
    if (l + 1 < model.layers.size()) {
      trace.activations.push_back(relu(trace.pre_activations.back()));
      current = &trace.activations.back();
    }
  }
  return trace;
}

namespace {

void check_trace(const ModelState& model, const ForwardTrace& trace,
                 const Tensor& grad_logits) {
  if (trace.param_fingerprint != param_fingerprint(model)) {
    throw InputError(
        "backward: forward trace is stale, parameters changed since forward()");
  }
  if (!grad_logits.same_shape(trace.logits())) {
    throw DimensionError("backward: grad_logits shape " +
                         Tensor::shape_string(grad_logits.shape()) +
                         " does not match logits shape " +
                         Tensor::shape_string(trace.logits().shape()));
  }
}

Tensor column_sums(const Tensor& m) {
  const std::size_t rows = m.shape()[0];
  const std::size_t cols = m.shape()[1];
  std::vector<double> sums(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m.row(i).data();
    for (std::size_t j = 0; j < cols; ++j) sums[j] += row[j];
  }
  return Tensor({cols}, std::move(sums));
}

// delta for the layer below: (delta @ W) masked by ReLU'(z), with
// ReLU'(0) = 0.
Tensor propagate(const Tensor& delta, const Layer& layer, const Tensor& z_prev) {
  Tensor prev = matmul(delta, layer.weight);
  const std::size_t n = prev.data().size();
  double* p = prev.data().data();
  const double* z = z_prev.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(z[i] > 0.0)) p[i] = 0.0;
  }
  return prev;
}

}  // namespace

ParamGrads backward(const ModelState& model, const ForwardTrace& trace,
                    const Tensor& grad_logits) {
  check_trace(model, trace, grad_logits);
  const std::size_t L = model.layers.size();
  ParamGrads grads;
  grads.layers.resize(L);
  Tensor delta = grad_logits;
  for (std::size_t l = L; l-- > 0;) {
    const Tensor& a_in = l == 0 ? trace.inputs : trace.activations[l - 1];
    grads.layers[l].weight = matmul(transpose(delta), a_in);
    grads.layers[l].bias = column_sums(delta);
    if (l > 0) delta = propagate(delta, model.layers[l], trace.pre_activations[l - 1]);
  }
  return grads;
}

Tensor backward_inputs(const ModelState& model, const ForwardTrace& trace,
                       const Tensor& grad_logits) {
  check_trace(model, trace, grad_logits);
  Tensor delta = grad_logits;
  for (std::size_t l = model.layers.size(); l-- > 1;) {
    delta = propagate(delta, model.layers[l], trace.pre_activations[l - 1]);
  }
  return matmul(delta, model.layers[0].weight);
}

Tensor embeddings(const ModelState& model, const Tensor& inputs) {
  return forward(model, inputs).logits();
}

}  // namespace cot
