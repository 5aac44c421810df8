#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asucnn/activations.hpp"
#include "asucnn/layers.hpp"
#include "asucnn/tensor.hpp"

namespace asucnn {

using Rng = std::mt19937_64;

struct ConvStage {
  std::size_t filters = 32;
  std::size_t filter_size = 3;
  std::size_t padding = 0;
  std::size_t stride = 1;
  bool pool_after = false;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

// conv stages -> flatten -> dense(hidden, activation) -> dense(classes) -> softmax.
struct Architecture {
  std::size_t input_size = 32;
  std::size_t input_channels = 3;
  std::vector<ConvStage> conv_stages;
  std::size_t hidden_width = 64;
  std::size_t num_classes = 10;
  ActivationKind activation = ActivationKind::kAsu;

  // 32x32x3 -> conv32 -> pool -> conv64 -> pool -> conv64 -> 1024 -> hidden -> 10.
  static Architecture reference(ActivationKind activation = ActivationKind::kAsu,
                                std::size_t hidden_width = 64);
  // 8x8x3, two 3x3 same-padded filters per stage, 4 hidden units, 3 classes.
  // Small enough for exhaustive finite-difference probing.
  static Architecture tiny(ActivationKind activation = ActivationKind::kAsu);

  // Resolves each stage against the running feature-map size.
  std::vector<ConvSpec> conv_specs() const;
  // Output shape of every stage after (optional) pooling, in order.
  std::vector<FeatureMapShape> stage_output_shapes() const;
  std::size_t flatten_size() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
};

// Named tensors in a fixed order: conv1.W, conv1.B, ..., dense1.W, dense1.B,
// dense_out.W, dense_out.B. Gradients use the same type.
template <typename T>
struct ModelParams {
  Architecture arch;
  std::vector<Parameter<T>> tensors;

  std::size_t parameter_count() const;
  std::size_t conv_count() const { return arch.conv_stages.size(); }

  const BasicTensor<T>& conv_weights(std::size_t stage) const { return tensors[2 * stage].value; }
  const BasicTensor<T>& conv_bias(std::size_t stage) const { return tensors[2 * stage + 1].value; }
  const BasicTensor<T>& hidden_weights() const { return tensors[2 * conv_count()].value; }
  const BasicTensor<T>& hidden_bias() const { return tensors[2 * conv_count() + 1].value; }
  const BasicTensor<T>& output_weights() const { return tensors[2 * conv_count() + 2].value; }
  const BasicTensor<T>& output_bias() const { return tensors[2 * conv_count() + 3].value; }

  // Same names and shapes, all zeros.
  ModelParams zeros_like() const;
};

// Layer names in forward order: conv1..convN, dense1, dense_out.
std::vector<std::string> layer_names(const Architecture& arch);
// "conv2.W" -> "conv2"
std::string layer_of(const std::string& parameter_name);

// Uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
template <typename T>
BasicTensor<T> xavier_uniform_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Xavier-initialized weights, zero biases.
template <typename T>
ModelParams<T> build_model(const Architecture& arch, std::uint64_t seed);

// All tensors zero; useful as a neutral starting point in tests.
template <typename T>
ModelParams<T> zero_model(const Architecture& arch);

template <typename T>
ModelParams<T> convert_params(const ModelParams<float>& params) {
  ModelParams<T> out{params.arch, {}};
  for (const auto& p : params.tensors) out.tensors.push_back({p.name, tensor_cast<T>(p.value)});
  return out;
}

template <typename T>
struct ConvStageTrace {
  ConvForward<T> conv;             // pre-activation Z and im2col cache
  BasicTensor<T> activation;       // A = f(Z)
  std::optional<PoolForward<T>> pool;
};

template <typename T>
struct ForwardTrace {
  std::vector<ConvStageTrace<T>> stages;
  Shape flatten_from{1};
  DenseForward<T> hidden;
  BasicTensor<T> hidden_activation;
  DenseForward<T> output;

  const BasicTensor<T>& logits() const { return output.z; }
};

// Throws DivergenceError naming the layer if an activation is non-finite.
template <typename T>
ForwardTrace<T> forward_full(const ModelParams<T>& params, const BasicTensor<T>& image);

// Deliberate backward-pass faults, used to prove the gradient checker bites.
enum class Mutation {
  kNone,
  kDenseTransposedWeights,   // dense_out grad_input reads W with swapped strides
  kConvBiasGradDropped,      // conv bias gradients zeroed
  kPoolRoutesToFirst,        // max-pool gradient sent to window's top-left
  kActivationMissingChain,   // activation derivative uses sin(z) only
  kConvWeightGradFlipped,    // conv weight gradient spatially flipped
};

std::string_view to_string(Mutation m);
std::optional<Mutation> parse_mutation(std::string_view name);
const std::vector<Mutation>& all_mutations();

template <typename T>
ModelParams<T> backward_full(const ModelParams<T>& params, const ForwardTrace<T>& trace,
                             const BasicTensor<T>& grad_logits, Mutation mutation = Mutation::kNone);

template <typename T>
struct LossResult {
  T loss;
  BasicTensor<T> grad_logits;
};

// -log softmax(logits)[label], gradient softmax - onehot. Throws
// DivergenceError if the loss is not finite.
template <typename T>
LossResult<T> sparse_cce_with_softmax(const BasicTensor<T>& logits, std::size_t label);

// Index of the first maximal element.
template <typename T>
std::size_t argmax(const BasicTensor<T>& t);

}  // namespace asucnn
