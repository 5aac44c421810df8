#include "asucnn/model.hpp"

#include <algorithm>
#include <cmath>

namespace asucnn {

Architecture Architecture::reference(ActivationKind activation, std::size_t hidden_width) {
  Architecture arch;
  arch.input_size = 32;
  arch.input_channels = 3;
  arch.conv_stages = {
      {.filters = 32, .filter_size = 3, .padding = 0, .stride = 1, .pool_after = true},
      {.filters = 64, .filter_size = 3, .padding = 0, .stride = 1, .pool_after = true},
      {.filters = 64, .filter_size = 3, .padding = 0, .stride = 1, .pool_after = false},
  };
  arch.hidden_width = hidden_width;
  arch.num_classes = 10;
  arch.activation = activation;
  return arch;
}

Architecture Architecture::tiny(ActivationKind activation) {
  Architecture arch;
  arch.input_size = 8;
  arch.input_channels = 3;
  arch.conv_stages = {
      {.filters = 2, .filter_size = 3, .padding = 1, .stride = 1, .pool_after = true},
      {.filters = 2, .filter_size = 3, .padding = 1, .stride = 1, .pool_after = true},
      {.filters = 2, .filter_size = 3, .padding = 1, .stride = 1, .pool_after = false},
  };
  arch.hidden_width = 4;
  arch.num_classes = 3;
  arch.activation = activation;
  return arch;
}

std::vector<ConvSpec> Architecture::conv_specs() const {
  std::vector<ConvSpec> specs;
  std::size_t size = input_size;
  std::size_t channels = input_channels;
  for (const auto& stage : conv_stages) {
    ConvSpec spec{.n = size,
                  .f = stage.filter_size,
                  .p = stage.padding,
                  .s = stage.stride,
                  .n_f = stage.filters,
                  .c_in = channels};
    FeatureMapShape out = conv_output_shape(spec);
    if (stage.pool_after) out = pool_output_shape(out.height, out.width, out.channels);
    specs.push_back(spec);
    size = out.height;
    channels = out.channels;
  }
  return specs;
}

std::vector<FeatureMapShape> Architecture::stage_output_shapes() const {
  std::vector<FeatureMapShape> shapes;
  const auto specs = conv_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    FeatureMapShape out = conv_output_shape(specs[i]);
    if (conv_stages[i].pool_after) out = pool_output_shape(out.height, out.width, out.channels);
    shapes.push_back(out);
  }
  return shapes;
}

std::size_t Architecture::flatten_size() const {
  if (conv_stages.empty()) return input_size * input_size * input_channels;
  const FeatureMapShape last = stage_output_shapes().back();
  return last.height * last.width * last.channels;
}

std::vector<std::string> layer_names(const Architecture& arch) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < arch.conv_stages.size(); ++i) {
    names.push_back("conv" + std::to_string(i + 1));
  }
  names.emplace_back("dense1");
  names.emplace_back("dense_out");
  return names;
}

std::string layer_of(const std::string& parameter_name) {
  return parameter_name.substr(0, parameter_name.find('.'));
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& p : tensors) total += p.value.size();
  return total;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros_like() const {
  ModelParams out{arch, {}};
  out.tensors.reserve(tensors.size());
  for (const auto& p : tensors) out.tensors.push_back({p.name, BasicTensor<T>(p.value.shape())});
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;

template <typename T>
BasicTensor<T> xavier_uniform_init(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw UsageError("xavier_uniform_init: fans must be >= 1");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
ModelParams<T> zero_model(const Architecture& arch) {
  ModelParams<T> params{arch, {}};
  const auto specs = arch.conv_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string name = "conv" + std::to_string(i + 1);
    params.tensors.push_back({name + ".W", BasicTensor<T>(specs[i].weight_shape())});
    params.tensors.push_back({name + ".B", BasicTensor<T>(specs[i].bias_shape())});
  }
  const std::size_t flat = arch.flatten_size();
  params.tensors.push_back({"dense1.W", BasicTensor<T>(Shape{flat, arch.hidden_width})});
  params.tensors.push_back({"dense1.B", BasicTensor<T>(Shape{arch.hidden_width})});
  params.tensors.push_back(
      {"dense_out.W", BasicTensor<T>(Shape{arch.hidden_width, arch.num_classes})});
  params.tensors.push_back({"dense_out.B", BasicTensor<T>(Shape{arch.num_classes})});
  return params;
}

template <typename T>
ModelParams<T> build_model(const Architecture& arch, std::uint64_t seed) {
  ModelParams<T> params = zero_model<T>(arch);
  Rng rng(seed);
  const auto specs = arch.conv_specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    params.tensors[2 * i].value =
        xavier_uniform_init<T>(s.weight_shape(), s.f * s.f * s.c_in, s.f * s.f * s.n_f, rng);
  }
  const std::size_t d = 2 * specs.size();
  const std::size_t flat = arch.flatten_size();
  params.tensors[d].value =
      xavier_uniform_init<T>(Shape{flat, arch.hidden_width}, flat, arch.hidden_width, rng);
  params.tensors[d + 2].value = xavier_uniform_init<T>(
      Shape{arch.hidden_width, arch.num_classes}, arch.hidden_width, arch.num_classes, rng);
  return params;
}

namespace {

template <typename T>
BasicTensor<T> activate_layer(ActivationKind kind, const BasicTensor<T>& z, const std::string& layer) {
  try {
    return apply_activation(kind, z);
  } catch (const DivergenceError&) {
    throw DivergenceError("non-finite activation in layer " + layer);
  }
}

}  // namespace

template <typename T>
ForwardTrace<T> forward_full(const ModelParams<T>& params, const BasicTensor<T>& image) {
  const Architecture& arch = params.arch;
  const auto specs = arch.conv_specs();
  ForwardTrace<T> trace;
  trace.stages.reserve(specs.size());

  const BasicTensor<T>* x = &image;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string layer = "conv" + std::to_string(i + 1);
    ConvStageTrace<T> stage{
        conv2d_forward(specs[i], params.conv_weights(i), params.conv_bias(i), *x), {}, {}};
    // Shape law: every conv output must agree with the closed-form formula.
    if (!(stage.conv.z.shape() == conv_output_shape(specs[i]).shape())) {
      throw ShapeError(layer + " output shape disagrees with conv_output_shape");
    }
    stage.activation = activate_layer(arch.activation, stage.conv.z, layer);
    if (arch.conv_stages[i].pool_after) stage.pool = maxpool_forward(stage.activation);
    trace.stages.push_back(std::move(stage));
    const auto& last = trace.stages.back();
    x = last.pool ? &last.pool->out : &last.activation;
  }

  trace.flatten_from = x->shape();
  const BasicTensor<T> flat = flatten_forward(*x);
  trace.hidden = dense_forward(params.hidden_weights(), params.hidden_bias(), flat);
  trace.hidden_activation = activate_layer(arch.activation, trace.hidden.z, "dense1");
  trace.output = dense_forward(params.output_weights(), params.output_bias(), trace.hidden_activation);
  if (!trace.output.z.all_finite()) throw DivergenceError("non-finite logits in layer dense_out");
  return trace;
}

std::string_view to_string(Mutation m) {
  switch (m) {
    case Mutation::kNone: return "none";
    case Mutation::kDenseTransposedWeights: return "dense-transposed-weights";
    case Mutation::kConvBiasGradDropped: return "conv-bias-grad-dropped";
    case Mutation::kPoolRoutesToFirst: return "pool-routes-to-first";
    case Mutation::kActivationMissingChain: return "activation-missing-chain";
    case Mutation::kConvWeightGradFlipped: return "conv-weight-grad-flipped";
  }
  return "unknown";
}

const std::vector<Mutation>& all_mutations() {
  static const std::vector<Mutation> kAll = {
      Mutation::kDenseTransposedWeights, Mutation::kConvBiasGradDropped,
      Mutation::kPoolRoutesToFirst, Mutation::kActivationMissingChain,
      Mutation::kConvWeightGradFlipped};
  return kAll;
}

std::optional<Mutation> parse_mutation(std::string_view name) {
  if (name == "none") return Mutation::kNone;
  for (Mutation m : all_mutations()) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

template <typename T>
BasicTensor<T> activation_grad(ActivationKind kind, const BasicTensor<T>& z,
                               const BasicTensor<T>& grad, Mutation mutation) {
  if (mutation != Mutation::kActivationMissingChain) return activation_backward(kind, z, grad);
  BasicTensor<T> out(grad.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T partial = kind == ActivationKind::kGcu ? std::cos(z[i])
                      : kind == ActivationKind::kAsu ? std::sin(z[i])
                                                     : T{1};
    out[i] = grad[i] * partial;
  }
  return out;
}

template <typename T>
BasicTensor<T> pool_grad(const PoolCache& cache, const BasicTensor<T>& grad, Mutation mutation) {
  if (mutation != Mutation::kPoolRoutesToFirst) return maxpool_backward(cache, grad);
  BasicTensor<T> out(Shape{cache.height, cache.width, cache.channels});
  const std::size_t ow = (cache.width - kPoolWindow) / kPoolStride + 1;
  for (std::size_t o = 0; o < grad.size(); ++o) {
    const std::size_t k = o % cache.channels;
    const std::size_t j = (o / cache.channels) % ow;
    const std::size_t i = o / cache.channels / ow;
    out[((i * kPoolStride) * cache.width + j * kPoolStride) * cache.channels + k] += grad[o];
  }
  return out;
}

template <typename T>
void flip_spatial(BasicTensor<T>& w) {
  const std::size_t f = w.shape()[0], c = w.shape()[2], n = w.shape()[3];
  BasicTensor<T> src = w;
  for (std::size_t a = 0; a < f; ++a)
    for (std::size_t b = 0; b < f; ++b)
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t k = 0; k < n; ++k) w(a, b, ci, k) = src(f - 1 - a, f - 1 - b, ci, k);
}

}  // namespace

template <typename T>
ModelParams<T> backward_full(const ModelParams<T>& params, const ForwardTrace<T>& trace,
                             const BasicTensor<T>& grad_logits, Mutation mutation) {
  const Architecture& arch = params.arch;
  ModelParams<T> grads = params.zeros_like();
  const std::size_t d = 2 * params.conv_count();

  ParamGrads<T> out_grads =
      dense_backward(trace.output.cache, params.output_weights(), grad_logits);
  if (mutation == Mutation::kDenseTransposedWeights) {
    const auto& w = params.output_weights();
    const std::size_t in_dim = w.shape()[0], out_dim = w.shape()[1];
    for (std::size_t i = 0; i < in_dim; ++i) {
      T acc{0};
      for (std::size_t j = 0; j < out_dim; ++j) acc += w[j * in_dim + i] * grad_logits[j];
      out_grads.input[i] = acc;
    }
  }
  grads.tensors[d + 2].value = std::move(out_grads.weights);
  grads.tensors[d + 3].value = std::move(out_grads.bias);

  BasicTensor<T> g = activation_grad(arch.activation, trace.hidden.z, out_grads.input, mutation);
  ParamGrads<T> hidden_grads = dense_backward(trace.hidden.cache, params.hidden_weights(), g);
  grads.tensors[d].value = std::move(hidden_grads.weights);
  grads.tensors[d + 1].value = std::move(hidden_grads.bias);

  g = flatten_backward(hidden_grads.input, trace.flatten_from);
  for (std::size_t i = trace.stages.size(); i-- > 0;) {
    const auto& stage = trace.stages[i];
    if (stage.pool) g = pool_grad(stage.pool->cache, g, mutation);
    g = activation_grad(arch.activation, stage.conv.z, g, mutation);
    ParamGrads<T> conv_grads = conv2d_backward(stage.conv.cache, params.conv_weights(i), g);
    if (mutation == Mutation::kConvBiasGradDropped) conv_grads.bias.fill(T{0});
    if (mutation == Mutation::kConvWeightGradFlipped) flip_spatial(conv_grads.weights);
    grads.tensors[2 * i].value = std::move(conv_grads.weights);
    grads.tensors[2 * i + 1].value = std::move(conv_grads.bias);
    g = std::move(conv_grads.input);
  }
  return grads;
}

template <typename T>
LossResult<T> sparse_cce_with_softmax(const BasicTensor<T>& logits, std::size_t label) {
  if (logits.shape().rank() != 1) throw ShapeError("logits must be rank 1");
  if (label >= logits.size()) {
    throw UsageError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const auto in = logits.data();
  const double max = static_cast<double>(*std::max_element(in.begin(), in.end()));
  double total = 0.0;
  for (T v : in) total += std::exp(static_cast<double>(v) - max);
  const double log_total = std::log(total);
  const double loss = log_total - (static_cast<double>(in[label]) - max);
  if (!std::isfinite(loss)) throw DivergenceError("loss is not finite");

  LossResult<T> result{static_cast<T>(loss), BasicTensor<T>(logits.shape())};
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double p = std::exp(static_cast<double>(in[i]) - max - log_total);
    result.grad_logits[i] = static_cast<T>(p - (i == label ? 1.0 : 0.0));
  }
  return result;
}

template <typename T>
std::size_t argmax(const BasicTensor<T>& t) {
  const auto d = t.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

#define ASUCNN_INSTANTIATE_MODEL(T)                                                           \
  template BasicTensor<T> xavier_uniform_init(Shape, std::size_t, std::size_t, Rng&);         \
  template ModelParams<T> build_model(const Architecture&, std::uint64_t);                     \
  template ModelParams<T> zero_model(const Architecture&);                                     \
  template ForwardTrace<T> forward_full(const ModelParams<T>&, const BasicTensor<T>&);         \
  template ModelParams<T> backward_full(const ModelParams<T>&, const ForwardTrace<T>&,         \
                                        const BasicTensor<T>&, Mutation);                      \
  template LossResult<T> sparse_cce_with_softmax(const BasicTensor<T>&, std::size_t);          \
  template std::size_t argmax(const BasicTensor<T>&);

ASUCNN_INSTANTIATE_MODEL(float)
ASUCNN_INSTANTIATE_MODEL(double)

#undef ASUCNN_INSTANTIATE_MODEL

}  // namespace asucnn
