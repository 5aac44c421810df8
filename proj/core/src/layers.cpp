#include "asucnn/layers.hpp"

#include <string>

#include "gemm.hpp"

namespace asucnn {

void ConvSpec::validate() const {
  if (n < 1 || f < 1 || s < 1 || n_f < 1 || c_in < 1) {
    throw ShapeError("conv spec: n, f, s, n_f, c_in must all be >= 1");
  }
  if (n + 2 * p < f) {
    throw ShapeError("conv spec: filter " + std::to_string(f) + " does not fit input " +
                     std::to_string(n) + " with padding " + std::to_string(p));
  }
}

FeatureMapShape conv_output_shape(const ConvSpec& spec) {
  spec.validate();
  const std::size_t out = (spec.n + 2 * spec.p - spec.f) / spec.s + 1;
  return {out, out, spec.n_f};
}

FeatureMapShape pool_output_shape(std::size_t h, std::size_t w, std::size_t c) {
  if (h < kPoolWindow || w < kPoolWindow) {
    throw ShapeError("max pool: input " + std::to_string(h) + "x" + std::to_string(w) +
                     " smaller than the 2x2 window");
  }
  return {(h - kPoolWindow) / kPoolStride + 1, (w - kPoolWindow) / kPoolStride + 1, c};
}

namespace {

void require_shape(const Shape& got, const Shape& want, const char* what) {
  if (!(got == want)) {
    throw ShapeError(std::string(what) + ": expected " + want.to_string() + ", got " +
                     got.to_string());
  }
}

}  // namespace

template <typename T>
ConvForward<T> conv2d_forward(const ConvSpec& spec, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, const BasicTensor<T>& input) {
  const FeatureMapShape out = conv_output_shape(spec);
  require_shape(input.shape(), spec.input_shape(), "conv2d input");
  require_shape(weights.shape(), spec.weight_shape(), "conv2d weights");
  require_shape(bias.shape(), spec.bias_shape(), "conv2d bias");

  const std::size_t positions = out.height * out.width;
  const std::size_t taps = spec.f * spec.f * spec.c_in;
  const std::size_t c_in = spec.c_in;

  ConvForward<T> result{BasicTensor<T>(out.shape()), ConvCache<T>{spec, {}, true}};
  auto& cols = result.cache.columns;
  cols.assign(positions * taps, T{0});

  const T* x = input.raw();
  for (std::size_t i = 0; i < out.height; ++i) {
    for (std::size_t j = 0; j < out.width; ++j) {
      T* row = cols.data() + (i * out.width + j) * taps;
      for (std::size_t a = 0; a < spec.f; ++a) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(i * spec.s + a) -
                                 static_cast<std::ptrdiff_t>(spec.p);
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(spec.n)) continue;
        for (std::size_t b = 0; b < spec.f; ++b) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(j * spec.s + b) -
                                    static_cast<std::ptrdiff_t>(spec.p);
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(spec.n)) continue;
          const T* src = x + (static_cast<std::size_t>(y) * spec.n + static_cast<std::size_t>(xx)) * c_in;
          T* dst = row + (a * spec.f + b) * c_in;
          for (std::size_t c = 0; c < c_in; ++c) dst[c] = src[c];
        }
      }
    }
  }

  T* z = result.z.raw();
  for (std::size_t q = 0; q < positions; ++q)
    for (std::size_t k = 0; k < spec.n_f; ++k) z[q * spec.n_f + k] = bias[k];
  detail::gemm_nn(positions, spec.n_f, taps, cols.data(), weights.raw(), z, true);
  return result;
}

template <typename T>
ParamGrads<T> conv2d_backward(const ConvCache<T>& cache, const BasicTensor<T>& weights,
                              const BasicTensor<T>& grad_out) {
  if (!cache.valid) throw UsageError("conv2d_backward called without a forward cache");
  const ConvSpec& spec = cache.spec;
  const FeatureMapShape out = conv_output_shape(spec);
  require_shape(grad_out.shape(), out.shape(), "conv2d grad_out");
  require_shape(weights.shape(), spec.weight_shape(), "conv2d weights");

  const std::size_t positions = out.height * out.width;
  const std::size_t taps = spec.f * spec.f * spec.c_in;
  const std::size_t c_in = spec.c_in;
  const T* g = grad_out.raw();

  ParamGrads<T> grads{BasicTensor<T>(spec.input_shape()), BasicTensor<T>(spec.weight_shape()),
                      BasicTensor<T>(spec.bias_shape())};

  detail::gemm_tn(taps, spec.n_f, positions, cache.columns.data(), g, grads.weights.raw(), false);

  T* gb = grads.bias.raw();
  for (std::size_t q = 0; q < positions; ++q)
    for (std::size_t k = 0; k < spec.n_f; ++k) gb[k] += g[q * spec.n_f + k];

  std::vector<T> w_t(taps * spec.n_f);
  detail::transpose(taps, spec.n_f, weights.raw(), w_t.data());
  std::vector<T> grad_cols(positions * taps);
  detail::gemm_nn(positions, taps, spec.n_f, g, w_t.data(), grad_cols.data(), false);

  T* gx = grads.input.raw();
  for (std::size_t i = 0; i < out.height; ++i) {
    for (std::size_t j = 0; j < out.width; ++j) {
      const T* row = grad_cols.data() + (i * out.width + j) * taps;
      for (std::size_t a = 0; a < spec.f; ++a) {
        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(i * spec.s + a) -
                                 static_cast<std::ptrdiff_t>(spec.p);
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(spec.n)) continue;
        for (std::size_t b = 0; b < spec.f; ++b) {
          const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(j * spec.s + b) -
                                    static_cast<std::ptrdiff_t>(spec.p);
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(spec.n)) continue;
          T* dst = gx + (static_cast<std::size_t>(y) * spec.n + static_cast<std::size_t>(xx)) * c_in;
          const T* src = row + (a * spec.f + b) * c_in;
          for (std::size_t c = 0; c < c_in; ++c) dst[c] += src[c];
        }
      }
    }
  }
  return grads;
}

template <typename T>
PoolForward<T> maxpool_forward(const BasicTensor<T>& input) {
  if (input.shape().rank() != 3) {
    throw ShapeError("max pool expects [h, w, c], got " + input.shape().to_string());
  }
  const std::size_t h = input.shape()[0], w = input.shape()[1], c = input.shape()[2];
  const FeatureMapShape out = pool_output_shape(h, w, c);

  PoolForward<T> result{BasicTensor<T>(out.shape()), PoolCache{h, w, c, {}, true}};
  result.cache.argmax.resize(out.height * out.width * c);
  const T* x = input.raw();
  T* y = result.out.raw();
  for (std::size_t i = 0; i < out.height; ++i) {
    for (std::size_t j = 0; j < out.width; ++j) {
      for (std::size_t k = 0; k < c; ++k) {
        std::size_t best = ((i * kPoolStride) * w + j * kPoolStride) * c + k;
        for (std::size_t a = 0; a < kPoolWindow; ++a) {
          for (std::size_t b = 0; b < kPoolWindow; ++b) {
            const std::size_t idx = ((i * kPoolStride + a) * w + j * kPoolStride + b) * c + k;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (i * out.width + j) * c + k;
        y[o] = x[best];
        result.cache.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool_backward(const PoolCache& cache, const BasicTensor<T>& grad_out) {
  if (!cache.valid) throw UsageError("maxpool_backward called without a forward cache");
  const FeatureMapShape out = pool_output_shape(cache.height, cache.width, cache.channels);
  require_shape(grad_out.shape(), out.shape(), "max pool grad_out");
  BasicTensor<T> grad_in(Shape{cache.height, cache.width, cache.channels});
  const T* g = grad_out.raw();
  T* gx = grad_in.raw();
  for (std::size_t o = 0; o < cache.argmax.size(); ++o) gx[cache.argmax[o]] += g[o];
  return grad_in;
}

template <typename T>
DenseForward<T> dense_forward(const BasicTensor<T>& weights, const BasicTensor<T>& bias,
                              const BasicTensor<T>& input) {
  if (weights.shape().rank() != 2) {
    throw ShapeError("dense weights must be [in, out], got " + weights.shape().to_string());
  }
  const std::size_t in_dim = weights.shape()[0], out_dim = weights.shape()[1];
  require_shape(input.shape(), Shape{in_dim}, "dense input");
  require_shape(bias.shape(), Shape{out_dim}, "dense bias");

  DenseForward<T> result{bias, DenseCache<T>{input, true}};
  detail::gemm_nn(1, out_dim, in_dim, input.raw(), weights.raw(), result.z.raw(), true);
  return result;
}

template <typename T>
ParamGrads<T> dense_backward(const DenseCache<T>& cache, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out) {
  if (!cache.valid) throw UsageError("dense_backward called without a forward cache");
  const std::size_t in_dim = weights.shape()[0], out_dim = weights.shape()[1];
  require_shape(grad_out.shape(), Shape{out_dim}, "dense grad_out");
  require_shape(cache.input.shape(), Shape{in_dim}, "dense cached input");

  ParamGrads<T> grads{BasicTensor<T>(Shape{in_dim}), BasicTensor<T>(weights.shape()), grad_out};
  const T* x = cache.input.raw();
  const T* g = grad_out.raw();
  const T* w = weights.raw();
  T* gw = grads.weights.raw();
  T* gx = grads.input.raw();
  for (std::size_t i = 0; i < in_dim; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < out_dim; ++j) {
      gw[i * out_dim + j] = x[i] * g[j];
      acc += w[i * out_dim + j] * g[j];
    }
    gx[i] = acc;
  }
  return grads;
}

#define ASUCNN_INSTANTIATE_LAYERS(T)                                                        \
  template ConvForward<T> conv2d_forward(const ConvSpec&, const BasicTensor<T>&,           \
                                         const BasicTensor<T>&, const BasicTensor<T>&);    \
  template ParamGrads<T> conv2d_backward(const ConvCache<T>&, const BasicTensor<T>&,       \
                                         const BasicTensor<T>&);                            \
  template PoolForward<T> maxpool_forward(const BasicTensor<T>&);                           \
  template BasicTensor<T> maxpool_backward(const PoolCache&, const BasicTensor<T>&);        \
  template DenseForward<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                         const BasicTensor<T>&);                            \
  template ParamGrads<T> dense_backward(const DenseCache<T>&, const BasicTensor<T>&,       \
                                        const BasicTensor<T>&);

ASUCNN_INSTANTIATE_LAYERS(float)
ASUCNN_INSTANTIATE_LAYERS(double)

#undef ASUCNN_INSTANTIATE_LAYERS

}  // namespace asucnn
