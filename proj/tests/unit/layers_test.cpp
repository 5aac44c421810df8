#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "asucnn/layers.hpp"
#include "test_support.hpp"

using namespace asucnn;
using asucnn::testing::central_differences;
using asucnn::testing::random_tensor;

namespace {

std::vector<double> concat(std::initializer_list<const Tensor64*> parts) {
  std::vector<double> out;
  for (const auto* t : parts) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

Tensor64 slice(const std::vector<double>& flat, std::size_t& offset, const Shape& shape) {
  std::vector<double> v(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                        flat.begin() + static_cast<std::ptrdiff_t>(offset + shape.elements()));
  offset += shape.elements();
  return Tensor64(shape, std::move(v));
}

double dot(const Tensor64& a, const Tensor64& b) {
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

// Relative error below 1e-5, or absolute below 1e-7 where the analytic value is tiny.
void expect_grad_close(const std::vector<double>& analytic, const std::vector<double>& numeric,
                       const std::string& what) {
  ASSERT_EQ(analytic.size(), numeric.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    if (std::abs(a) < 1e-6) {
      EXPECT_LT(std::abs(a - n), 1e-7) << what << " coordinate " << i;
    } else {
      EXPECT_LT(std::abs(a - n) / std::max(std::abs(a), std::abs(n)), 1e-5)
          << what << " coordinate " << i << " analytic " << a << " numeric " << n;
    }
  }
}

}  // namespace

TEST(ConvOutputShape, Examples) {
  EXPECT_EQ(conv_output_shape({.n = 32, .f = 3, .p = 0, .s = 1, .n_f = 32, .c_in = 3}),
            (FeatureMapShape{30, 30, 32}));
  EXPECT_EQ(conv_output_shape({.n = 5, .f = 5, .p = 0, .s = 1, .n_f = 7, .c_in = 1}),
            (FeatureMapShape{1, 1, 7}));
  EXPECT_EQ(conv_output_shape({.n = 13, .f = 2, .p = 0, .s = 2, .n_f = 64, .c_in = 64}),
            (FeatureMapShape{6, 6, 64}));
  EXPECT_EQ(conv_output_shape({.n = 8, .f = 3, .p = 1, .s = 1, .n_f = 2, .c_in = 3}),
            (FeatureMapShape{8, 8, 2}));
}

TEST(ConvOutputShape, FilterLargerThanPaddedInputIsShapeError) {
  EXPECT_THROW(conv_output_shape({.n = 2, .f = 3, .p = 0, .s = 1, .n_f = 1, .c_in = 1}), ShapeError);
  EXPECT_THROW(conv_output_shape({.n = 4, .f = 3, .p = 0, .s = 0, .n_f = 1, .c_in = 1}), ShapeError);
}

TEST(PoolOutputShape, Examples) {
  EXPECT_EQ(pool_output_shape(30, 30, 32), (FeatureMapShape{15, 15, 32}));
  EXPECT_EQ(pool_output_shape(13, 13, 64), (FeatureMapShape{6, 6, 64}));
  EXPECT_THROW(pool_output_shape(1, 4, 1), ShapeError);
}

TEST(Conv2dForward, IdentityOneByOne) {
  const ConvSpec spec{.n = 1, .f = 1, .p = 0, .s = 1, .n_f = 1, .c_in = 1};
  const Tensor W = Tensor::filled(spec.weight_shape(), 1.0f);
  const Tensor B(spec.bias_shape());
  const auto fwd = conv2d_forward(spec, W, B, Tensor(Shape{1, 1, 1}, {0.625f}));
  EXPECT_EQ(fwd.z[0], 0.625f);

  const auto back = conv2d_backward(fwd.cache, W, Tensor(Shape{1, 1, 1}, {-2.5f}));
  EXPECT_EQ(back.input[0], -2.5f);
}

TEST(Conv2dForward, AllOnesSumsToNine) {
  const ConvSpec spec{.n = 3, .f = 3, .p = 0, .s = 1, .n_f = 1, .c_in = 1};
  const auto fwd = conv2d_forward(spec, Tensor::filled(spec.weight_shape(), 1.0f), Tensor(spec.bias_shape()),
                                  Tensor::filled(Shape{3, 3, 1}, 1.0f));
  ASSERT_EQ(fwd.z.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(fwd.z[0], 9.0f);
}

TEST(Conv2dForward, ZeroWeightsGiveBias) {
  std::mt19937_64 rng(3);
  const ConvSpec spec{.n = 6, .f = 3, .p = 0, .s = 1, .n_f = 2, .c_in = 3};
  const Tensor B(Shape{2}, {0.5f, -1.25f});
  const auto fwd = conv2d_forward(spec, Tensor(spec.weight_shape()), B,
                                  tensor_cast<float>(random_tensor(Shape{6, 6, 3}, rng)));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(fwd.z(i, j, 0), 0.5f);
      EXPECT_EQ(fwd.z(i, j, 1), -1.25f);
    }
}

TEST(Conv2dForward, MatchesDirectCrossCorrelation) {
  std::mt19937_64 rng(4);
  for (const ConvSpec spec : {ConvSpec{.n = 7, .f = 3, .p = 0, .s = 1, .n_f = 4, .c_in = 2},
                              ConvSpec{.n = 6, .f = 3, .p = 1, .s = 2, .n_f = 3, .c_in = 3},
                              ConvSpec{.n = 5, .f = 2, .p = 0, .s = 2, .n_f = 2, .c_in = 1}}) {
    const auto x = random_tensor(spec.input_shape(), rng);
    const auto W = random_tensor(spec.weight_shape(), rng);
    const auto B = random_tensor(spec.bias_shape(), rng);
    const auto z = conv2d_forward(spec, W, B, x).z;
    const auto out = conv_output_shape(spec);
    ASSERT_EQ(z.shape(), out.shape());
    for (std::size_t i = 0; i < out.height; ++i)
      for (std::size_t j = 0; j < out.width; ++j)
        for (std::size_t k = 0; k < spec.n_f; ++k) {
          double want = B[k];
          for (std::size_t a = 0; a < spec.f; ++a)
            for (std::size_t b = 0; b < spec.f; ++b)
              for (std::size_t c = 0; c < spec.c_in; ++c) {
                const auto r = static_cast<std::ptrdiff_t>(i * spec.s + a) - static_cast<std::ptrdiff_t>(spec.p);
                const auto q = static_cast<std::ptrdiff_t>(j * spec.s + b) - static_cast<std::ptrdiff_t>(spec.p);
                if (r < 0 || q < 0 || r >= static_cast<std::ptrdiff_t>(spec.n) ||
                    q >= static_cast<std::ptrdiff_t>(spec.n))
                  continue;
                want += W(a, b, c, k) * x(static_cast<std::size_t>(r), static_cast<std::size_t>(q), c);
              }
          EXPECT_NEAR(z(i, j, k), want, 1e-12);
        }
  }
}

TEST(Conv2dForward, RejectsWrongInputShape) {
  const ConvSpec spec{.n = 5, .f = 3, .p = 0, .s = 1, .n_f = 1, .c_in = 2};
  EXPECT_THROW(conv2d_forward(spec, Tensor(spec.weight_shape()), Tensor(spec.bias_shape()), Tensor(Shape{5, 5, 3})),
               ShapeError);
}

TEST(Conv2dBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(5);
  const ConvSpec spec{.n = 5, .f = 3, .p = 0, .s = 1, .n_f = 4, .c_in = 2};
  const auto W = random_tensor(spec.weight_shape(), rng);
  const auto fwd = conv2d_forward(spec, W, random_tensor(spec.bias_shape(), rng),
                                  random_tensor(spec.input_shape(), rng));
  const auto g = conv2d_backward(fwd.cache, W, Tensor64(fwd.z.shape()));
  for (const auto* t : {&g.input, &g.weights, &g.bias})
    for (double v : t->data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dBackward, MissingCacheIsUsageError) {
  const ConvSpec spec{.n = 3, .f = 3, .p = 0, .s = 1, .n_f = 1, .c_in = 1};
  EXPECT_THROW(conv2d_backward(ConvCache<double>{}, Tensor64(spec.weight_shape()), Tensor64(Shape{1, 1, 1})),
               UsageError);
}

TEST(Conv2dBackward, BiasGradientIsSpatialSum) {
  std::mt19937_64 rng(6);
  const ConvSpec spec{.n = 6, .f = 3, .p = 0, .s = 1, .n_f = 3, .c_in = 2};
  const auto W = random_tensor(spec.weight_shape(), rng);
  const auto fwd = conv2d_forward(spec, W, Tensor64(spec.bias_shape()), random_tensor(spec.input_shape(), rng));
  const auto up = random_tensor(fwd.z.shape(), rng);
  const auto g = conv2d_backward(fwd.cache, W, up);
  for (std::size_t k = 0; k < 3; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) s += up(i, j, k);
    EXPECT_NEAR(g.bias[k], s, 1e-12);
  }
}

// L = <z, R> for a fixed random R, so dL/dz = R and the analytic gradients are
// the backward pass fed with R.
TEST(Conv2dBackward, MatchesCentralDifferencesOnRandomInstances) {
  std::mt19937_64 rng(7);
  const ConvSpec specs[] = {
      {.n = 5, .f = 3, .p = 0, .s = 1, .n_f = 4, .c_in = 2},
      {.n = 4, .f = 2, .p = 0, .s = 1, .n_f = 2, .c_in = 3},
      {.n = 6, .f = 3, .p = 1, .s = 1, .n_f = 2, .c_in = 2},
      {.n = 7, .f = 3, .p = 0, .s = 2, .n_f = 3, .c_in = 1},
      {.n = 5, .f = 3, .p = 2, .s = 2, .n_f = 2, .c_in = 2},
      {.n = 3, .f = 3, .p = 0, .s = 1, .n_f = 5, .c_in = 4},
  };
  for (const auto& spec : specs) {
    const auto x = random_tensor(spec.input_shape(), rng);
    const auto W = random_tensor(spec.weight_shape(), rng);
    const auto B = random_tensor(spec.bias_shape(), rng);
    const auto R = random_tensor(conv_output_shape(spec).shape(), rng);

    const auto fwd = conv2d_forward(spec, W, B, x);
    const auto g = conv2d_backward(fwd.cache, W, R);

    auto loss = [&](const std::vector<double>& flat) {
      std::size_t off = 0;
      const auto xi = slice(flat, off, x.shape());
      const auto wi = slice(flat, off, W.shape());
      const auto bi = slice(flat, off, B.shape());
      return dot(conv2d_forward(spec, wi, bi, xi).z, R);
    };
    const auto numeric = central_differences(loss, concat({&x, &W, &B}), 1e-5);
    expect_grad_close(concat({&g.input, &g.weights, &g.bias}), numeric, "conv n=" + std::to_string(spec.n));
  }
}

TEST(Conv2dForward, AffineInInput) {
  std::mt19937_64 rng(8);
  const ConvSpec spec{.n = 6, .f = 3, .p = 0, .s = 1, .n_f = 4, .c_in = 3};
  const auto W = tensor_cast<float>(random_tensor(spec.weight_shape(), rng));
  const auto B = tensor_cast<float>(random_tensor(spec.bias_shape(), rng));
  const auto x = tensor_cast<float>(random_tensor(spec.input_shape(), rng));
  const auto y = tensor_cast<float>(random_tensor(spec.input_shape(), rng));
  Tensor xy = x;
  xy.accumulate(y);
  const auto f = [&](const Tensor& in) { return conv2d_forward(spec, W, B, in).z; };
  const auto f0 = f(Tensor(spec.input_shape())), fx = f(x), fy = f(y), fxy = f(xy);
  for (std::size_t i = 0; i < f0.size(); ++i) {
    EXPECT_NEAR(fxy[i] - f0[i], (fx[i] - f0[i]) + (fy[i] - f0[i]), 1e-4);
  }
}

TEST(MaxPool, TwoByTwoExample) {
  const auto fwd = maxpool_forward(Tensor(Shape{2, 2, 1}, {1, 2, 3, 4}));
  ASSERT_EQ(fwd.out.shape(), (Shape{1, 1, 1}));
  EXPECT_EQ(fwd.out[0], 4.0f);
  EXPECT_EQ(fwd.cache.argmax[0], 3u);
}

TEST(MaxPool, ConstantInputFirstIndexWins) {
  const auto fwd = maxpool_forward(Tensor::filled(Shape{4, 4, 2}, 0.5f));
  for (float v : fwd.out.data()) EXPECT_EQ(v, 0.5f);
  // window (0,0), channel 1: first element is input(0,0,1) -> flat index 1
  EXPECT_EQ(fwd.cache.argmax[1], 1u);
  // window (1,1), channel 0: first element is input(2,2,0) -> flat (2*4+2)*2 = 20
  EXPECT_EQ(fwd.cache.argmax[(1 * 2 + 1) * 2 + 0], 20u);
}

TEST(MaxPool, ReferenceShapesAndOddSizes) {
  EXPECT_EQ(maxpool_forward(Tensor(Shape{30, 30, 32})).out.shape(), (Shape{15, 15, 32}));
  EXPECT_EQ(maxpool_forward(Tensor(Shape{13, 13, 64})).out.shape(), (Shape{6, 6, 64}));
  EXPECT_THROW(maxpool_forward(Tensor(Shape{1, 1, 3})), ShapeError);
}

TEST(MaxPool, OutputIsBruteForceWindowMax) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 2 + rng() % 9, w = 2 + rng() % 9, c = 1 + rng() % 4;
    const auto x = random_tensor(Shape{h, w, c}, rng);
    const auto out = maxpool_forward(x).out;
    for (std::size_t i = 0; i < out.shape()[0]; ++i)
      for (std::size_t j = 0; j < out.shape()[1]; ++j)
        for (std::size_t k = 0; k < c; ++k) {
          double m = -INFINITY;
          for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) m = std::max(m, x(2 * i + a, 2 * j + b, k));
          EXPECT_EQ(out(i, j, k), m);
        }
  }
}

TEST(MaxPool, BackwardRoutesOneUnitPerWindow) {
  std::mt19937_64 rng(10);
  const auto x = random_tensor(Shape{6, 6, 3}, rng);
  const auto fwd = maxpool_forward(x);
  const auto g = maxpool_backward(fwd.cache, Tensor64::filled(fwd.out.shape(), 1.0));
  EXPECT_EQ(g.shape(), x.shape());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        double s = 0;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 2; ++b) {
            const double v = g(2 * i + a, 2 * j + b, k);
            EXPECT_TRUE(v == 0.0 || v == 1.0);
            if (v == 1.0) {
              EXPECT_EQ(x(2 * i + a, 2 * j + b, k), fwd.out(i, j, k));
            }
            s += v;
          }
        EXPECT_EQ(s, 1.0);
      }
  const auto zero = maxpool_backward(fwd.cache, Tensor64(fwd.out.shape()));
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
}

TEST(MaxPool, BackwardMissingCacheIsUsageError) {
  EXPECT_THROW(maxpool_backward(PoolCache{}, Tensor64(Shape{1, 1, 1})), UsageError);
}

TEST(MaxPool, BackwardMatchesCentralDifferencesAwayFromTies) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t h = 3 + trial, w = 4 + trial % 2, c = 2;
    // Distinct values on a 0.01 grid plus small jitter: no window is within h of a tie.
    std::vector<double> vals(h * w * c);
    std::iota(vals.begin(), vals.end(), 0.0);
    std::shuffle(vals.begin(), vals.end(), rng);
    std::uniform_real_distribution<double> jitter(-0.002, 0.002);
    for (auto& v : vals) v = v * 0.01 + jitter(rng);
    const Tensor64 x(Shape{h, w, c}, vals);
    const auto fwd = maxpool_forward(x);
    const auto R = random_tensor(fwd.out.shape(), rng);
    const auto g = maxpool_backward(fwd.cache, R);

    auto loss = [&](const std::vector<double>& flat) {
      return dot(maxpool_forward(Tensor64(x.shape(), flat)).out, R);
    };
    const auto numeric = central_differences(loss, vals, 1e-5);
    expect_grad_close({g.data().begin(), g.data().end()}, numeric, "pool trial " + std::to_string(trial));
  }
}

TEST(DenseForward, Examples) {
  const Tensor64 x(Shape{2}, {1, 2});
  const Tensor64 I(Shape{2, 2}, {1, 0, 0, 1});
  const auto z = dense_forward(I, Tensor64(Shape{2}, {1, 1}), x).z;
  EXPECT_EQ(z[0], 2.0);
  EXPECT_EQ(z[1], 3.0);

  EXPECT_TRUE(bitwise_equal(dense_forward(I, Tensor64(Shape{2}), x).z, x));

  const Tensor64 b(Shape{3}, {0.5, -1, 7});
  EXPECT_TRUE(bitwise_equal(dense_forward(Tensor64(Shape{2, 3}), b, x).z, b));
}

TEST(DenseForward, RejectsMismatchedInput) {
  EXPECT_THROW(dense_forward(Tensor64(Shape{3, 2}), Tensor64(Shape{2}), Tensor64(Shape{4})), ShapeError);
}

TEST(DenseBackward, ZeroAndIdentityCases) {
  const Tensor64 x(Shape{2}, {1, 2});
  const Tensor64 I(Shape{2, 2}, {1, 0, 0, 1});
  const auto fwd = dense_forward(I, Tensor64(Shape{2}), x);
  const Tensor64 up(Shape{2}, {0.25, -3});
  EXPECT_TRUE(bitwise_equal(dense_backward(fwd.cache, I, up).input, up));
  const auto zero = dense_backward(fwd.cache, I, Tensor64(Shape{2}));
  for (const auto* t : {&zero.input, &zero.weights, &zero.bias})
    for (double v : t->data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(dense_backward(DenseCache<double>{}, I, up), UsageError);
}

TEST(DenseBackward, WeightGradientIsOuterProduct) {
  std::mt19937_64 rng(12);
  const auto x = random_tensor(Shape{5}, rng);
  const auto W = random_tensor(Shape{5, 3}, rng);
  const auto up = random_tensor(Shape{3}, rng);
  const auto g = dense_backward(dense_forward(W, Tensor64(Shape{3}), x).cache, W, up);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(g.weights(i, j), x[i] * up[j]);
}

TEST(DenseBackward, MatchesCentralDifferencesOnRandomInstances) {
  std::mt19937_64 rng(13);
  const std::pair<std::size_t, std::size_t> dims[] = {{8, 4}, {1, 1}, {3, 7}, {16, 2}, {5, 5}};
  for (const auto& [in, out] : dims) {
    const auto x = random_tensor(Shape{in}, rng);
    const auto W = random_tensor(Shape{in, out}, rng);
    const auto B = random_tensor(Shape{out}, rng);
    const auto R = random_tensor(Shape{out}, rng);
    const auto g = dense_backward(dense_forward(W, B, x).cache, W, R);
    auto loss = [&](const std::vector<double>& flat) {
      std::size_t off = 0;
      const auto xi = slice(flat, off, x.shape());
      const auto wi = slice(flat, off, W.shape());
      const auto bi = slice(flat, off, B.shape());
      return dot(dense_forward(wi, bi, xi).z, R);
    };
    const auto numeric = central_differences(loss, concat({&x, &W, &B}), 1e-5);
    expect_grad_close(concat({&g.input, &g.weights, &g.bias}), numeric,
                      "dense " + std::to_string(in) + "->" + std::to_string(out));
  }
}

TEST(DenseForward, AffineInInput) {
  std::mt19937_64 rng(14);
  const auto W = tensor_cast<float>(random_tensor(Shape{12, 6}, rng));
  const auto B = tensor_cast<float>(random_tensor(Shape{6}, rng));
  const auto x = tensor_cast<float>(random_tensor(Shape{12}, rng));
  const auto y = tensor_cast<float>(random_tensor(Shape{12}, rng));
  Tensor xy = x;
  xy.accumulate(y);
  const auto f = [&](const Tensor& in) { return dense_forward(W, B, in).z; };
  const auto f0 = f(Tensor(Shape{12})), fx = f(x), fy = f(y), fxy = f(xy);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(fxy[i] - f0[i], (fx[i] - f0[i]) + (fy[i] - f0[i]), 1e-4);
}

TEST(Flatten, RoundTripAndSizes) {
  std::mt19937_64 rng(15);
  const auto x = random_tensor(Shape{4, 4, 64}, rng);
  const auto flat = flatten_forward(x);
  EXPECT_EQ(flat.shape(), (Shape{1024}));
  EXPECT_TRUE(bitwise_equal(flatten_backward(flat, x.shape()), x));
  EXPECT_EQ(flatten_forward(Tensor64(Shape{1, 1, 1}, {3.5})).shape(), (Shape{1}));
}
