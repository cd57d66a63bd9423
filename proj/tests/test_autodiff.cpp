#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evseg/adam.hpp"
#include "evseg/grad_check.hpp"
#include "evseg/graph.hpp"
#include "evseg/rng.hpp"

using namespace evseg;
using D = double;

namespace {

Tensor<D> randn(rng::Stream& rs, Shape shape, double scale = 1.0) {
  Tensor<D> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rs.next_normal();
  return t;
}

// Naive direct-convolution oracle: six explicit loops, no tap-range tricks.
// Kept independent of the Graph implementation on purpose.
Tensor<D> naive_conv2d(const Tensor<D>& x, const Tensor<D>& w, const Tensor<D>& b,
                       int stride, int dilation, int pad) {
  const int B = x.extent(0), Ci = x.extent(1), H = x.extent(2), W = x.extent(3);
  const int Co = w.extent(0), K = w.extent(2);
  const int ke = (K - 1) * dilation + 1;
  const int Ho = (H + 2 * pad - ke) / stride + 1;
  const int Wo = (W + 2 * pad - ke) / stride + 1;
  Tensor<D> y({B, Co, Ho, Wo});
  for (int bb = 0; bb < B; ++bb)
    for (int co = 0; co < Co; ++co)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          D acc = b[co];
          for (int ci = 0; ci < Ci; ++ci)
            for (int kh = 0; kh < K; ++kh)
              for (int kw = 0; kw < K; ++kw) {
                const int ih = oh * stride + kh * dilation - pad;
                const int iw = ow * stride + kw * dilation - pad;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x.at(bb, ci, ih, iw) * w.at(co, ci, kh, kw);
              }
          y.at(bb, co, oh, ow) = acc;
        }
  return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

TEST_CASE("conv2d: zero input passes only the bias") {
  Graph<D> g;
  auto x = g.input(Tensor<D>::zeros({1, 1, 3, 3}));
  rng::Stream rs(3);
  auto w = g.input(randn(rs, {1, 1, 3, 3}));
  auto b = g.input(Tensor<D>::full({1}, 5.0));
  auto y = g.conv2d(x, w, b);
  for (int64_t i = 0; i < g.value(y).numel(); ++i) CHECK(g.value(y)[i] == 5.0);
}

TEST_CASE("conv2d: dilation 2 hand example") {
  // [1,2,3,4,5] (*) [1,0,-1] at r=2, no padding -> single tap 1*1+3*0+5*(-1)
  Graph<D> g;
  auto x = g.input(Tensor<D>({1, 1, 1, 5}, {1, 2, 3, 4, 5}));
  auto w = g.input(Tensor<D>({1, 1, 1, 3}, {1, 0, -1}));
  auto b = g.input(Tensor<D>::zeros({1}));
  auto y = g.conv2d(x, w, b, 1, 2, 0);
  REQUIRE(g.value(y).shape() == Shape{1, 1, 1, 1});
  CHECK(g.value(y)[0] == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("conv2d: dilation 1 equals the naive six-loop oracle") {
  rng::Stream rs(11);
  for (int inst = 0; inst < 10; ++inst) {
    const int B = 1 + int(rs.next_below(2)), Ci = 1 + int(rs.next_below(3));
    const int Co = 1 + int(rs.next_below(3));
    const int H = 4 + int(rs.next_below(5)), W = 4 + int(rs.next_below(5));
    const int stride = 1 + int(rs.next_below(2));
    const int pad = int(rs.next_below(2));
    const Tensor<D> x = randn(rs, {B, Ci, H, W});
    const Tensor<D> w = randn(rs, {Co, Ci, 3, 3});
    const Tensor<D> b = randn(rs, {Co});
    Graph<D> g;
    auto y = g.conv2d(g.input(x), g.input(w), g.input(b), stride, 1, pad);
    const Tensor<D> ref = naive_conv2d(x, w, b, stride, 1, pad);
    REQUIRE(g.value(y).shape() == ref.shape());
    for (int64_t i = 0; i < ref.numel(); ++i)
      CHECK(g.value(y)[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d: dilated cases equal the naive oracle") {
  rng::Stream rs(12);
  for (int dilation : {2, 3}) {
    const Tensor<D> x = randn(rs, {1, 2, 9, 9});
    const Tensor<D> w = randn(rs, {2, 2, 3, 3});
    const Tensor<D> b = randn(rs, {2});
    Graph<D> g;
    auto y = g.conv2d(g.input(x), g.input(w), g.input(b), 1, dilation,
                      Graph<D>::kSamePadding);
    const Tensor<D> ref = naive_conv2d(x, w, b, 1, dilation, dilation);
    REQUIRE(g.value(y).shape() == ref.shape());
    for (int64_t i = 0; i < ref.numel(); ++i)
      CHECK(g.value(y)[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d: same padding preserves spatial dims") {
  rng::Stream rs(13);
  Graph<D> g;
  auto y = g.conv2d(g.input(randn(rs, {2, 3, 10, 14})), g.input(randn(rs, {4, 3, 3, 3})),
                    g.input(randn(rs, {4})));
  CHECK(g.value(y).shape() == Shape{2, 4, 10, 14});
}

TEST_CASE("conv2d: rejects bad arguments") {
  rng::Stream rs(14);
  Graph<D> g;
  auto x = g.input(randn(rs, {1, 3, 8, 8}));
  auto w = g.input(randn(rs, {4, 2, 3, 3}));  // Cin mismatch: 2 vs 3
  auto b = g.input(randn(rs, {4}));
  CHECK_THROWS_AS(g.conv2d(x, w, b), std::invalid_argument);
  auto w_ok = g.input(randn(rs, {4, 3, 3, 3}));
  CHECK_THROWS_AS(g.conv2d(x, w_ok, b, 0), std::invalid_argument);      // stride 0
  CHECK_THROWS_AS(g.conv2d(x, w_ok, b, 1, 0), std::invalid_argument);   // dilation 0
  CHECK_THROWS_AS(g.conv2d(x, w_ok, b, 1, -3), std::invalid_argument);  // negative
  // input smaller than effective kernel extent
  auto tiny = g.input(randn(rs, {1, 3, 2, 2}));
  CHECK_THROWS_AS(g.conv2d(tiny, w_ok, b, 1, 1, 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// transposed conv

TEST_CASE("transposed_conv2d: single element broadcast") {
  Graph<D> g;
  auto x = g.input(Tensor<D>({1, 1, 1, 1}, {3.0}));
  auto w = g.input(Tensor<D>({1, 1, 2, 2}, {1, 1, 1, 1}));
  auto y = g.transposed_conv2d(x, w);
  REQUIRE(g.value(y).shape() == Shape{1, 1, 2, 2});
  for (int i = 0; i < 4; ++i) CHECK(g.value(y)[i] == 3.0);
}

TEST_CASE("transposed_conv2d: zero input gives zero output") {
  rng::Stream rs(15);
  Graph<D> g;
  auto y = g.transposed_conv2d(g.input(Tensor<D>::zeros({2, 3, 4, 4})),
                               g.input(randn(rs, {3, 5, 2, 2})));
  REQUIRE(g.value(y).shape() == Shape{2, 5, 8, 8});
  for (int64_t i = 0; i < g.value(y).numel(); ++i) CHECK(g.value(y)[i] == 0.0);
}

TEST_CASE("transposed_conv2d: adjoint identity with the matching strided conv") {
  // <conv(x), y> == <x, tconv(y)> for the stride-2 kernel-2 conv
  rng::Stream rs(16);
  for (int inst = 0; inst < 8; ++inst) {
    const int Ci = 1 + int(rs.next_below(3)), Co = 1 + int(rs.next_below(3));
    const int H = 2 + int(rs.next_below(4)), W = 2 + int(rs.next_below(4));
    const Tensor<D> x = randn(rs, {1, Ci, 2 * H, 2 * W});
    const Tensor<D> w = randn(rs, {Co, Ci, 2, 2});
    const Tensor<D> y = randn(rs, {1, Co, H, W});

    Graph<D> g;
    auto conv_x =
        g.conv2d(g.input(x), g.input(w), g.input(Tensor<D>::zeros({Co})), 2, 1, 0);
    // the same raw weight block read as [Cin=Co, Cout=Ci, 2, 2]
    Tensor<D> wt({Co, Ci, 2, 2}, w.values());
    auto tconv_y = g.transposed_conv2d(g.input(y), g.input(wt));

    D lhs = 0, rhs = 0;
    for (int64_t i = 0; i < y.numel(); ++i) lhs += g.value(conv_x)[i] * y[i];
    for (int64_t i = 0; i < x.numel(); ++i) rhs += x[i] * g.value(tconv_y)[i];
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("transposed_conv2d: rejects channel mismatch") {
  rng::Stream rs(17);
  Graph<D> g;
  auto x = g.input(randn(rs, {1, 3, 4, 4}));
  auto w = g.input(randn(rs, {2, 5, 2, 2}));
  CHECK_THROWS_AS(g.transposed_conv2d(x, w), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// maxpool

TEST_CASE("maxpool2d: window max and tie-breaking") {
  Graph<D> g;
  auto x = g.param(Tensor<D>({1, 1, 2, 2}, {1, 2, 3, 4}));
  auto y = g.maxpool2d(x);
  CHECK(g.value(y)[0] == 4.0);

  // constant input: value preserved, gradient routed to the first element
  Graph<D> g2;
  auto c = g2.param(Tensor<D>::full({1, 1, 2, 2}, 7.0));
  auto p = g2.maxpool2d(c);
  CHECK(g2.value(p)[0] == 7.0);
  g2.backward(g2.sum(p));
  CHECK(g2.grad(c)[0] == 1.0);
  CHECK(g2.grad(c)[1] == 0.0);
  CHECK(g2.grad(c)[2] == 0.0);
  CHECK(g2.grad(c)[3] == 0.0);
}

TEST_CASE("maxpool2d: random input equals brute-force window scan") {
  rng::Stream rs(18);
  const Tensor<D> x = randn(rs, {1, 1, 4, 4});
  Graph<D> g;
  auto y = g.maxpool2d(g.input(x));
  for (int oh = 0; oh < 2; ++oh)
    for (int ow = 0; ow < 2; ++ow) {
      D m = -1e300;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          m = std::max(m, x.at(0, 0, 2 * oh + dy, 2 * ow + dx));
      CHECK(g.value(y).at(0, 0, oh, ow) == m);
    }
}

TEST_CASE("maxpool2d: rejects odd spatial extents") {
  rng::Stream rs(19);
  Graph<D> g;
  auto x = g.input(randn(rs, {1, 1, 3, 4}));
  CHECK_THROWS_AS(g.maxpool2d(x), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// concat

TEST_CASE("concat_channels: layout and identity cases") {
  rng::Stream rs(20);
  const Tensor<D> a = randn(rs, {1, 2, 3, 3});
  const Tensor<D> b = randn(rs, {1, 3, 3, 3});
  Graph<D> g;
  auto y = g.concat_channels(g.input(a), g.input(b));
  REQUIRE(g.value(y).shape() == Shape{1, 5, 3, 3});
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 9; ++i)
      CHECK(g.value(y).at(0, c, i / 3, i % 3) == a.at(0, c, i / 3, i % 3));
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 9; ++i)
      CHECK(g.value(y).at(0, c + 2, i / 3, i % 3) == b.at(0, c, i / 3, i % 3));

  // concat with an empty-channel tensor is the identity
  auto e = g.input(Tensor<D>::zeros({1, 0, 3, 3}));
  auto y2 = g.concat_channels(g.input(a), e);
  REQUIRE(g.value(y2).shape() == a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(g.value(y2)[i] == a[i]);
}

TEST_CASE("concat_channels: backward splits an all-ones gradient") {
  rng::Stream rs(21);
  Graph<D> g;
  auto a = g.param(randn(rs, {2, 2, 2, 2}));
  auto b = g.param(randn(rs, {2, 3, 2, 2}));
  g.backward(g.sum(g.concat_channels(a, b)));
  for (int64_t i = 0; i < g.grad(a).numel(); ++i) CHECK(g.grad(a)[i] == 1.0);
  for (int64_t i = 0; i < g.grad(b).numel(); ++i) CHECK(g.grad(b)[i] == 1.0);
}

TEST_CASE("concat_channels: rejects spatial and batch mismatches") {
  rng::Stream rs(22);
  Graph<D> g;
  auto a = g.input(randn(rs, {1, 2, 4, 4}));
  CHECK_THROWS_AS(g.concat_channels(a, g.input(randn(rs, {1, 2, 4, 5}))),
                  std::invalid_argument);
  CHECK_THROWS_AS(g.concat_channels(a, g.input(randn(rs, {2, 2, 4, 4}))),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// dropout

TEST_CASE("dropout: identity at rate 0 and in inference") {
  rng::Stream rs(23);
  const Tensor<D> x = randn(rs, {1, 2, 4, 4});
  Graph<D> g;
  auto a = g.dropout(g.input(x), 0.0, true, 7);
  auto b = g.dropout(g.input(x), 0.7, false, 7);
  for (int64_t i = 0; i < x.numel(); ++i) {
    CHECK(g.value(a)[i] == x[i]);
    CHECK(g.value(b)[i] == x[i]);
  }
}

TEST_CASE("dropout: statistics at rate 0.2 over 1e5 values") {
  const int64_t n = 100000;
  Tensor<D> x({1, 1, 250, 400});
  rng::Stream rs(24);
  for (int64_t i = 0; i < n; ++i) x[i] = rs.next_uniform(0.5, 1.5);
  Graph<D> g;
  auto y = g.dropout(g.input(x), 0.2, true, 20240601);
  int64_t zeros = 0;
  double in_mean = 0, out_mean = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (g.value(y)[i] == 0.0) ++zeros;
    in_mean += x[i];
    out_mean += g.value(y)[i];
  }
  in_mean /= double(n);
  out_mean /= double(n);
  const double zero_frac = double(zeros) / double(n);
  CHECK(zero_frac > 0.19);
  CHECK(zero_frac < 0.21);
  CHECK(std::abs(out_mean - in_mean) / in_mean < 0.02);  // inverted scaling
}

TEST_CASE("dropout: mask is a pure function of the seed") {
  rng::Stream rs(25);
  const Tensor<D> x = randn(rs, {1, 1, 8, 8});
  Graph<D> g1, g2;
  auto y1 = g1.dropout(g1.input(x), 0.5, true, 99);
  auto y2 = g2.dropout(g2.input(x), 0.5, true, 99);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(g1.value(y1)[i] == g2.value(y2)[i]);
}

TEST_CASE("dropout: rejects rate >= 1") {
  Graph<D> g;
  auto x = g.input(Tensor<D>::zeros({1, 1, 2, 2}));
  CHECK_THROWS_AS(g.dropout(x, 1.0, true, 1), std::invalid_argument);
  CHECK_THROWS_AS(g.dropout(x, 1.5, true, 1), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// softmax

TEST_CASE("softmax_channels: all-equal logits over 11 channels") {
  Graph<D> g;
  auto y = g.softmax_channels(g.input(Tensor<D>::full({1, 11, 2, 2}, 3.0)));
  for (int64_t i = 0; i < g.value(y).numel(); ++i)
    CHECK(g.value(y)[i] == doctest::Approx(1.0 / 11.0).epsilon(1e-14));
}

TEST_CASE("softmax_channels: closed-form [0, ln 3] -> [0.25, 0.75]") {
  Graph<D> g;
  auto y = g.softmax_channels(g.input(Tensor<D>({1, 2, 1, 1}, {0.0, std::log(3.0)})));
  CHECK(g.value(y)[0] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(g.value(y)[1] == doctest::Approx(0.75).epsilon(1e-13));
}

TEST_CASE("softmax_channels: shift invariance and row sums") {
  rng::Stream rs(26);
  const Tensor<D> x = randn(rs, {2, 5, 3, 3}, 3.0);
  Tensor<D> shifted = x;
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 5; ++c)
      for (int i = 0; i < 9; ++i) shifted.at(b, c, i / 3, i % 3) += 17.5;
  Graph<D> g;
  auto y = g.softmax_channels(g.input(x));
  auto ys = g.softmax_channels(g.input(shifted));
  for (int64_t i = 0; i < x.numel(); ++i)
    CHECK(std::abs(g.value(y)[i] - g.value(ys)[i]) < 1e-12);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 9; ++i) {
      D s = 0;
      for (int c = 0; c < 5; ++c) s += g.value(y).at(b, c, i / 3, i % 3);
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax_channels: float row sums within 1e-6") {
  rng::Stream rs(27);
  Tensor<float> x({1, 7, 4, 4});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = float(3.0 * rs.next_normal());
  Graph<float> g;
  auto y = g.softmax_channels(g.input(x));
  for (int i = 0; i < 16; ++i) {
    float s = 0;
    for (int c = 0; c < 7; ++c) s += g.value(y).at(0, c, i / 4, i % 4);
    CHECK(std::abs(s - 1.0f) < 1e-6f);
  }
}

// ---------------------------------------------------------------------------
// cross entropy

TEST_CASE("cross_entropy_loss: uniform logits give ln C") {
  Graph<D> g;
  auto x = g.input(Tensor<D>::zeros({1, 11, 4, 4}));
  ClassGrid t(1, 4, 4);
  for (size_t i = 0; i < t.ids.size(); ++i) t.ids[i] = int32_t(i % 11);
  auto loss = g.cross_entropy_loss(x, t);
  CHECK(g.value(loss)[0] == doctest::Approx(std::log(11.0)).epsilon(1e-13));
}

TEST_CASE("cross_entropy_loss: saturated correct class") {
  Graph<D> g;
  Tensor<D> x = Tensor<D>::zeros({1, 3, 1, 1});
  x[1] = 50.0;  // huge margin on the correct class
  ClassGrid t(1, 1, 1);
  t.ids[0] = 1;
  auto loss = g.cross_entropy_loss(g.input(x), t);
  CHECK(g.value(loss)[0] < 1e-10);
}

TEST_CASE("cross_entropy_loss: matches a naive softmax-then-log oracle") {
  rng::Stream rs(28);
  const Tensor<D> x = randn(rs, {2, 3, 4, 4}, 2.0);
  ClassGrid t(2, 4, 4);
  for (auto& v : t.ids) v = int32_t(rs.next_below(3));
  Graph<D> g;
  auto loss = g.cross_entropy_loss(g.input(x), t);

  // independent evaluation without the fused max-subtraction path
  double acc = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int y = 0; y < 4; ++y)
      for (int xx = 0; xx < 4; ++xx) {
        double z = 0.0;
        for (int c = 0; c < 3; ++c) z += std::exp(x.at(b, c, y, xx));
        acc += -std::log(std::exp(x.at(b, t.at(b, y, xx), y, xx)) / z);
      }
  acc /= 32.0;
  CHECK(std::abs(g.value(loss)[0] - acc) < 1e-10);
}

TEST_CASE("cross_entropy_loss: rejects out-of-range targets") {
  Graph<D> g;
  auto x = g.input(Tensor<D>::zeros({1, 3, 2, 2}));
  ClassGrid t(1, 2, 2);
  t.ids[2] = 3;  // only classes 0..2 exist
  CHECK_THROWS_AS(g.cross_entropy_loss(x, t), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// backward mechanics

TEST_CASE("backward: sum gives all-ones gradient") {
  rng::Stream rs(29);
  Graph<D> g;
  auto x = g.param(randn(rs, {2, 3, 4, 4}));
  g.backward(g.sum(x));
  for (int64_t i = 0; i < g.grad(x).numel(); ++i) CHECK(g.grad(x)[i] == 1.0);
}

TEST_CASE("backward: quadratic sum(x*x)/2 gives grad == x") {
  rng::Stream rs(30);
  const Tensor<D> xs = randn(rs, {1, 2, 3, 3});
  Graph<D> g;
  auto x = g.param(xs);
  g.backward(g.scale(g.sum(g.mul(x, x)), 0.5));
  for (int64_t i = 0; i < xs.numel(); ++i)
    CHECK(g.grad(x)[i] == doctest::Approx(xs[i]).epsilon(1e-14));
}

TEST_CASE("backward: rejects non-scalar loss and repeated calls") {
  rng::Stream rs(31);
  Graph<D> g;
  auto x = g.param(randn(rs, {1, 1, 2, 2}));
  auto y = g.relu(x);
  CHECK_THROWS_AS(g.backward(y), std::invalid_argument);
  auto s = g.sum(y);
  g.backward(s);
  CHECK_THROWS_AS(g.backward(s), std::logic_error);
}

TEST_CASE("backward: unreachable parameters keep zero grad") {
  rng::Stream rs(32);
  Graph<D> g;
  auto used = g.param(randn(rs, {2, 2}));
  auto unused = g.param(randn(rs, {3, 3}));
  g.backward(g.sum(used));
  for (int64_t i = 0; i < g.grad(unused).numel(); ++i) CHECK(g.grad(unused)[i] == 0.0);
}

TEST_CASE("backward: fan-out accumulates through shared subexpressions") {
  // L = sum(x) * (sum(x*x)/2); dL/dx_i = q + s*x_i with s = sum(x), q = sum(x^2)/2
  const Tensor<D> xs({3}, {3.0, -1.5, 0.5});
  Graph<D> g;
  auto x = g.param(xs);
  auto s = g.sum(x);
  auto q = g.scale(g.sum(g.mul(x, x)), 0.5);
  g.backward(g.mul(s, q));
  const double sv = 3.0 - 1.5 + 0.5;
  const double qv = 0.5 * (9.0 + 2.25 + 0.25);
  for (int64_t i = 0; i < 3; ++i)
    CHECK(g.grad(x)[i] == doctest::Approx(qv + sv * xs[i]).epsilon(1e-13));
}

// ---------------------------------------------------------------------------
// adam

TEST_CASE("adam_step: zero gradient leaves parameters unchanged") {
  rng::Stream rs(33);
  Tensor<D> p = randn(rs, {8});
  const Tensor<D> p0 = p;
  Tensor<D> gr = Tensor<D>::zeros({8});
  AdamState<D> st;
  std::vector<Tensor<D>*> params{&p};
  std::vector<const Tensor<D>*> grads{&gr};
  adam_step(params, grads, st);
  for (int64_t i = 0; i < 8; ++i) CHECK(p[i] == p0[i]);
}

TEST_CASE("adam_step: bias-corrected first step has magnitude lr") {
  // m_hat = g, v_hat = g*g at t=1, so |delta| = lr/(1+eps) for g = 1
  Tensor<D> p = Tensor<D>::zeros({1});
  Tensor<D> gr = Tensor<D>::full({1}, 1.0);
  AdamState<D> st;
  st.lr = 0.001;
  std::vector<Tensor<D>*> params{&p};
  std::vector<const Tensor<D>*> grads{&gr};
  adam_step(params, grads, st);
  CHECK(p[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(st.step == 1);
}

TEST_CASE("adam_step: identical sequences give bit-identical trajectories") {
  rng::Stream rs(34);
  Tensor<D> a = randn(rs, {16});
  Tensor<D> b = a;
  AdamState<D> sa, sb;
  for (int step = 0; step < 25; ++step) {
    rng::Stream gs(rng::mix(77, uint64_t(step)));
    Tensor<D> gr({16});
    for (int64_t i = 0; i < 16; ++i) gr[i] = gs.next_normal();
    std::vector<Tensor<D>*> pa{&a}, pb{&b};
    std::vector<const Tensor<D>*> gg{&gr};
    adam_step(pa, gg, sa);
    adam_step(pb, gg, sb);
  }
  for (int64_t i = 0; i < 16; ++i) CHECK(a[i] == b[i]);
}

// ---------------------------------------------------------------------------
// finite differences

TEST_CASE("finite_diff_grad: sum and square") {
  const auto fsum = [](const Tensor<D>& t) {
    D s = 0;
    for (int64_t i = 0; i < t.numel(); ++i) s += t[i];
    return s;
  };
  rng::Stream rs(35);
  const Tensor<D> x = randn(rs, {2, 3});
  const Tensor<D> g = finite_diff_grad<D>(fsum, x, 1e-5);
  for (int64_t i = 0; i < g.numel(); ++i)
    CHECK(g[i] == doctest::Approx(1.0).epsilon(1e-9));

  const auto fsq = [](const Tensor<D>& t) { return t[0] * t[0]; };
  const Tensor<D> x3 = Tensor<D>::full({1}, 3.0);
  const Tensor<D> g3 = finite_diff_grad<D>(fsq, x3, 1e-5);
  CHECK(std::abs(g3[0] - 6.0) < 1e-6);

  CHECK_THROWS_AS(finite_diff_grad<D>(fsq, x3, 0.0), std::invalid_argument);
}

TEST_CASE("finite_diff_grad: agrees with backward on a 2-layer conv net") {
  rng::Stream rs(36);
  const Tensor<D> x = randn(rs, {1, 2, 6, 6});
  const Tensor<D> w1 = randn(rs, {3, 2, 3, 3}, 0.5);
  const Tensor<D> b1 = randn(rs, {3}, 0.3);
  const Tensor<D> w2 = randn(rs, {2, 3, 3, 3}, 0.5);
  const Tensor<D> b2 = randn(rs, {2}, 0.3);
  const Tensor<D> r = randn(rs, {1, 2, 6, 6});

  Graph<D> g;
  auto wref = g.param(w1);
  auto h = g.relu(g.conv2d(g.input(x), wref, g.input(b1)));
  auto yy = g.conv2d(h, g.input(w2), g.input(b2));
  g.backward(g.sum(g.mul(yy, g.input(r))));

  const auto f = [&](const Tensor<D>& probe) {
    Graph<D> gp;
    auto hp = gp.relu(gp.conv2d(gp.input(x), gp.input(probe), gp.input(b1)));
    auto yp = gp.conv2d(hp, gp.input(w2), gp.input(b2));
    return gp.value(gp.sum(gp.mul(yp, gp.input(r))))[0];
  };
  const Tensor<D> fd = finite_diff_grad<D>(f, w1, 1e-5);
  for (int64_t i = 0; i < fd.numel(); ++i)
    CHECK(relative_error(fd[i], g.grad(wref)[i]) < 1e-4);
}

// determinism: identical seeds give bit-identical forward chains
TEST_CASE("determinism: dropout chain is bit-identical across runs") {
  rng::Stream rs(37);
  Tensor<float> x({1, 3, 8, 8});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = float(rs.next_u01());
  Tensor<float> w({2, 3, 3, 3});
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = float(0.3 * rs.next_normal());
  Tensor<float> b({2});
  for (int64_t i = 0; i < 2; ++i) b[i] = 0.1f;

  const auto run = [&]() {
    Graph<float> g;
    auto y =
        g.dropout(g.relu(g.conv2d(g.input(x), g.input(w), g.input(b))), 0.2, true, 5);
    return g.value(y).values();
  };
  const std::vector<float> a = run(), b2 = run();
  CHECK(a == b2);
}
