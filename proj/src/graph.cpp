#include "evseg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evseg/rng.hpp"

namespace evseg {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_rank4(const Shape& s, const char* what) {
  require(s.size() == 4, std::string(what) + ": expected rank-4 tensor, got " +
                             shape_str(s));
}

// Output extent of a dilated strided convolution along one axis.
int conv_out_extent(int in, int k, int stride, int dilation, int pad) {
  const int ke = (k - 1) * dilation + 1;
  require(in + 2 * pad >= ke,
          "conv2d: input extent " + std::to_string(in) + " with padding " +
              std::to_string(pad) + " is smaller than effective kernel extent " +
              std::to_string(ke));
  return (in + 2 * pad - ke) / stride + 1;
}

struct TapRange {
  int lo, hi;  // inclusive output range with in-bounds input index
  bool empty() const { return lo > hi; }
};

// Output positions o for which i = o*stride + off lies in [0, in).
TapRange tap_range(int off, int stride, int in, int out) {
  TapRange r;
  r.lo = off < 0 ? (-off + stride - 1) / stride : 0;
  r.hi = (in - 1 - off) < 0 ? -1 : (in - 1 - off) / stride;
  r.lo = std::max(r.lo, 0);
  r.hi = std::min(r.hi, out - 1);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// node plumbing

template <typename T>
typename Graph<T>::Node& Graph<T>::node_at(Ref r) {
  require(r.id >= 0 && r.id < int(nodes_.size()), "graph: invalid node ref");
  return nodes_[size_t(r.id)];
}

template <typename T>
const typename Graph<T>::Node& Graph<T>::node_at(Ref r) const {
  require(r.id >= 0 && r.id < int(nodes_.size()), "graph: invalid node ref");
  return nodes_[size_t(r.id)];
}

template <typename T>
typename Graph<T>::Ref Graph<T>::push(Node n) {
  if (n.requires_grad && n.grad.numel() == 0)
    n.grad = Tensor<T>::zeros(n.value.shape());
  nodes_.push_back(std::move(n));
  return Ref{int(nodes_.size()) - 1};
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Ref r) const {
  const Node& n = node_at(r);
  require(n.requires_grad, "graph: node does not participate in differentiation");
  return n.grad;
}

template <typename T>
typename Graph<T>::Ref Graph<T>::input(Tensor<T> v) {
  Node n;
  n.op = Op::kInput;
  n.value = std::move(v);
  n.requires_grad = false;
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::param(Tensor<T> v) {
  Node n;
  n.op = Op::kParam;
  n.value = std::move(v);
  n.requires_grad = true;
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
typename Graph<T>::Ref Graph<T>::conv2d(Ref x, Ref weight, Ref bias, int stride,
                                        int dilation, int padding) {
  const Node& xn = node_at(x);
  const Node& wn = node_at(weight);
  const Node& bn = node_at(bias);
  require_rank4(xn.value.shape(), "conv2d input");
  require_rank4(wn.value.shape(), "conv2d weight");
  require(stride >= 1, "conv2d: stride must be positive, got " +
                           std::to_string(stride));
  require(dilation >= 1, "conv2d: dilation must be positive, got " +
                             std::to_string(dilation));

  const int B = xn.value.extent(0), Ci = xn.value.extent(1),
            H = xn.value.extent(2), W = xn.value.extent(3);
  const int Co = wn.value.extent(0), K = wn.value.extent(2);
  require(wn.value.extent(1) == Ci,
          "conv2d: weight expects " + std::to_string(wn.value.extent(1)) +
              " input channels but input " + shape_str(xn.value.shape()) +
              " has " + std::to_string(Ci));
  require(wn.value.extent(3) == K, "conv2d: non-square kernel " +
                                       shape_str(wn.value.shape()));
  require(K >= 1, "conv2d: empty kernel");
  require(bn.value.shape() == Shape{Co},
          "conv2d: bias shape " + shape_str(bn.value.shape()) +
              " does not match " + std::to_string(Co) + " output channels");

  int pad = padding;
  if (padding == kSamePadding) {
    const int ke = (K - 1) * dilation + 1;
    require(stride == 1, "conv2d: same padding requires stride 1");
    require(ke % 2 == 1, "conv2d: same padding requires odd effective kernel");
    pad = (ke - 1) / 2;
  }
  require(pad >= 0, "conv2d: negative padding");

  const int Ho = conv_out_extent(H, K, stride, dilation, pad);
  const int Wo = conv_out_extent(W, K, stride, dilation, pad);

  Node n;
  n.op = Op::kConv2d;
  n.inputs = {x.id, weight.id, bias.id};
  n.requires_grad = xn.requires_grad || wn.requires_grad || bn.requires_grad;
  n.stride = stride;
  n.dilation = dilation;
  n.pad = pad;
  n.value = Tensor<T>::zeros({B, Co, Ho, Wo});

  const T* xd = xn.value.data();
  const T* wd = wn.value.data();
  const T* bd = bn.value.data();
  T* yd = n.value.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Co; ++co) {
      T* yp = yd + (int64_t(b) * Co + co) * Ho * Wo;
      std::fill(yp, yp + int64_t(Ho) * Wo, bd[co]);
      for (int ci = 0; ci < Ci; ++ci) {
        const T* xp = xd + (int64_t(b) * Ci + ci) * H * W;
        const T* wp = wd + (int64_t(co) * Ci + ci) * K * K;
        for (int kh = 0; kh < K; ++kh) {
          const int offh = kh * dilation - pad;
          const TapRange rh = tap_range(offh, stride, H, Ho);
          if (rh.empty()) continue;
          for (int kw = 0; kw < K; ++kw) {
            const T wv = wp[kh * K + kw];
            const int offw = kw * dilation - pad;
            const TapRange rw = tap_range(offw, stride, W, Wo);
            if (rw.empty()) continue;
            for (int oh = rh.lo; oh <= rh.hi; ++oh) {
              const T* xrow = xp + int64_t(oh * stride + offh) * W + offw;
              T* yrow = yp + int64_t(oh) * Wo;
              if (stride == 1) {
                for (int ow = rw.lo; ow <= rw.hi; ++ow)
                  yrow[ow] += wv * xrow[ow];
              } else {
                for (int ow = rw.lo; ow <= rw.hi; ++ow)
                  yrow[ow] += wv * xrow[int64_t(ow) * stride];
              }
            }
          }
        }
      }
    }
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// transposed conv (kernel 2, stride 2, no bias)

template <typename T>
typename Graph<T>::Ref Graph<T>::transposed_conv2d(Ref x, Ref weight) {
  const Node& xn = node_at(x);
  const Node& wn = node_at(weight);
  require_rank4(xn.value.shape(), "transposed_conv2d input");
  require_rank4(wn.value.shape(), "transposed_conv2d weight");
  const int B = xn.value.extent(0), Ci = xn.value.extent(1),
            H = xn.value.extent(2), W = xn.value.extent(3);
  require(wn.value.extent(0) == Ci,
          "transposed_conv2d: weight expects " +
              std::to_string(wn.value.extent(0)) + " input channels but input " +
              shape_str(xn.value.shape()) + " has " + std::to_string(Ci));
  require(wn.value.extent(2) == 2 && wn.value.extent(3) == 2,
          "transposed_conv2d: kernel must be 2x2, got " +
              shape_str(wn.value.shape()));
  const int Co = wn.value.extent(1);

  Node n;
  n.op = Op::kTConv2d;
  n.inputs = {x.id, weight.id};
  n.requires_grad = xn.requires_grad || wn.requires_grad;
  n.value = Tensor<T>::zeros({B, Co, 2 * H, 2 * W});

  const T* xd = xn.value.data();
  const T* wd = wn.value.data();
  T* yd = n.value.data();
  const int Ho = 2 * H, Wo = 2 * W;

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int co = 0; co < Co; ++co) {
      T* yp = yd + (int64_t(b) * Co + co) * Ho * Wo;
      for (int ci = 0; ci < Ci; ++ci) {
        const T* xp = xd + (int64_t(b) * Ci + ci) * H * W;
        const T* wp = wd + (int64_t(ci) * Co + co) * 4;
        for (int h = 0; h < H; ++h) {
          const T* xrow = xp + int64_t(h) * W;
          T* y0 = yp + int64_t(2 * h) * Wo;
          T* y1 = y0 + Wo;
          for (int w = 0; w < W; ++w) {
            const T v = xrow[w];
            y0[2 * w] += v * wp[0];
            y0[2 * w + 1] += v * wp[1];
            y1[2 * w] += v * wp[2];
            y1[2 * w + 1] += v * wp[3];
          }
        }
      }
    }
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// maxpool 2x2

template <typename T>
typename Graph<T>::Ref Graph<T>::maxpool2d(Ref x) {
  const Node& xn = node_at(x);
  require_rank4(xn.value.shape(), "maxpool2d input");
  const int B = xn.value.extent(0), C = xn.value.extent(1),
            H = xn.value.extent(2), W = xn.value.extent(3);
  require(H % 2 == 0 && W % 2 == 0,
          "maxpool2d: spatial extents must be even, got " +
              shape_str(xn.value.shape()));

  Node n;
  n.op = Op::kMaxPool2d;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.value = Tensor<T>::zeros({B, C, H / 2, W / 2});
  n.aux.resize(size_t(n.value.numel()));

  const T* xd = xn.value.data();
  T* yd = n.value.data();
  int32_t* am = n.aux.data();
  const int Ho = H / 2, Wo = W / 2;

  for (int bc = 0; bc < B * C; ++bc) {
    const int64_t base = int64_t(bc) * H * W;
    const T* xp = xd + base;
    T* yp = yd + int64_t(bc) * Ho * Wo;
    int32_t* ap = am + int64_t(bc) * Ho * Wo;
    for (int oh = 0; oh < Ho; ++oh) {
      for (int ow = 0; ow < Wo; ++ow) {
        // first row-major maximum wins ties
        int best = (2 * oh) * W + 2 * ow;
        T bv = xp[best];
        const int cand[3] = {(2 * oh) * W + 2 * ow + 1,
                             (2 * oh + 1) * W + 2 * ow,
                             (2 * oh + 1) * W + 2 * ow + 1};
        for (int idx : cand) {
          if (xp[idx] > bv) {
            bv = xp[idx];
            best = idx;
          }
        }
        yp[oh * Wo + ow] = bv;
        // aux keeps the flat index into the whole input tensor
        ap[oh * Wo + ow] = int32_t(base + best);
      }
    }
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// concat / relu / dropout / softmax

template <typename T>
typename Graph<T>::Ref Graph<T>::concat_channels(const std::vector<Ref>& xs) {
  require(!xs.empty(), "concat_channels: no inputs");
  const Node& first = node_at(xs[0]);
  require_rank4(first.value.shape(), "concat_channels input");
  const int B = first.value.extent(0), H = first.value.extent(2),
            W = first.value.extent(3);
  int Ctot = 0;
  bool req = false;
  for (Ref r : xs) {
    const Node& n = node_at(r);
    require_rank4(n.value.shape(), "concat_channels input");
    require(n.value.extent(0) == B && n.value.extent(2) == H &&
                n.value.extent(3) == W,
            "concat_channels: batch/spatial mismatch between " +
                shape_str(first.value.shape()) + " and " +
                shape_str(n.value.shape()));
    Ctot += n.value.extent(1);
    req = req || n.requires_grad;
  }

  Node n;
  n.op = Op::kConcat;
  n.requires_grad = req;
  n.value = Tensor<T>::zeros({B, Ctot, H, W});
  for (Ref r : xs) n.inputs.push_back(r.id);

  T* yd = n.value.data();
  const int64_t plane = int64_t(H) * W;
  for (int b = 0; b < B; ++b) {
    int64_t coff = 0;
    for (Ref r : xs) {
      const Node& in = node_at(r);
      const int Cin = in.value.extent(1);
      std::copy_n(in.value.data() + int64_t(b) * Cin * plane, int64_t(Cin) * plane,
                  yd + (int64_t(b) * Ctot + coff) * plane);
      coff += Cin;
    }
  }
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::concat_channels(Ref a, Ref b) {
  return concat_channels(std::vector<Ref>{a, b});
}

template <typename T>
typename Graph<T>::Ref Graph<T>::relu(Ref x) {
  const Node& xn = node_at(x);
  Node n;
  n.op = Op::kRelu;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.value = Tensor<T>::zeros(xn.value.shape());
  const T* xd = xn.value.data();
  T* yd = n.value.data();
  const int64_t m = xn.value.numel();
  for (int64_t i = 0; i < m; ++i) yd[i] = xd[i] > T(0) ? xd[i] : T(0);
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::dropout(Ref x, double rate, bool training,
                                         uint64_t seed) {
  require(rate >= 0.0 && rate < 1.0,
          "dropout: rate must lie in [0,1), got " + std::to_string(rate));
  const Node& xn = node_at(x);
  Node n;
  n.op = Op::kDropout;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.rate = rate;
  n.training = training;
  n.seed = seed;
  if (!training || rate == 0.0) {
    n.value = xn.value;
  } else {
    n.value = Tensor<T>::zeros(xn.value.shape());
    const T keep_scale = T(1.0 / (1.0 - rate));
    rng::Stream rs(seed);
    const T* xd = xn.value.data();
    T* yd = n.value.data();
    const int64_t m = xn.value.numel();
    for (int64_t i = 0; i < m; ++i)
      yd[i] = rs.next_u01() >= rate ? xd[i] * keep_scale : T(0);
  }
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::softmax_channels(Ref x) {
  const Node& xn = node_at(x);
  require_rank4(xn.value.shape(), "softmax_channels input");
  const int B = xn.value.extent(0), C = xn.value.extent(1),
            H = xn.value.extent(2), W = xn.value.extent(3);
  require(C >= 1, "softmax_channels: need at least one channel");

  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.value = Tensor<T>::zeros(xn.value.shape());

  const T* xd = xn.value.data();
  T* yd = n.value.data();
  const int64_t plane = int64_t(H) * W;
  for (int b = 0; b < B; ++b) {
    const T* xb = xd + int64_t(b) * C * plane;
    T* yb = yd + int64_t(b) * C * plane;
    for (int64_t px = 0; px < plane; ++px) {
      T m = xb[px];
      for (int c = 1; c < C; ++c) m = std::max(m, xb[c * plane + px]);
      T z = T(0);
      for (int c = 0; c < C; ++c) {
        const T e = std::exp(xb[c * plane + px] - m);
        yb[c * plane + px] = e;
        z += e;
      }
      const T inv = T(1) / z;
      for (int c = 0; c < C; ++c) yb[c * plane + px] *= inv;
    }
  }
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// fused softmax + cross-entropy

template <typename T>
typename Graph<T>::Ref Graph<T>::cross_entropy_loss(Ref logits,
                                                    const ClassGrid& target) {
  const Node& xn = node_at(logits);
  require_rank4(xn.value.shape(), "cross_entropy_loss logits");
  const int B = xn.value.extent(0), C = xn.value.extent(1),
            H = xn.value.extent(2), W = xn.value.extent(3);
  require(target.b == B && target.h == H && target.w == W,
          "cross_entropy_loss: target grid " + std::to_string(target.b) + "x" +
              std::to_string(target.h) + "x" + std::to_string(target.w) +
              " does not match logits " + shape_str(xn.value.shape()));
  for (int64_t i = 0; i < target.numel(); ++i)
    require(target.ids[size_t(i)] >= 0 && target.ids[size_t(i)] < C,
            "cross_entropy_loss: target class " +
                std::to_string(target.ids[size_t(i)]) + " out of range [0," +
                std::to_string(C) + ") at pixel " + std::to_string(i));

  Node n;
  n.op = Op::kCrossEntropy;
  n.inputs = {logits.id};
  n.requires_grad = xn.requires_grad;
  n.aux = target.ids;
  n.saved.resize(size_t(xn.value.numel()));  // softmax probabilities
  n.value = Tensor<T>::zeros({1});

  const T* xd = xn.value.data();
  T* pd = n.saved.data();
  const int64_t plane = int64_t(H) * W;
  const int64_t npix = int64_t(B) * plane;
  double acc = 0.0;  // accumulate loss in double regardless of T
  for (int b = 0; b < B; ++b) {
    const T* xb = xd + int64_t(b) * C * plane;
    T* pb = pd + int64_t(b) * C * plane;
    const int32_t* tb = n.aux.data() + int64_t(b) * plane;
    for (int64_t px = 0; px < plane; ++px) {
      T m = xb[px];
      for (int c = 1; c < C; ++c) m = std::max(m, xb[c * plane + px]);
      T z = T(0);
      for (int c = 0; c < C; ++c) {
        const T e = std::exp(xb[c * plane + px] - m);
        pb[c * plane + px] = e;
        z += e;
      }
      const T inv = T(1) / z;
      for (int c = 0; c < C; ++c) pb[c * plane + px] *= inv;
      const T lse = std::log(z) + m;
      acc += double(lse - xb[int64_t(tb[px]) * plane + px]);
    }
  }
  n.value[0] = T(acc / double(npix));
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// sum / mul / scale

template <typename T>
typename Graph<T>::Ref Graph<T>::sum(Ref x) {
  const Node& xn = node_at(x);
  Node n;
  n.op = Op::kSum;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.value = Tensor<T>::zeros({1});
  T acc = T(0);
  for (int64_t i = 0; i < xn.value.numel(); ++i) acc += xn.value[i];
  n.value[0] = acc;
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::mul(Ref a, Ref b) {
  const Node& an = node_at(a);
  const Node& bn = node_at(b);
  require(an.value.shape() == bn.value.shape(),
          "mul: shape mismatch " + shape_str(an.value.shape()) + " vs " +
              shape_str(bn.value.shape()));
  Node n;
  n.op = Op::kMul;
  n.inputs = {a.id, b.id};
  n.requires_grad = an.requires_grad || bn.requires_grad;
  n.value = Tensor<T>::zeros(an.value.shape());
  for (int64_t i = 0; i < n.value.numel(); ++i)
    n.value[i] = an.value[i] * bn.value[i];
  return push(std::move(n));
}

template <typename T>
typename Graph<T>::Ref Graph<T>::scale(Ref x, T alpha) {
  const Node& xn = node_at(x);
  Node n;
  n.op = Op::kScale;
  n.inputs = {x.id};
  n.requires_grad = xn.requires_grad;
  n.alpha = alpha;
  n.value = Tensor<T>::zeros(xn.value.shape());
  for (int64_t i = 0; i < n.value.numel(); ++i) n.value[i] = alpha * xn.value[i];
  return push(std::move(n));
}

// ---------------------------------------------------------------------------
// backward

template <typename T>
void Graph<T>::backward(Ref loss) {
  Node& ln = node_at(loss);
  require(ln.value.numel() == 1,
          "backward: loss must be scalar, got " + shape_str(ln.value.shape()));
  if (backward_done_)
    throw std::logic_error(
        "backward: graph already differentiated; rebuild the graph before "
        "calling backward again");
  backward_done_ = true;
  if (!ln.requires_grad) return;  // nothing reachable
  ln.grad[0] = T(1);
  for (int id = loss.id; id >= 0; --id) {
    if (!nodes_[size_t(id)].requires_grad) continue;
    backward_node(id);
  }
}

template <typename T>
void Graph<T>::backward_node(int id) {
  Node& n = nodes_[size_t(id)];
  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
      return;

    case Op::kConv2d: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      Node& wn = nodes_[size_t(n.inputs[1])];
      Node& bn = nodes_[size_t(n.inputs[2])];
      const int B = xn.value.extent(0), Ci = xn.value.extent(1),
                H = xn.value.extent(2), W = xn.value.extent(3);
      const int Co = wn.value.extent(0), K = wn.value.extent(2);
      const int Ho = n.value.extent(2), Wo = n.value.extent(3);
      const int s = n.stride, d = n.dilation, p = n.pad;
      const T* gy = n.grad.data();
      const T* xd = xn.value.data();
      const T* wd = wn.value.data();

      if (xn.requires_grad) {
        T* gx = xn.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < B; ++b) {
          for (int ci = 0; ci < Ci; ++ci) {
            T* gxp = gx + (int64_t(b) * Ci + ci) * H * W;
            for (int co = 0; co < Co; ++co) {
              const T* gyp = gy + (int64_t(b) * Co + co) * Ho * Wo;
              const T* wp = wd + (int64_t(co) * Ci + ci) * K * K;
              for (int kh = 0; kh < K; ++kh) {
                const int offh = kh * d - p;
                const TapRange rh = tap_range(offh, s, H, Ho);
                if (rh.empty()) continue;
                for (int kw = 0; kw < K; ++kw) {
                  const T wv = wp[kh * K + kw];
                  const int offw = kw * d - p;
                  const TapRange rw = tap_range(offw, s, W, Wo);
                  if (rw.empty()) continue;
                  for (int oh = rh.lo; oh <= rh.hi; ++oh) {
                    T* gxrow = gxp + int64_t(oh * s + offh) * W + offw;
                    const T* gyrow = gyp + int64_t(oh) * Wo;
                    for (int ow = rw.lo; ow <= rw.hi; ++ow)
                      gxrow[int64_t(ow) * s] += wv * gyrow[ow];
                  }
                }
              }
            }
          }
        }
      }

      if (wn.requires_grad) {
        T* gw = wn.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int co = 0; co < Co; ++co) {
          for (int ci = 0; ci < Ci; ++ci) {
            T* gwp = gw + (int64_t(co) * Ci + ci) * K * K;
            for (int kh = 0; kh < K; ++kh) {
              const int offh = kh * d - p;
              const TapRange rh = tap_range(offh, s, H, Ho);
              if (rh.empty()) continue;
              for (int kw = 0; kw < K; ++kw) {
                const int offw = kw * d - p;
                const TapRange rw = tap_range(offw, s, W, Wo);
                if (rw.empty()) continue;
                T acc = T(0);
                for (int b = 0; b < B; ++b) {
                  const T* gyp = gy + (int64_t(b) * Co + co) * Ho * Wo;
                  const T* xp = xd + (int64_t(b) * Ci + ci) * H * W;
                  for (int oh = rh.lo; oh <= rh.hi; ++oh) {
                    const T* xrow = xp + int64_t(oh * s + offh) * W + offw;
                    const T* gyrow = gyp + int64_t(oh) * Wo;
                    for (int ow = rw.lo; ow <= rw.hi; ++ow)
                      acc += gyrow[ow] * xrow[int64_t(ow) * s];
                  }
                }
                gwp[kh * K + kw] += acc;
              }
            }
          }
        }
      }

      if (bn.requires_grad) {
        T* gb = bn.grad.data();
        for (int co = 0; co < Co; ++co) {
          T acc = T(0);
          for (int b = 0; b < B; ++b) {
            const T* gyp = gy + (int64_t(b) * Co + co) * Ho * Wo;
            for (int64_t i = 0; i < int64_t(Ho) * Wo; ++i) acc += gyp[i];
          }
          gb[co] += acc;
        }
      }
      return;
    }

    case Op::kTConv2d: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      Node& wn = nodes_[size_t(n.inputs[1])];
      const int B = xn.value.extent(0), Ci = xn.value.extent(1),
                H = xn.value.extent(2), W = xn.value.extent(3);
      const int Co = wn.value.extent(1);
      const int Wo = 2 * W;
      const T* gy = n.grad.data();
      const T* xd = xn.value.data();
      const T* wd = wn.value.data();

      if (xn.requires_grad) {
        T* gx = xn.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int b = 0; b < B; ++b) {
          for (int ci = 0; ci < Ci; ++ci) {
            T* gxp = gx + (int64_t(b) * Ci + ci) * H * W;
            for (int co = 0; co < Co; ++co) {
              const T* gyp = gy + (int64_t(b) * Co + co) * (int64_t(4) * H * W);
              const T* wp = wd + (int64_t(ci) * Co + co) * 4;
              for (int h = 0; h < H; ++h) {
                const T* g0 = gyp + int64_t(2 * h) * Wo;
                const T* g1 = g0 + Wo;
                T* gxrow = gxp + int64_t(h) * W;
                for (int w = 0; w < W; ++w)
                  gxrow[w] += wp[0] * g0[2 * w] + wp[1] * g0[2 * w + 1] +
                              wp[2] * g1[2 * w] + wp[3] * g1[2 * w + 1];
              }
            }
          }
        }
      }

      if (wn.requires_grad) {
        T* gw = wn.grad.data();
#pragma omp parallel for collapse(2) schedule(static)
        for (int ci = 0; ci < Ci; ++ci) {
          for (int co = 0; co < Co; ++co) {
            T a00 = T(0), a01 = T(0), a10 = T(0), a11 = T(0);
            for (int b = 0; b < B; ++b) {
              const T* xp = xd + (int64_t(b) * Ci + ci) * H * W;
              const T* gyp = gy + (int64_t(b) * Co + co) * (int64_t(4) * H * W);
              for (int h = 0; h < H; ++h) {
                const T* xrow = xp + int64_t(h) * W;
                const T* g0 = gyp + int64_t(2 * h) * Wo;
                const T* g1 = g0 + Wo;
                for (int w = 0; w < W; ++w) {
                  const T v = xrow[w];
                  a00 += v * g0[2 * w];
                  a01 += v * g0[2 * w + 1];
                  a10 += v * g1[2 * w];
                  a11 += v * g1[2 * w + 1];
                }
              }
            }
            T* gwp = gw + (int64_t(ci) * Co + co) * 4;
            gwp[0] += a00;
            gwp[1] += a01;
            gwp[2] += a10;
            gwp[3] += a11;
          }
        }
      }
      return;
    }

    case Op::kMaxPool2d: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      T* gx = xn.grad.data();
      const T* gy = n.grad.data();
      for (int64_t i = 0; i < n.value.numel(); ++i)
        gx[n.aux[size_t(i)]] += gy[i];
      return;
    }

    case Op::kConcat: {
      const int B = n.value.extent(0);
      const int Ctot = n.value.extent(1);
      const int64_t plane = int64_t(n.value.extent(2)) * n.value.extent(3);
      const T* gy = n.grad.data();
      for (int b = 0; b < B; ++b) {
        int64_t coff = 0;
        for (int in_id : n.inputs) {
          Node& xn = nodes_[size_t(in_id)];
          const int Cin = xn.value.extent(1);
          if (xn.requires_grad) {
            T* gx = xn.grad.data() + int64_t(b) * Cin * plane;
            const T* g = gy + (int64_t(b) * Ctot + coff) * plane;
            for (int64_t i = 0; i < int64_t(Cin) * plane; ++i) gx[i] += g[i];
          }
          coff += Cin;
        }
      }
      return;
    }

    case Op::kRelu: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      T* gx = xn.grad.data();
      const T* gy = n.grad.data();
      const T* xd = xn.value.data();
      for (int64_t i = 0; i < n.value.numel(); ++i)
        if (xd[i] > T(0)) gx[i] += gy[i];
      return;
    }

    case Op::kDropout: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      T* gx = xn.grad.data();
      const T* gy = n.grad.data();
      const int64_t m = n.value.numel();
      if (!n.training || n.rate == 0.0) {
        for (int64_t i = 0; i < m; ++i) gx[i] += gy[i];
      } else {
        // replay the forward mask from the seed
        const T keep_scale = T(1.0 / (1.0 - n.rate));
        rng::Stream rs(n.seed);
        for (int64_t i = 0; i < m; ++i)
          if (rs.next_u01() >= n.rate) gx[i] += gy[i] * keep_scale;
      }
      return;
    }

    case Op::kSoftmax: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      const int B = n.value.extent(0), C = n.value.extent(1);
      const int64_t plane = int64_t(n.value.extent(2)) * n.value.extent(3);
      const T* y = n.value.data();
      const T* gy = n.grad.data();
      T* gx = xn.grad.data();
      for (int b = 0; b < B; ++b) {
        const T* yb = y + int64_t(b) * C * plane;
        const T* gb = gy + int64_t(b) * C * plane;
        T* xb = gx + int64_t(b) * C * plane;
        for (int64_t px = 0; px < plane; ++px) {
          T dot = T(0);
          for (int c = 0; c < C; ++c)
            dot += gb[c * plane + px] * yb[c * plane + px];
          for (int c = 0; c < C; ++c)
            xb[c * plane + px] += yb[c * plane + px] * (gb[c * plane + px] - dot);
        }
      }
      return;
    }

    case Op::kCrossEntropy: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      const int B = xn.value.extent(0), C = xn.value.extent(1);
      const int64_t plane = int64_t(xn.value.extent(2)) * xn.value.extent(3);
      const int64_t npix = int64_t(B) * plane;
      const T g = n.grad[0] / T(npix);
      const T* probs = n.saved.data();
      T* gx = xn.grad.data();
      for (int b = 0; b < B; ++b) {
        const T* pb = probs + int64_t(b) * C * plane;
        T* xb = gx + int64_t(b) * C * plane;
        const int32_t* tb = n.aux.data() + int64_t(b) * plane;
        for (int64_t px = 0; px < plane; ++px) {
          for (int c = 0; c < C; ++c) xb[c * plane + px] += g * pb[c * plane + px];
          xb[int64_t(tb[px]) * plane + px] -= g;
        }
      }
      return;
    }

    case Op::kSum: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      const T g = n.grad[0];
      T* gx = xn.grad.data();
      for (int64_t i = 0; i < xn.value.numel(); ++i) gx[i] += g;
      return;
    }

    case Op::kMul: {
      Node& an = nodes_[size_t(n.inputs[0])];
      Node& bn = nodes_[size_t(n.inputs[1])];
      const T* gy = n.grad.data();
      if (an.requires_grad) {
        T* ga = an.grad.data();
        const T* bv = bn.value.data();
        for (int64_t i = 0; i < n.value.numel(); ++i) ga[i] += gy[i] * bv[i];
      }
      if (bn.requires_grad) {
        T* gb = bn.grad.data();
        const T* av = an.value.data();
        for (int64_t i = 0; i < n.value.numel(); ++i) gb[i] += gy[i] * av[i];
      }
      return;
    }

    case Op::kScale: {
      Node& xn = nodes_[size_t(n.inputs[0])];
      if (!xn.requires_grad) return;
      T* gx = xn.grad.data();
      const T* gy = n.grad.data();
      for (int64_t i = 0; i < n.value.numel(); ++i) gx[i] += n.alpha * gy[i];
      return;
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace evseg
