#pragma once

#include <cstdint>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// Reverse-mode automatic differentiation over a per-step tape. Ops append
// nodes in execution order, so the node list is already a topological order
// of the DAG; backward() walks it once in reverse.
//
// A Graph instance is built, run backward once, then discarded. It is not
// thread-safe; kernels may parallelize internally over batch/channel planes
// with each output element owned by exactly one thread, so results are
// bit-identical regardless of thread count.
template <typename T>
class Graph {
 public:
  struct Ref {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  // Pass as `padding` to get zero-filled "same" padding (stride 1, odd
  // effective kernel extent only).
  static constexpr int kSamePadding = -1;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that does not participate in differentiation.
  Ref input(Tensor<T> v);
  // Leaf with a gradient slot (model parameter).
  Ref param(Tensor<T> v);

  // y[b,co,oh,ow] = bias[co] + sum_{ci,kh,kw} x[b,ci,oh*s+kh*r-p,ow*s+kw*r-p]
  //                                           * w[co,ci,kh,kw]
  // with zero padding outside the input. Kernel taps are spaced `dilation`
  // pixels apart.
  Ref conv2d(Ref x, Ref weight, Ref bias, int stride = 1, int dilation = 1,
             int padding = kSamePadding);

  // Fixed kernel 2, stride 2, no bias; output spatial dims are exactly
  // doubled. weight shape [Cin, Cout, 2, 2]. Forward is the adjoint of the
  // matching stride-2 convolution.
  Ref transposed_conv2d(Ref x, Ref weight);

  // 2x2 window, stride 2. Backward routes the gradient to the first
  // (row-major) maximal element of each window.
  Ref maxpool2d(Ref x);

  // Channel concatenation; channels of xs[0] come first.
  Ref concat_channels(const std::vector<Ref>& xs);
  Ref concat_channels(Ref a, Ref b);

  Ref relu(Ref x);

  // Inverted dropout: in training each value is zeroed with probability
  // `rate` and survivors are scaled by 1/(1-rate); in inference it is the
  // identity. The mask is a pure function of `seed` and is regenerated for
  // backward.
  Ref dropout(Ref x, double rate, bool training, uint64_t seed);

  // Per-pixel softmax over the channel dimension, max-subtracted.
  Ref softmax_channels(Ref x);

  // Mean over all B*H*W pixels of -log softmax(logits)[target], fused with
  // softmax for stability. Returns a scalar node.
  Ref cross_entropy_loss(Ref logits, const ClassGrid& target);

  Ref sum(Ref x);            // full reduction to a scalar
  Ref mul(Ref a, Ref b);     // elementwise, same shape
  Ref scale(Ref x, T alpha);

  // Populates gradients for every parameter reachable from `loss`
  // (unreachable parameters keep zero grad). `loss` must be scalar; a second
  // call without rebuilding the graph is rejected.
  void backward(Ref loss);

  const Tensor<T>& value(Ref r) const { return node_at(r).value; }
  const Tensor<T>& grad(Ref r) const;
  bool requires_grad(Ref r) const { return node_at(r).requires_grad; }
  int num_nodes() const { return int(nodes_.size()); }
  bool backward_done() const { return backward_done_; }

 private:
  enum class Op {
    kInput,
    kParam,
    kConv2d,
    kTConv2d,
    kMaxPool2d,
    kConcat,
    kRelu,
    kDropout,
    kSoftmax,
    kCrossEntropy,
    kSum,
    kMul,
    kScale,
  };

  struct Node {
    Op op;
    Tensor<T> value;
    Tensor<T> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::vector<int> inputs;

    // op attributes
    int stride = 1, dilation = 1, pad = 0;
    double rate = 0.0;
    bool training = false;
    uint64_t seed = 0;
    T alpha = T(1);
    std::vector<int32_t> aux;  // maxpool argmax / cross-entropy targets
    std::vector<T> saved;      // cross-entropy probabilities
  };

  Node& node_at(Ref r);
  const Node& node_at(Ref r) const;
  Ref push(Node n);
  Ref unary(Op op, Ref x, Shape out_shape);

  void backward_node(int id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace evseg
