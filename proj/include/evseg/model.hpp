#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evseg/graph.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// bimodal: two encoders, per-level concatenated skips, ASPP bottleneck.
// pre_encoder: modalities concatenated at the input, single encoder/decoder,
//              no skips, no ASPP.
// pre_decoder: two encoders, deepest outputs concatenated, single decoder,
//              no skips, no ASPP.
// rgb_only: single RGB encoder with skips, no events, no ASPP.
enum class ArchKind { kBimodal, kPreEncoder, kPreDecoder, kRgbOnly };

std::string to_string(ArchKind k);
ArchKind arch_from_string(const std::string& s);

struct ModelConfig {
  int levels = 4;
  std::vector<int> widths = {16, 32, 64, 128};  // encoder filters per level
  int num_classes = 11;                         // 10 objects + background
  int input_h = 256;
  int input_w = 256;
  std::vector<int> rgb_aspp_rates = {6, 12, 18, 24};
  std::vector<int> event_aspp_rates = {6};
  double dropout_rate = 0.2;
  int event_channels = 2;
  int rgb_channels = 3;

  void validate() const;  // throws std::invalid_argument

  // Small configuration used by tests and desk-scale runs.
  static ModelConfig reduced(int input, std::vector<int> widths, int classes);
};

// Named parameter collection. Order is fixed by enumerate_parameters and is
// the canonical order for optimizer state and checkpoints.
template <typename T>
struct Model {
  ArchKind kind = ArchKind::kBimodal;
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<Tensor<T>> params;

  int index_of(const std::string& name) const;
  Tensor<T>& param(const std::string& name);
  const Tensor<T>& param(const std::string& name) const;
  int64_t parameter_count() const;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  int fan_in = 0;        // 0 selects zero init (biases)
};

// Single source of truth for which parameters an architecture owns.
std::vector<ParamSpec> enumerate_parameters(ArchKind kind, const ModelConfig& config);

// Fan-in-scaled init: weights ~ N(0, 2/fan_in), biases zero. Deterministic
// per (kind, config, seed).
template <typename T>
Model<T> init_model(ArchKind kind, const ModelConfig& config, uint64_t seed);

// Channel bookkeeping captured during a forward pass, for wiring assertions:
// |X_n| = |E_n| + |S_n| and decoder input channels = |X_n| + |up(D_{n+1})|.
struct ForwardTrace {
  std::vector<int> event_channels;        // |E_n|
  std::vector<int> rgb_channels;          // |S_n|
  std::vector<int> skip_channels;         // |X_n|
  std::vector<int> decoder_up_channels;   // channels of up(D_{n+1})
  std::vector<int> decoder_in_channels;   // channels entering dec conv1
  std::vector<int> decoder_out_channels;  // |D_n|
  int bottleneck_channels = 0;
};

template <typename T>
struct BoundModel {
  std::vector<typename Graph<T>::Ref> param_refs;  // aligned with model.params
  typename Graph<T>::Ref logits;
};

// Builds the forward graph for the model's architecture. `event` may be null
// for rgb_only. Dropout masks derive from (seed, position in graph), so a
// fixed seed makes the pass bit-reproducible.
template <typename T>
BoundModel<T> forward_model(Graph<T>& g, const Model<T>& model, const Tensor<T>* rgb,
                            const Tensor<T>* event, bool training, uint64_t seed,
                            ForwardTrace* trace = nullptr);

// Architecture-checked entry points.
template <typename T>
BoundModel<T> forward_bimodal(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                              const Tensor<T>& event, bool training, uint64_t seed,
                              ForwardTrace* trace = nullptr);
template <typename T>
BoundModel<T> forward_pre_encoder(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                                  const Tensor<T>& event, bool training, uint64_t seed,
                                  ForwardTrace* trace = nullptr);
template <typename T>
BoundModel<T> forward_pre_decoder(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                                  const Tensor<T>& event, bool training, uint64_t seed,
                                  ForwardTrace* trace = nullptr);
template <typename T>
BoundModel<T> forward_rgb_only(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                               bool training, uint64_t seed,
                               ForwardTrace* trace = nullptr);

// --- building blocks (exposed for unit tests) -------------------------------

template <typename T>
struct EncoderBlockOut {
  typename Graph<T>::Ref features;     // pre-pool, feeds the skip connection
  typename Graph<T>::Ref downsampled;  // after 2x2 maxpool
};

// conv3x3 -> ReLU -> dropout -> conv3x3 -> ReLU -> maxpool.
template <typename T>
EncoderBlockOut<T> encoder_block(Graph<T>& g, typename Graph<T>::Ref x,
                                 typename Graph<T>::Ref w1, typename Graph<T>::Ref b1,
                                 typename Graph<T>::Ref w2, typename Graph<T>::Ref b2,
                                 double dropout_rate, bool training, uint64_t seed);

// transposed conv (2x up) -> concat skip first -> conv3x3 -> ReLU -> dropout
// -> conv3x3 -> ReLU. Pass an invalid skip ref for the no-skip variants.
template <typename T>
typename Graph<T>::Ref decoder_block(Graph<T>& g, typename Graph<T>::Ref deeper,
                                     typename Graph<T>::Ref skip,
                                     typename Graph<T>::Ref up_w,
                                     typename Graph<T>::Ref w1, typename Graph<T>::Ref b1,
                                     typename Graph<T>::Ref w2, typename Graph<T>::Ref b2,
                                     double dropout_rate, bool training, uint64_t seed);

// One 3x3 branch conv per rate (dilation = rate, same padding) applied to the
// corresponding modality, channel-concat of all branches, then a 1x1
// projection. Emits a diagnostic warning (once per rate/extent pair) when the
// effective kernel extent exceeds the feature map.
template <typename T>
typename Graph<T>::Ref aspp(Graph<T>& g, typename Graph<T>::Ref rgb_features,
                            typename Graph<T>::Ref event_features,
                            const std::vector<int>& rgb_rates,
                            const std::vector<int>& event_rates,
                            const std::vector<typename Graph<T>::Ref>& rgb_branch_w,
                            const std::vector<typename Graph<T>::Ref>& rgb_branch_b,
                            const std::vector<typename Graph<T>::Ref>& event_branch_w,
                            const std::vector<typename Graph<T>::Ref>& event_branch_b,
                            typename Graph<T>::Ref project_w,
                            typename Graph<T>::Ref project_b);

}  // namespace evseg
