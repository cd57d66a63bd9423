#include "evseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <set>
#include <stdexcept>

#include "evseg/rng.hpp"

namespace evseg {

std::string to_string(ArchKind k) {
  switch (k) {
    case ArchKind::kBimodal: return "bimodal";
    case ArchKind::kPreEncoder: return "pre_encoder";
    case ArchKind::kPreDecoder: return "pre_decoder";
    default: return "rgb_only";
  }
}

ArchKind arch_from_string(const std::string& s) {
  if (s == "bimodal") return ArchKind::kBimodal;
  if (s == "pre_encoder") return ArchKind::kPreEncoder;
  if (s == "pre_decoder") return ArchKind::kPreDecoder;
  if (s == "rgb_only") return ArchKind::kRgbOnly;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}

void ModelConfig::validate() const {
  if (levels < 1) throw std::invalid_argument("ModelConfig: levels must be >= 1");
  if (int(widths.size()) != levels)
    throw std::invalid_argument("ModelConfig: " + std::to_string(widths.size()) +
                                " widths for " + std::to_string(levels) + " levels");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("ModelConfig: non-positive width");
  if (num_classes < 1) throw std::invalid_argument("ModelConfig: need at least one class");
  const int div = 1 << levels;
  if (input_h % div != 0 || input_w % div != 0)
    throw std::invalid_argument("ModelConfig: input " + std::to_string(input_h) + "x" +
                                std::to_string(input_w) + " not divisible by 2^" +
                                std::to_string(levels));
  if (rgb_aspp_rates.empty() || event_aspp_rates.empty())
    throw std::invalid_argument("ModelConfig: ASPP rate lists must be non-empty");
  for (int r : rgb_aspp_rates)
    if (r < 1) throw std::invalid_argument("ModelConfig: ASPP rates must be >= 1");
  for (int r : event_aspp_rates)
    if (r < 1) throw std::invalid_argument("ModelConfig: ASPP rates must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0)
    throw std::invalid_argument("ModelConfig: dropout rate must lie in [0,1)");
  if (event_channels < 1 || rgb_channels < 1)
    throw std::invalid_argument("ModelConfig: channel counts must be positive");
}

ModelConfig ModelConfig::reduced(int input, std::vector<int> widths, int classes) {
  ModelConfig c;
  c.levels = int(widths.size());
  c.widths = std::move(widths);
  c.num_classes = classes;
  c.input_h = c.input_w = input;
  c.rgb_aspp_rates = {1, 2};
  c.event_aspp_rates = {1};
  return c;
}

template <typename T>
int Model<T>::index_of(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return int(i);
  return -1;
}

template <typename T>
Tensor<T>& Model<T>::param(const std::string& name) {
  const int i = index_of(name);
  if (i < 0) throw std::invalid_argument("model has no parameter '" + name + "'");
  return params[size_t(i)];
}

template <typename T>
const Tensor<T>& Model<T>::param(const std::string& name) const {
  const int i = index_of(name);
  if (i < 0) throw std::invalid_argument("model has no parameter '" + name + "'");
  return params[size_t(i)];
}

template <typename T>
int64_t Model<T>::parameter_count() const {
  int64_t n = 0;
  for (const Tensor<T>& p : params) n += p.numel();
  return n;
}

// ---------------------------------------------------------------------------
// parameter enumeration

namespace {

// Channels entering encoder level i.
int encoder_in(const ModelConfig& c, int level, int input_channels) {
  return level == 0 ? input_channels : c.widths[size_t(level - 1)];
}

int skip_channels_for(ArchKind kind, const ModelConfig& c, int level) {
  switch (kind) {
    case ArchKind::kBimodal: return 2 * c.widths[size_t(level)];
    case ArchKind::kRgbOnly: return c.widths[size_t(level)];
    default: return 0;  // pre-encoder / pre-decoder fuse without skips
  }
}

int bottleneck_channels_for(ArchKind kind, const ModelConfig& c) {
  switch (kind) {
    case ArchKind::kBimodal: return c.widths.back();   // ASPP projection width
    case ArchKind::kPreDecoder: return 2 * c.widths.back();
    default: return c.widths.back();
  }
}

void push_conv(std::vector<ParamSpec>& out, const std::string& base, int cout,
               int cin, int k) {
  out.push_back({base + ".weight", Shape{cout, cin, k, k}, cin * k * k});
  out.push_back({base + ".bias", Shape{cout}, 0});
}

void push_encoder_stack(std::vector<ParamSpec>& out, const std::string& prefix,
                        const ModelConfig& c, int input_channels) {
  for (int i = 0; i < c.levels; ++i) {
    const int w = c.widths[size_t(i)];
    push_conv(out, prefix + std::to_string(i) + ".conv1", w,
              encoder_in(c, i, input_channels), 3);
    push_conv(out, prefix + std::to_string(i) + ".conv2", w, w, 3);
  }
}

}  // namespace

std::vector<ParamSpec> enumerate_parameters(ArchKind kind, const ModelConfig& c) {
  c.validate();
  std::vector<ParamSpec> out;

  switch (kind) {
    case ArchKind::kBimodal:
    case ArchKind::kPreDecoder:
      push_encoder_stack(out, "rgb_enc", c, c.rgb_channels);
      push_encoder_stack(out, "evt_enc", c, c.event_channels);
      break;
    case ArchKind::kPreEncoder:
      push_encoder_stack(out, "enc", c, c.rgb_channels + c.event_channels);
      break;
    case ArchKind::kRgbOnly:
      push_encoder_stack(out, "rgb_enc", c, c.rgb_channels);
      break;
  }

  if (kind == ArchKind::kBimodal) {
    const int wd = c.widths.back();
    for (int r : c.rgb_aspp_rates)
      push_conv(out, "aspp.rgb_r" + std::to_string(r), wd, wd, 3);
    for (int r : c.event_aspp_rates)
      push_conv(out, "aspp.evt_r" + std::to_string(r), wd, wd, 3);
    const int branches = int(c.rgb_aspp_rates.size() + c.event_aspp_rates.size());
    push_conv(out, "aspp.project", wd, branches * wd, 1);
  }

  for (int i = c.levels - 1; i >= 0; --i) {
    const std::string base = "dec" + std::to_string(i);
    const int w = c.widths[size_t(i)];
    const int deeper = (i == c.levels - 1) ? bottleneck_channels_for(kind, c)
                                           : c.widths[size_t(i + 1)];
    // transposed conv weight [Cin, Cout, 2, 2], no bias
    out.push_back({base + ".up.weight", Shape{deeper, w, 2, 2}, deeper * 4});
    push_conv(out, base + ".conv1", w, w + skip_channels_for(kind, c, i), 3);
    push_conv(out, base + ".conv2", w, w, 3);
  }

  push_conv(out, "classifier", c.num_classes, c.widths[0], 1);
  return out;
}

template <typename T>
Model<T> init_model(ArchKind kind, const ModelConfig& config, uint64_t seed) {
  Model<T> m;
  m.kind = kind;
  m.config = config;
  const std::vector<ParamSpec> specs = enumerate_parameters(kind, config);
  m.names.reserve(specs.size());
  m.params.reserve(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    const ParamSpec& ps = specs[i];
    Tensor<T> t(ps.shape);
    if (ps.fan_in > 0) {
      rng::Stream rs(rng::mix(seed, uint64_t(i)));
      const double stddev = std::sqrt(2.0 / double(ps.fan_in));
      for (int64_t j = 0; j < t.numel(); ++j) t[j] = T(stddev * rs.next_normal());
    }
    m.names.push_back(ps.name);
    m.params.push_back(std::move(t));
  }
  return m;
}

// ---------------------------------------------------------------------------
// building blocks

template <typename T>
EncoderBlockOut<T> encoder_block(Graph<T>& g, typename Graph<T>::Ref x,
                                 typename Graph<T>::Ref w1, typename Graph<T>::Ref b1,
                                 typename Graph<T>::Ref w2, typename Graph<T>::Ref b2,
                                 double dropout_rate, bool training, uint64_t seed) {
  auto h1 = g.relu(g.conv2d(x, w1, b1));
  auto hd = g.dropout(h1, dropout_rate, training, seed);
  auto h2 = g.relu(g.conv2d(hd, w2, b2));
  return EncoderBlockOut<T>{h2, g.maxpool2d(h2)};
}

template <typename T>
typename Graph<T>::Ref decoder_block(Graph<T>& g, typename Graph<T>::Ref deeper,
                                     typename Graph<T>::Ref skip,
                                     typename Graph<T>::Ref up_w,
                                     typename Graph<T>::Ref w1, typename Graph<T>::Ref b1,
                                     typename Graph<T>::Ref w2, typename Graph<T>::Ref b2,
                                     double dropout_rate, bool training, uint64_t seed) {
  auto up = g.transposed_conv2d(deeper, up_w);
  // D_n consumes [X_n, D_{n+1}]: skip channels first
  auto cat = skip.valid() ? g.concat_channels(skip, up) : up;
  auto h1 = g.relu(g.conv2d(cat, w1, b1));
  auto hd = g.dropout(h1, dropout_rate, training, seed);
  return g.relu(g.conv2d(hd, w2, b2));
}

namespace {

void warn_wide_aspp_rate(int rate, int extent) {
  static std::mutex mu;
  static std::set<std::pair<int, int>> warned;
  std::lock_guard<std::mutex> lock(mu);
  if (warned.insert({rate, extent}).second) {
    std::fprintf(stderr,
                 "evseg: ASPP rate %d has effective kernel extent %d on a %dx%d "
                 "feature map; branch degenerates towards its center tap\n",
                 rate, 2 * rate + 1, extent, extent);
  }
}

}  // namespace

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
                            typename Graph<T>::Ref project_b) {
  if (rgb_branch_w.size() != rgb_rates.size() ||
      event_branch_w.size() != event_rates.size())
    throw std::invalid_argument("aspp: branch parameter count does not match rates");
  const Shape& rs = g.value(rgb_features).shape();
  const Shape& es = g.value(event_features).shape();
  if (rs[2] != es[2] || rs[3] != es[3])
    throw std::invalid_argument("aspp: modality feature maps differ spatially: " +
                                shape_str(rs) + " vs " + shape_str(es));
  const int extent = std::min(rs[2], rs[3]);

  std::vector<typename Graph<T>::Ref> branches;
  for (size_t i = 0; i < rgb_rates.size(); ++i) {
    if (2 * rgb_rates[i] + 1 > extent) warn_wide_aspp_rate(rgb_rates[i], extent);
    branches.push_back(
        g.conv2d(rgb_features, rgb_branch_w[i], rgb_branch_b[i], 1, rgb_rates[i]));
  }
  for (size_t i = 0; i < event_rates.size(); ++i) {
    if (2 * event_rates[i] + 1 > extent) warn_wide_aspp_rate(event_rates[i], extent);
    branches.push_back(
        g.conv2d(event_features, event_branch_w[i], event_branch_b[i], 1, event_rates[i]));
  }
  auto cat = g.concat_channels(branches);
  return g.conv2d(cat, project_w, project_b, 1, 1, 0);
}

// ---------------------------------------------------------------------------
// full forwards

namespace {

template <typename T>
struct Binder {
  Graph<T>& g;
  const Model<T>& m;
  std::vector<typename Graph<T>::Ref> refs;

  Binder(Graph<T>& graph, const Model<T>& model) : g(graph), m(model) {
    refs.reserve(model.params.size());
    for (const Tensor<T>& p : model.params) refs.push_back(g.param(p));
  }

  typename Graph<T>::Ref operator[](const std::string& name) const {
    const int i = m.index_of(name);
    if (i < 0)
      throw std::invalid_argument("forward: model has no parameter '" + name + "'");
    return refs[size_t(i)];
  }
};

template <typename T>
void check_input(const ModelConfig& c, const Tensor<T>& t, int channels,
                 const char* what) {
  if (t.rank() != 4 || t.extent(1) != channels || t.extent(2) != c.input_h ||
      t.extent(3) != c.input_w)
    throw std::invalid_argument(std::string("forward: ") + what + " input " +
                                shape_str(t.shape()) + " does not match config [B," +
                                std::to_string(channels) + "," +
                                std::to_string(c.input_h) + "," +
                                std::to_string(c.input_w) + "]");
}

// Runs one encoder stack; returns per-level pre-pool features and the final
// downsampled tensor.
template <typename T>
std::pair<std::vector<typename Graph<T>::Ref>, typename Graph<T>::Ref> run_encoder(
    Graph<T>& g, const Binder<T>& p, const std::string& prefix, const ModelConfig& c,
    typename Graph<T>::Ref x, bool training, uint64_t seed, uint64_t& drop_ordinal) {
  std::vector<typename Graph<T>::Ref> skips;
  for (int i = 0; i < c.levels; ++i) {
    const std::string base = prefix + std::to_string(i);
    auto out = encoder_block(g, x, p[base + ".conv1.weight"], p[base + ".conv1.bias"],
                             p[base + ".conv2.weight"], p[base + ".conv2.bias"],
                             c.dropout_rate, training,
                             rng::mix(seed, drop_ordinal++));
    skips.push_back(out.features);
    x = out.downsampled;
  }
  return {skips, x};
}

// Runs the decoder; `skips` may be empty for the no-skip architectures.
template <typename T>
typename Graph<T>::Ref run_decoder(Graph<T>& g, const Binder<T>& p, const ModelConfig& c,
                                   typename Graph<T>::Ref bottleneck,
                                   const std::vector<typename Graph<T>::Ref>& skips,
                                   bool training, uint64_t seed, uint64_t& drop_ordinal,
                                   ForwardTrace* trace) {
  auto d = bottleneck;
  if (trace) {
    trace->decoder_up_channels.assign(size_t(c.levels), 0);
    trace->decoder_in_channels.assign(size_t(c.levels), 0);
    trace->decoder_out_channels.assign(size_t(c.levels), 0);
  }
  for (int i = c.levels - 1; i >= 0; --i) {
    const std::string base = "dec" + std::to_string(i);
    typename Graph<T>::Ref skip =
        skips.empty() ? typename Graph<T>::Ref{} : skips[size_t(i)];
    auto up = g.transposed_conv2d(d, p[base + ".up.weight"]);
    auto cat = skip.valid() ? g.concat_channels(skip, up) : up;
    auto h1 = g.relu(g.conv2d(cat, p[base + ".conv1.weight"], p[base + ".conv1.bias"]));
    auto hd = g.dropout(h1, c.dropout_rate, training, rng::mix(seed, drop_ordinal++));
    d = g.relu(g.conv2d(hd, p[base + ".conv2.weight"], p[base + ".conv2.bias"]));
    if (trace) {
      trace->decoder_up_channels[size_t(i)] = g.value(up).extent(1);
      trace->decoder_in_channels[size_t(i)] = g.value(cat).extent(1);
      trace->decoder_out_channels[size_t(i)] = g.value(d).extent(1);
    }
  }
  return d;
}

template <typename T>
void trace_encoder_channels(Graph<T>& g, ForwardTrace* trace,
                            const std::vector<typename Graph<T>::Ref>& evt,
                            const std::vector<typename Graph<T>::Ref>& rgb,
                            const std::vector<typename Graph<T>::Ref>& skips) {
  if (!trace) return;
  for (auto r : evt) trace->event_channels.push_back(g.value(r).extent(1));
  for (auto r : rgb) trace->rgb_channels.push_back(g.value(r).extent(1));
  for (auto r : skips) trace->skip_channels.push_back(g.value(r).extent(1));
}

}  // namespace

template <typename T>
BoundModel<T> forward_model(Graph<T>& g, const Model<T>& model, const Tensor<T>* rgb,
                            const Tensor<T>* event, bool training, uint64_t seed,
                            ForwardTrace* trace) {
  const ModelConfig& c = model.config;
  c.validate();
  const bool needs_event = model.kind != ArchKind::kRgbOnly;
  if (!rgb) throw std::invalid_argument("forward: missing RGB input");
  if (needs_event && !event)
    throw std::invalid_argument("forward: architecture '" + to_string(model.kind) +
                                "' requires an event input");
  check_input(c, *rgb, c.rgb_channels, "rgb");
  if (needs_event) check_input(c, *event, c.event_channels, "event");
  if (needs_event && event->extent(0) != rgb->extent(0))
    throw std::invalid_argument("forward: rgb/event batch sizes differ");

  Binder<T> p(g, model);
  BoundModel<T> out;
  out.param_refs = p.refs;
  uint64_t drop_ordinal = 0;

  auto rgb_in = g.input(*rgb);
  typename Graph<T>::Ref evt_in;
  if (needs_event) evt_in = g.input(*event);

  typename Graph<T>::Ref bottleneck;
  std::vector<typename Graph<T>::Ref> skips;

  switch (model.kind) {
    case ArchKind::kBimodal: {
      auto [s_feats, s_deep] =
          run_encoder(g, p, "rgb_enc", c, rgb_in, training, seed, drop_ordinal);
      auto [e_feats, e_deep] =
          run_encoder(g, p, "evt_enc", c, evt_in, training, seed, drop_ordinal);
      for (int i = 0; i < c.levels; ++i)  // X_n = [E_n, S_n]
        skips.push_back(g.concat_channels(e_feats[size_t(i)], s_feats[size_t(i)]));
      trace_encoder_channels(g, trace, e_feats, s_feats, skips);

      std::vector<typename Graph<T>::Ref> rgb_w, rgb_b, evt_w, evt_b;
      for (int r : c.rgb_aspp_rates) {
        rgb_w.push_back(p["aspp.rgb_r" + std::to_string(r) + ".weight"]);
        rgb_b.push_back(p["aspp.rgb_r" + std::to_string(r) + ".bias"]);
      }
      for (int r : c.event_aspp_rates) {
        evt_w.push_back(p["aspp.evt_r" + std::to_string(r) + ".weight"]);
        evt_b.push_back(p["aspp.evt_r" + std::to_string(r) + ".bias"]);
      }
      bottleneck = aspp(g, s_deep, e_deep, c.rgb_aspp_rates, c.event_aspp_rates,
                        rgb_w, rgb_b, evt_w, evt_b, p["aspp.project.weight"],
                        p["aspp.project.bias"]);
      break;
    }
    case ArchKind::kPreEncoder: {
      auto fused = g.concat_channels(rgb_in, evt_in);
      auto [feats, deep] =
          run_encoder(g, p, "enc", c, fused, training, seed, drop_ordinal);
      (void)feats;  // no skip connections in this architecture
      bottleneck = deep;
      break;
    }
    case ArchKind::kPreDecoder: {
      auto [s_feats, s_deep] =
          run_encoder(g, p, "rgb_enc", c, rgb_in, training, seed, drop_ordinal);
      auto [e_feats, e_deep] =
          run_encoder(g, p, "evt_enc", c, evt_in, training, seed, drop_ordinal);
      (void)s_feats;
      (void)e_feats;
      bottleneck = g.concat_channels(e_deep, s_deep);
      break;
    }
    case ArchKind::kRgbOnly: {
      auto [s_feats, s_deep] =
          run_encoder(g, p, "rgb_enc", c, rgb_in, training, seed, drop_ordinal);
      skips = s_feats;
      trace_encoder_channels(g, trace, {}, s_feats, skips);
      bottleneck = s_deep;
      break;
    }
  }

  if (trace) trace->bottleneck_channels = g.value(bottleneck).extent(1);
  auto d0 = run_decoder(g, p, c, bottleneck, skips, training, seed, drop_ordinal, trace);
  out.logits = g.conv2d(d0, p["classifier.weight"], p["classifier.bias"], 1, 1, 0);
  return out;
}

namespace {
template <typename T>
void require_kind(const Model<T>& m, ArchKind want) {
  if (m.kind != want)
    throw std::invalid_argument("forward: model is '" + to_string(m.kind) +
                                "', expected '" + to_string(want) + "'");
}
}  // namespace

template <typename T>
BoundModel<T> forward_bimodal(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                              const Tensor<T>& event, bool training, uint64_t seed,
                              ForwardTrace* trace) {
  require_kind(m, ArchKind::kBimodal);
  return forward_model(g, m, &rgb, &event, training, seed, trace);
}

template <typename T>
BoundModel<T> forward_pre_encoder(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                                  const Tensor<T>& event, bool training, uint64_t seed,
                                  ForwardTrace* trace) {
  require_kind(m, ArchKind::kPreEncoder);
  return forward_model(g, m, &rgb, &event, training, seed, trace);
}

template <typename T>
BoundModel<T> forward_pre_decoder(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                                  const Tensor<T>& event, bool training, uint64_t seed,
                                  ForwardTrace* trace) {
  require_kind(m, ArchKind::kPreDecoder);
  return forward_model(g, m, &rgb, &event, training, seed, trace);
}

template <typename T>
BoundModel<T> forward_rgb_only(Graph<T>& g, const Model<T>& m, const Tensor<T>& rgb,
                               bool training, uint64_t seed, ForwardTrace* trace) {
  require_kind(m, ArchKind::kRgbOnly);
  return forward_model(g, m, &rgb, static_cast<const Tensor<T>*>(nullptr), training,
                       seed, trace);
}

// explicit instantiations
#define EVSEG_INSTANTIATE_MODEL(T)                                                     \
  template struct Model<T>;                                                            \
  template Model<T> init_model<T>(ArchKind, const ModelConfig&, uint64_t);             \
  template BoundModel<T> forward_model<T>(Graph<T>&, const Model<T>&, const Tensor<T>*,\
                                          const Tensor<T>*, bool, uint64_t,           \
                                          ForwardTrace*);                              \
  template BoundModel<T> forward_bimodal<T>(Graph<T>&, const Model<T>&,                \
                                            const Tensor<T>&, const Tensor<T>&, bool, \
                                            uint64_t, ForwardTrace*);                  \
  template BoundModel<T> forward_pre_encoder<T>(Graph<T>&, const Model<T>&,            \
                                                const Tensor<T>&, const Tensor<T>&,   \
                                                bool, uint64_t, ForwardTrace*);        \
  template BoundModel<T> forward_pre_decoder<T>(Graph<T>&, const Model<T>&,            \
                                                const Tensor<T>&, const Tensor<T>&,   \
                                                bool, uint64_t, ForwardTrace*);        \
  template BoundModel<T> forward_rgb_only<T>(Graph<T>&, const Model<T>&,               \
                                             const Tensor<T>&, bool, uint64_t,        \
                                             ForwardTrace*);                           \
  template EncoderBlockOut<T> encoder_block<T>(                                        \
      Graph<T>&, typename Graph<T>::Ref, typename Graph<T>::Ref,                      \
      typename Graph<T>::Ref, typename Graph<T>::Ref, typename Graph<T>::Ref, double, \
      bool, uint64_t);                                                                 \
  template typename Graph<T>::Ref decoder_block<T>(                                    \
      Graph<T>&, typename Graph<T>::Ref, typename Graph<T>::Ref,                      \
      typename Graph<T>::Ref, typename Graph<T>::Ref, typename Graph<T>::Ref,         \
      typename Graph<T>::Ref, typename Graph<T>::Ref, double, bool, uint64_t);        \
  template typename Graph<T>::Ref aspp<T>(                                             \
      Graph<T>&, typename Graph<T>::Ref, typename Graph<T>::Ref,                      \
      const std::vector<int>&, const std::vector<int>&,                                \
      const std::vector<typename Graph<T>::Ref>&,                                      \
      const std::vector<typename Graph<T>::Ref>&,                                      \
      const std::vector<typename Graph<T>::Ref>&,                                      \
      const std::vector<typename Graph<T>::Ref>&, typename Graph<T>::Ref,             \
      typename Graph<T>::Ref);

EVSEG_INSTANTIATE_MODEL(float)
EVSEG_INSTANTIATE_MODEL(double)
#undef EVSEG_INSTANTIATE_MODEL

}  // namespace evseg
