#include "evseg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "evseg/common.hpp"

namespace evseg {

namespace {

uint64_t fnv1a64(const uint8_t* data, size_t n) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// append helpers for the payload buffer
void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
  const size_t o = buf.size();
  buf.resize(o + 4);
  std::memcpy(buf.data() + o, &v, 4);
}
void put_u64(std::vector<uint8_t>& buf, uint64_t v) {
  const size_t o = buf.size();
  buf.resize(o + 8);
  std::memcpy(buf.data() + o, &v, 8);
}
void put_f64(std::vector<uint8_t>& buf, double v) {
  const size_t o = buf.size();
  buf.resize(o + 8);
  std::memcpy(buf.data() + o, &v, 8);
}
void put_str(std::vector<uint8_t>& buf, const std::string& s) {
  put_u32(buf, uint32_t(s.size()));
  buf.insert(buf.end(), s.begin(), s.end());
}
void put_ints(std::vector<uint8_t>& buf, const std::vector<int>& v) {
  put_u32(buf, uint32_t(v.size()));
  for (int x : v) put_u32(buf, uint32_t(x));
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size())
      throw DataError("checkpoint: truncated payload (need " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos) + ")");
  }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  std::vector<int> ints() {
    const uint32_t n = u32();
    std::vector<int> v(n);
    for (uint32_t i = 0; i < n; ++i) v[i] = int(u32());
    return v;
  }
};

void put_config(std::vector<uint8_t>& buf, const ModelConfig& c) {
  put_u32(buf, uint32_t(c.levels));
  put_ints(buf, c.widths);
  put_u32(buf, uint32_t(c.num_classes));
  put_u32(buf, uint32_t(c.input_h));
  put_u32(buf, uint32_t(c.input_w));
  put_ints(buf, c.rgb_aspp_rates);
  put_ints(buf, c.event_aspp_rates);
  put_f64(buf, c.dropout_rate);
  put_u32(buf, uint32_t(c.event_channels));
  put_u32(buf, uint32_t(c.rgb_channels));
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.levels = int(r.u32());
  c.widths = r.ints();
  c.num_classes = int(r.u32());
  c.input_h = int(r.u32());
  c.input_w = int(r.u32());
  c.rgb_aspp_rates = r.ints();
  c.event_aspp_rates = r.ints();
  c.dropout_rate = r.f64();
  c.event_channels = int(r.u32());
  c.rgb_channels = int(r.u32());
  return c;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model) {
  std::vector<uint8_t> payload;
  put_u32(payload, uint32_t(model.kind));
  put_config(payload, model.config);
  put_u32(payload, uint32_t(model.params.size()));
  for (size_t i = 0; i < model.params.size(); ++i) {
    put_str(payload, model.names[i]);
    const Tensor<T>& t = model.params[i];
    put_u32(payload, uint32_t(t.rank()));
    for (size_t d = 0; d < t.rank(); ++d) put_u32(payload, uint32_t(t.extent(d)));
    const size_t o = payload.size();
    payload.resize(o + size_t(t.numel()) * 4);
    float* dst = reinterpret_cast<float*>(payload.data() + o);
    for (int64_t j = 0; j < t.numel(); ++j) dst[j] = float(t[j]);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  f.write(reinterpret_cast<const char*>(payload.data()),
          std::streamsize(payload.size()));
  const uint64_t sum = fnv1a64(payload.data(), payload.size());
  f.write(reinterpret_cast<const char*>(&sum), 8);
  if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

template <typename T>
Model<T> load_checkpoint(const std::string& path, std::optional<ArchKind> expected_kind,
                         const ModelConfig* expected_config) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw DataError("load_checkpoint: " + path + " is not an EVCK0001 checkpoint");

  std::vector<uint8_t> rest((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
  if (rest.size() < 8)
    throw DataError("load_checkpoint: " + path + " is truncated before the checksum");
  uint64_t stored = 0;
  std::memcpy(&stored, rest.data() + rest.size() - 8, 8);
  rest.resize(rest.size() - 8);
  const uint64_t computed = fnv1a64(rest.data(), rest.size());
  if (stored != computed)
    throw DataError("load_checkpoint: checksum mismatch in " + path +
                    " (file corrupt or truncated)");

  Reader r{rest};
  const uint32_t kind_raw = r.u32();
  if (kind_raw > uint32_t(ArchKind::kRgbOnly))
    throw DataError("load_checkpoint: unknown architecture tag " +
                    std::to_string(kind_raw));
  Model<T> m;
  m.kind = ArchKind(kind_raw);
  m.config = read_config(r);

  // records must match the architecture the embedded config implies
  std::vector<ParamSpec> specs;
  try {
    specs = enumerate_parameters(m.kind, m.config);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("load_checkpoint: embedded config is invalid: ") +
                    e.what());
  }

  const uint32_t count = r.u32();
  if (count != specs.size())
    throw DataError("load_checkpoint: config expects " +
                    std::to_string(specs.size()) + " parameters, file holds " +
                    std::to_string(count));

  for (size_t i = 0; i < specs.size(); ++i) {
    const std::string name = r.str();
    const uint32_t rank = r.u32();
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = int(r.u32());
    if (name != specs[i].name || shape != specs[i].shape)
      throw DataError("load_checkpoint: parameter record " + std::to_string(i) +
                      " is '" + name + "' " + shape_str(shape) + ", config expects '" +
                      specs[i].name + "' " + shape_str(specs[i].shape));
    const int64_t n = shape_numel(shape);
    r.need(size_t(n) * 4);
    Tensor<T> t(shape);
    const float* src = reinterpret_cast<const float*>(rest.data() + r.pos);
    for (int64_t j = 0; j < n; ++j) t[j] = T(src[j]);
    r.pos += size_t(n) * 4;
    m.names.push_back(name);
    m.params.push_back(std::move(t));
  }
  if (r.pos != rest.size())
    throw DataError("load_checkpoint: " + std::to_string(rest.size() - r.pos) +
                    " trailing bytes after the last parameter");

  if (expected_kind && *expected_kind != m.kind)
    throw DataError("load_checkpoint: checkpoint holds a '" + to_string(m.kind) +
                    "' model, expected '" + to_string(*expected_kind) + "'");
  if (expected_config) {
    const std::vector<ParamSpec> want = enumerate_parameters(
        expected_kind.value_or(m.kind), *expected_config);
    for (size_t i = 0; i < std::min(want.size(), specs.size()); ++i) {
      if (want[i].name != specs[i].name || want[i].shape != specs[i].shape)
        throw DataError("load_checkpoint: first mismatching parameter is '" +
                        specs[i].name + "' " + shape_str(specs[i].shape) +
                        ", expected '" + want[i].name + "' " +
                        shape_str(want[i].shape));
    }
    if (want.size() != specs.size())
      throw DataError("load_checkpoint: parameter count differs from the expected "
                      "config (" + std::to_string(specs.size()) + " vs " +
                      std::to_string(want.size()) + ")");
  }
  return m;
}

template void save_checkpoint<float>(const std::string&, const Model<float>&);
template void save_checkpoint<double>(const std::string&, const Model<double>&);
template Model<float> load_checkpoint<float>(const std::string&, std::optional<ArchKind>,
                                             const ModelConfig*);
template Model<double> load_checkpoint<double>(const std::string&,
                                               std::optional<ArchKind>,
                                               const ModelConfig*);

}  // namespace evseg
