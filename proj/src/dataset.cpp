#include "evseg/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "evseg/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace evseg {

// ---------------------------------------------------------------------------
// netpbm io

namespace {

void read_pnm_header(std::ifstream& f, const std::string& path, const char* magic,
                     int& h, int& w) {
  std::string tag;
  f >> tag;
  if (tag != magic)
    throw DataError(path + ": expected " + std::string(magic) + " header, got '" +
                    tag + "'");
  int maxval = 0;
  // skip comments between header fields
  const auto next_int = [&](int& out) {
    std::string tok;
    while (f >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(f, rest);
        continue;
      }
      out = std::stoi(tok);
      return;
    }
    throw DataError(path + ": truncated header");
  };
  next_int(w);
  next_int(h);
  next_int(maxval);
  if (maxval != 255) throw DataError(path + ": only maxval 255 is supported");
  f.get();  // single whitespace before binary payload
}

}  // namespace

void write_ppm(const std::string& path, const uint8_t* rgb_chw, int h, int w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_ppm: cannot open " + path);
  f << "P6\n" << w << ' ' << h << "\n255\n";
  const size_t plane = size_t(h) * w;
  std::vector<uint8_t> row(size_t(w) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        row[size_t(x) * 3 + c] = rgb_chw[size_t(c) * plane + size_t(y) * w + x];
    f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
  }
  if (!f) throw DataError("write_ppm: write failed for " + path);
}

std::vector<uint8_t> read_ppm(const std::string& path, int& h, int& w) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_ppm: cannot open " + path);
  read_pnm_header(f, path, "P6", h, w);
  const size_t plane = size_t(h) * w;
  std::vector<uint8_t> interleaved(plane * 3);
  f.read(reinterpret_cast<char*>(interleaved.data()), std::streamsize(plane * 3));
  if (size_t(f.gcount()) != plane * 3) throw DataError("read_ppm: truncated " + path);
  std::vector<uint8_t> chw(plane * 3);
  for (size_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) chw[size_t(c) * plane + i] = interleaved[i * 3 + c];
  return chw;
}

void write_pgm(const std::string& path, const uint8_t* gray, int h, int w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_pgm: cannot open " + path);
  f << "P5\n" << w << ' ' << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(gray), std::streamsize(size_t(h) * w));
  if (!f) throw DataError("write_pgm: write failed for " + path);
}

std::vector<uint8_t> read_pgm(const std::string& path, int& h, int& w) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_pgm: cannot open " + path);
  read_pnm_header(f, path, "P5", h, w);
  std::vector<uint8_t> gray(size_t(h) * w);
  f.read(reinterpret_cast<char*>(gray.data()), std::streamsize(gray.size()));
  if (size_t(f.gcount()) != gray.size()) throw DataError("read_pgm: truncated " + path);
  return gray;
}

// ---------------------------------------------------------------------------
// sequence io

namespace {

std::string frame_name(const char* stem, int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04d.%s", stem, i, ext);
  return buf;
}

json spec_to_json(const SceneSpec& s) {
  json j;
  j["num_objects"] = s.num_objects;
  j["light"] = to_string(s.light);
  j["trajectory"] = to_string(s.trajectory);
  j["speed"] = to_string(s.speed);
  j["distance"] = to_string(s.distance);
  j["seed"] = s.seed;
  j["height"] = s.height;
  j["width"] = s.width;
  j["subframes"] = s.subframes;
  j["dvs_threshold"] = s.dvs_threshold;
  if (s.speed_px_override >= 0.0) j["speed_px_override"] = s.speed_px_override;
  return j;
}

SceneSpec spec_from_json(const json& j) {
  SceneSpec s;
  s.num_objects = j.at("num_objects").get<int>();
  s.light = light_from_string(j.at("light").get<std::string>());
  s.trajectory = trajectory_from_string(j.at("trajectory").get<std::string>());
  s.speed = speed_from_string(j.at("speed").get<std::string>());
  s.distance = distance_from_string(j.at("distance").get<std::string>());
  s.seed = j.at("seed").get<uint64_t>();
  s.height = j.at("height").get<int>();
  s.width = j.at("width").get<int>();
  s.subframes = j.value("subframes", 8);
  s.dvs_threshold = j.value("dvs_threshold", 0.2);
  s.speed_px_override = j.value("speed_px_override", -1.0);
  return s;
}

}  // namespace

void write_sequence(const std::string& dir, const LabeledSequence& seq) {
  fs::create_directories(dir);
  const size_t plane = size_t(seq.h) * seq.w;
  for (int i = 0; i < seq.n_frames; ++i) {
    write_ppm(dir + "/" + frame_name("rgb", i, "ppm"),
              seq.rgb.data() + size_t(i) * 3 * plane, seq.h, seq.w);
    write_pgm(dir + "/" + frame_name("mask", i, "pgm"),
              seq.masks.data() + size_t(i) * plane, seq.h, seq.w);
  }
  write_events(dir + "/events.evs", seq.events);
  {
    std::ofstream f(dir + "/scene.json");
    if (!f) throw DataError("write_sequence: cannot open scene.json in " + dir);
    f << spec_to_json(seq.spec).dump(2) << '\n';
  }
  {
    std::ofstream f(dir + "/timestamps.txt");
    if (!f) throw DataError("write_sequence: cannot open timestamps.txt in " + dir);
    for (int64_t t : seq.timestamps_us) f << t << '\n';
  }
}

LabeledSequence read_sequence(const std::string& dir) {
  LabeledSequence seq;
  {
    std::ifstream f(dir + "/scene.json");
    if (!f) throw DataError("read_sequence: missing scene.json in " + dir);
    json j;
    try {
      f >> j;
      seq.spec = spec_from_json(j);
    } catch (const json::exception& e) {
      throw DataError("read_sequence: bad scene.json in " + dir + ": " + e.what());
    }
  }
  {
    std::ifstream f(dir + "/timestamps.txt");
    if (!f) throw DataError("read_sequence: missing timestamps.txt in " + dir);
    int64_t t;
    while (f >> t) seq.timestamps_us.push_back(t);
  }
  seq.n_frames = int(seq.timestamps_us.size());
  if (seq.n_frames == 0) throw DataError("read_sequence: no frames listed in " + dir);

  for (int i = 0; i < seq.n_frames; ++i) {
    int h = 0, w = 0;
    std::vector<uint8_t> rgb = read_ppm(dir + "/" + frame_name("rgb", i, "ppm"), h, w);
    if (i == 0) {
      seq.h = h;
      seq.w = w;
    } else if (h != seq.h || w != seq.w) {
      throw DataError("read_sequence: frame size mismatch in " + dir);
    }
    seq.rgb.insert(seq.rgb.end(), rgb.begin(), rgb.end());
    int mh = 0, mw = 0;
    std::vector<uint8_t> mask = read_pgm(dir + "/" + frame_name("mask", i, "pgm"), mh, mw);
    if (mh != seq.h || mw != seq.w)
      throw DataError("read_sequence: mask size mismatch in " + dir);
    seq.masks.insert(seq.masks.end(), mask.begin(), mask.end());
  }
  seq.events = read_events(dir + "/events.evs");
  return seq;
}

std::vector<std::string> list_sequence_dirs(const std::string& root) {
  if (!fs::is_directory(root))
    throw DataError("list_sequence_dirs: " + root + " is not a directory");
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "scene.json"))
      dirs.push_back(entry.path().string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// ---------------------------------------------------------------------------
// sample assembly

std::vector<DataSample> samples_from_sequence(const LabeledSequence& seq) {
  std::vector<DataSample> out;
  if (seq.n_frames < 2) return out;
  const int64_t t0 = seq.timestamps_us.front();
  const std::vector<EventFrame> windows = accumulate_events(
      seq.events, kDefaultWindowUs, seq.h, seq.w, t0, seq.n_frames - 1);
  const size_t plane = size_t(seq.h) * seq.w;
  for (int i = 1; i < seq.n_frames; ++i) {
    DataSample s;
    s.h = seq.h;
    s.w = seq.w;
    s.rgb.assign(seq.rgb.begin() + size_t(i) * 3 * plane,
                 seq.rgb.begin() + size_t(i + 1) * 3 * plane);
    s.mask.assign(seq.masks.begin() + size_t(i) * plane,
                  seq.masks.begin() + size_t(i + 1) * plane);
    s.events = windows[size_t(i - 1)];
    s.meta = seq.spec;
    out.push_back(std::move(s));
  }
  return out;
}

int Dataset::max_class_id() const {
  int m = 0;
  for (const DataSample& s : samples)
    for (uint8_t v : s.mask) m = std::max(m, int(v));
  return m;
}

Dataset load_dataset(const std::string& root) {
  Dataset ds;
  for (const std::string& dir : list_sequence_dirs(root)) {
    const LabeledSequence seq = read_sequence(dir);
    std::vector<DataSample> samples = samples_from_sequence(seq);
    for (DataSample& s : samples) ds.samples.push_back(std::move(s));
  }
  return ds;
}

template <typename T>
Tensor<T> rgb_batch(const std::vector<const DataSample*>& batch) {
  if (batch.empty()) throw std::invalid_argument("rgb_batch: empty batch");
  const int h = batch[0]->h, w = batch[0]->w;
  Tensor<T> t({int(batch.size()), 3, h, w});
  T* d = t.data();
  const T inv = T(1) / T(255);
  for (const DataSample* s : batch) {
    if (s->h != h || s->w != w)
      throw std::invalid_argument("rgb_batch: mixed sample sizes");
    for (uint8_t v : s->rgb) *d++ = T(v) * inv;
  }
  return t;
}

template <typename T>
Tensor<T> event_batch(const std::vector<const DataSample*>& batch, int clip) {
  if (batch.empty()) throw std::invalid_argument("event_batch: empty batch");
  const int h = batch[0]->h, w = batch[0]->w;
  Tensor<T> t({int(batch.size()), 2, h, w});
  T* d = t.data();
  const T inv = T(1) / T(clip);
  for (const DataSample* s : batch) {
    for (uint32_t c : s->events.counts) {
      const uint32_t cc = c > uint32_t(clip) ? uint32_t(clip) : c;
      *d++ = T(cc) * inv;
    }
  }
  return t;
}

ClassGrid mask_batch(const std::vector<const DataSample*>& batch) {
  if (batch.empty()) throw std::invalid_argument("mask_batch: empty batch");
  const int h = batch[0]->h, w = batch[0]->w;
  ClassGrid g(int(batch.size()), h, w);
  int32_t* d = g.ids.data();
  for (const DataSample* s : batch)
    for (uint8_t v : s->mask) *d++ = v;
  return g;
}

template Tensor<float> rgb_batch<float>(const std::vector<const DataSample*>&);
template Tensor<double> rgb_batch<double>(const std::vector<const DataSample*>&);
template Tensor<float> event_batch<float>(const std::vector<const DataSample*>&, int);
template Tensor<double> event_batch<double>(const std::vector<const DataSample*>&, int);

}  // namespace evseg
