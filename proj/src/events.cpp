#include "evseg/events.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "evseg/common.hpp"

namespace evseg {

std::vector<EventFrame> accumulate_events(const std::vector<Event>& stream,
                                          int64_t T_us, int h, int w,
                                          int64_t t_start, int n_frames) {
  if (T_us <= 0) throw std::invalid_argument("accumulate_events: window must be positive");
  if (n_frames < 0) throw std::invalid_argument("accumulate_events: negative frame count");

  std::vector<EventFrame> frames;
  frames.reserve(size_t(n_frames));
  for (int i = 0; i < n_frames; ++i) frames.emplace_back(i, T_us, h, w);

  int64_t prev_t = 0;
  for (size_t i = 0; i < stream.size(); ++i) {
    const Event& e = stream[i];
    if (i > 0 && e.t < prev_t)
      throw DataError("accumulate_events: stream not sorted, first inversion at event " +
                      std::to_string(i) + " (t=" + std::to_string(e.t) +
                      " after t=" + std::to_string(prev_t) + ")");
    prev_t = e.t;
    if (e.x >= w || e.y >= h)
      throw DataError("accumulate_events: event " + std::to_string(i) +
                      " at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                      ") outside " + std::to_string(w) + "x" + std::to_string(h) +
                      " sensor");
    if (e.p > 1)
      throw DataError("accumulate_events: event " + std::to_string(i) +
                      " has polarity " + std::to_string(e.p));

    const int64_t rel = e.t - t_start;
    if (rel < 0) continue;
    const int64_t idx = rel / T_us;
    if (idx >= n_frames) continue;
    frames[size_t(idx)].at(e.p, e.y, e.x) += 1;
  }
  return frames;
}

template <typename T>
Tensor<T> normalize_event_frames(const std::vector<EventFrame>& frames, int clip) {
  if (clip < 1) throw std::invalid_argument("normalize_event_frames: clip must be >= 1");
  const int n = int(frames.size());
  const int h = n ? frames[0].h : 0;
  const int w = n ? frames[0].w : 0;
  Tensor<T> out({n, 2, h, w});
  const T inv = T(1) / T(clip);
  T* d = out.data();
  for (int i = 0; i < n; ++i) {
    const EventFrame& f = frames[size_t(i)];
    if (f.h != h || f.w != w)
      throw std::invalid_argument("normalize_event_frames: inconsistent frame sizes");
    for (size_t j = 0; j < f.counts.size(); ++j) {
      const uint32_t c = f.counts[j] > uint32_t(clip) ? uint32_t(clip) : f.counts[j];
      *d++ = T(c) * inv;
    }
  }
  return out;
}

template Tensor<float> normalize_event_frames<float>(const std::vector<EventFrame>&, int);
template Tensor<double> normalize_event_frames<double>(const std::vector<EventFrame>&, int);

// ---------------------------------------------------------------------------
// binary + csv io

namespace {
constexpr size_t kRecordSize = 16;

void pack_record(const Event& e, unsigned char* rec) {
  std::memset(rec, 0, kRecordSize);
  std::memcpy(rec + 0, &e.x, 2);
  std::memcpy(rec + 2, &e.y, 2);
  rec[6] = e.p;
  const uint64_t t = uint64_t(e.t);
  std::memcpy(rec + 8, &t, 8);
}

Event unpack_record(const unsigned char* rec) {
  Event e;
  std::memcpy(&e.x, rec + 0, 2);
  std::memcpy(&e.y, rec + 2, 2);
  e.p = rec[6];
  uint64_t t = 0;
  std::memcpy(&t, rec + 8, 8);
  e.t = int64_t(t);
  return e;
}
}  // namespace

void write_events(const std::string& path, const std::vector<Event>& events) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("write_events: cannot open " + path);
  f.write(kEventMagic, 8);
  unsigned char rec[kRecordSize];
  for (const Event& e : events) {
    pack_record(e, rec);
    f.write(reinterpret_cast<const char*>(rec), kRecordSize);
  }
  if (!f) throw DataError("write_events: write failed for " + path);
}

std::vector<Event> read_events(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_events: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (f.gcount() != 8 || std::memcmp(magic, kEventMagic, 8) != 0)
    throw DataError("read_events: " + path + " is not an EVST0001 stream");
  std::vector<Event> events;
  unsigned char rec[kRecordSize];
  while (true) {
    f.read(reinterpret_cast<char*>(rec), kRecordSize);
    const auto got = f.gcount();
    if (got == 0) break;
    if (size_t(got) != kRecordSize)
      throw DataError("read_events: truncated record at end of " + path);
    events.push_back(unpack_record(rec));
  }
  return events;
}

std::vector<Event> read_events_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_events_csv: cannot open " + path);
  std::vector<Event> events;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!std::isdigit(static_cast<unsigned char>(line[0]))) continue;  // header
    long long x, y, t, p;
    if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld", &x, &y, &t, &p) != 4)
      throw DataError("read_events_csv: bad line " + std::to_string(lineno) +
                      " in " + path);
    if (x < 0 || x > 0xFFFF || y < 0 || y > 0xFFFF || t < 0 || (p != 0 && p != 1))
      throw DataError("read_events_csv: out-of-range field at line " +
                      std::to_string(lineno) + " in " + path);
    events.push_back(Event{uint16_t(x), uint16_t(y), uint8_t(p), int64_t(t)});
  }
  return events;
}

void write_events_csv(const std::string& path, const std::vector<Event>& events) {
  std::ofstream f(path);
  if (!f) throw DataError("write_events_csv: cannot open " + path);
  f << "x,y,t,p\n";
  for (const Event& e : events)
    f << e.x << ',' << e.y << ',' << e.t << ',' << int(e.p) << '\n';
  if (!f) throw DataError("write_events_csv: write failed for " + path);
}

}  // namespace evseg
