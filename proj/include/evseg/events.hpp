#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// One asynchronous brightness-change record from a DVS. Polarity is 1 for a
// brightness increase, 0 for a decrease. Timestamps are microseconds.
struct Event {
  uint16_t x = 0;
  uint16_t y = 0;
  uint8_t p = 0;
  int64_t t = 0;
};

// Per-polarity count grid for one time window [index*T, (index+1)*T).
struct EventFrame {
  int64_t window_index = 0;
  int64_t window_us = 0;
  int h = 0, w = 0;
  std::vector<uint32_t> counts;  // [2, H, W], channel = polarity

  EventFrame() = default;
  EventFrame(int64_t index, int64_t T_us, int height, int width)
      : window_index(index),
        window_us(T_us),
        h(height),
        w(width),
        counts(size_t(2) * height * width, 0) {}

  uint32_t& at(int polarity, int y, int x) {
    return counts[(size_t(polarity) * h + y) * w + x];
  }
  uint32_t at(int polarity, int y, int x) const {
    return counts[(size_t(polarity) * h + y) * w + x];
  }
  uint64_t total() const {
    uint64_t s = 0;
    for (uint32_t c : counts) s += c;
    return s;
  }
};

// RGB frame rate of the target sensor is 40 Hz, so one event window per
// frame is 25 ms.
constexpr int64_t kDefaultWindowUs = 25000;

// Bins a time-sorted stream into n_frames windows of T_us starting at
// t_start. Window membership is half-open: event e lands in frame
// floor((t_e - t_start)/T) iff that index is in [0, n_frames). Throws
// DataError on an unsorted stream (reporting the first inversion) or
// out-of-bounds coordinates.
std::vector<EventFrame> accumulate_events(const std::vector<Event>& stream,
                                          int64_t T_us, int h, int w,
                                          int64_t t_start, int n_frames);

// Saturating count normalization: count c maps to min(c, clip)/clip so event
// frame brightness is comparable across windows. Returns [n, 2, H, W].
template <typename T>
Tensor<T> normalize_event_frames(const std::vector<EventFrame>& frames,
                                 int clip = 4);

// --- binary event stream format -------------------------------------------
//
// 16-byte little-endian records behind an 8-byte magic header:
//   offset 0: x  u16
//   offset 2: y  u16
//   offset 4: padding (2 bytes, zero)
//   offset 6: p  u8 (0 or 1)
//   offset 7: padding (1 byte, zero)
//   offset 8: t  u64 microseconds
constexpr char kEventMagic[9] = "EVST0001";

void write_events(const std::string& path, const std::vector<Event>& events);
std::vector<Event> read_events(const std::string& path);

// Plain-text debugging format, one "x,y,t,p" line per event. Lines starting
// with '#' and a leading header line are skipped.
std::vector<Event> read_events_csv(const std::string& path);
void write_events_csv(const std::string& path, const std::vector<Event>& events);

}  // namespace evseg
