#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "evseg/common.hpp"
#include "evseg/events.hpp"
#include "evseg/rng.hpp"

using namespace evseg;

namespace {

std::vector<Event> random_stream(rng::Stream& rs, int n, int h, int w, int64_t t_max) {
  std::vector<Event> events;
  events.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    Event e;
    e.x = uint16_t(rs.next_below(uint64_t(w)));
    e.y = uint16_t(rs.next_below(uint64_t(h)));
    e.p = uint8_t(rs.next_below(2));
    e.t = int64_t(rs.next_below(uint64_t(t_max)));
    events.push_back(e);
  }
  std::sort(events.begin(), events.end(),
            [](const Event& a, const Event& b) { return a.t < b.t; });
  return events;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("accumulate_events: empty stream gives all-zero frames") {
  const auto frames = accumulate_events({}, 25000, 16, 16, 0, 3);
  REQUIRE(frames.size() == 3);
  for (const EventFrame& f : frames) {
    CHECK(f.total() == 0);
    CHECK(f.h == 16);
    CHECK(f.w == 16);
  }
}

TEST_CASE("accumulate_events: single event lands at (p, y, x) of its window") {
  // T = 25 ms per the 40 Hz frame alignment
  std::vector<Event> stream{{5, 7, 1, 10000}};
  const auto frames = accumulate_events(stream, 25000, 16, 16, 0, 2);
  CHECK(frames[0].at(1, 7, 5) == 1);
  CHECK(frames[0].total() == 1);
  CHECK(frames[1].total() == 0);
}

TEST_CASE("accumulate_events: boundary event lands in the next frame") {
  // half-open windows [tT, (t+1)T): an event exactly at t = T is frame 1
  std::vector<Event> stream{{0, 0, 0, 25000}};
  const auto frames = accumulate_events(stream, 25000, 4, 4, 0, 2);
  CHECK(frames[0].total() == 0);
  CHECK(frames[1].total() == 1);
  CHECK(frames[1].at(0, 0, 0) == 1);
}

TEST_CASE("accumulate_events: rejects unsorted streams with the inversion index") {
  std::vector<Event> stream{{0, 0, 0, 100}, {1, 1, 1, 50}};
  try {
    accumulate_events(stream, 25000, 4, 4, 0, 1);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("event 1") != std::string::npos);
  }
}

TEST_CASE("accumulate_events: rejects out-of-bounds coordinates") {
  std::vector<Event> bad_x{{4, 0, 0, 10}};
  CHECK_THROWS_AS(accumulate_events(bad_x, 25000, 4, 4, 0, 1), DataError);
  std::vector<Event> bad_p{{0, 0, 2, 10}};
  CHECK_THROWS_AS(accumulate_events(bad_p, 25000, 4, 4, 0, 1), DataError);
}

TEST_CASE("accumulate_events: count conservation on random streams") {
  rng::Stream rs(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n_frames = 1 + int(rs.next_below(5));
    const int64_t T = 1000 + int64_t(rs.next_below(30000));
    const int64_t t_start = int64_t(rs.next_below(10000));
    const auto stream = random_stream(rs, 200, 12, 10, 120000);
    const auto frames = accumulate_events(stream, T, 12, 10, t_start, n_frames);

    int64_t in_range = 0;
    for (const Event& e : stream)
      if (e.t >= t_start && e.t < t_start + n_frames * T) ++in_range;
    uint64_t total = 0;
    for (const EventFrame& f : frames) total += f.total();
    CHECK(total == uint64_t(in_range));
  }
}

TEST_CASE("accumulate_events: permutation within a window leaves frames unchanged") {
  // events sharing a timestamp may appear in any order; counts must not care
  rng::Stream rs(102);
  auto stream = random_stream(rs, 100, 8, 8, 24000);
  for (Event& e : stream) e.t = (e.t / 8000) * 8000;  // collapse onto 3 tick values
  std::stable_sort(stream.begin(), stream.end(),
                   [](const Event& x, const Event& y) { return x.t < y.t; });
  const auto a = accumulate_events(stream, 25000, 8, 8, 0, 1);

  // shuffle inside each equal-timestamp group
  auto permuted = stream;
  for (size_t lo = 0; lo < permuted.size();) {
    size_t hi = lo;
    while (hi < permuted.size() && permuted[hi].t == permuted[lo].t) ++hi;
    for (size_t i = hi - 1; i > lo; --i)
      std::swap(permuted[i], permuted[lo + rs.next_below(uint64_t(i - lo + 1))]);
    lo = hi;
  }
  const auto b = accumulate_events(permuted, 25000, 8, 8, 0, 1);
  CHECK(a[0].counts == b[0].counts);
}

TEST_CASE("accumulate_events: accumulation is additive over disjoint streams") {
  rng::Stream rs(103);
  const auto s1 = random_stream(rs, 120, 8, 8, 50000);
  const auto s2 = random_stream(rs, 80, 8, 8, 50000);
  std::vector<Event> merged = s1;
  merged.insert(merged.end(), s2.begin(), s2.end());
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });

  const auto fa = accumulate_events(s1, 25000, 8, 8, 0, 2);
  const auto fb = accumulate_events(s2, 25000, 8, 8, 0, 2);
  const auto fm = accumulate_events(merged, 25000, 8, 8, 0, 2);
  for (int f = 0; f < 2; ++f)
    for (size_t i = 0; i < fm[f].counts.size(); ++i)
      CHECK(fm[size_t(f)].counts[i] == fa[size_t(f)].counts[i] + fb[size_t(f)].counts[i]);
}

TEST_CASE("normalize_event_frames: saturating clip mapping") {
  EventFrame f(0, 25000, 2, 2);
  f.at(0, 0, 0) = 0;
  f.at(0, 0, 1) = 2;
  f.at(1, 1, 0) = 9;
  const Tensor<float> t = normalize_event_frames<float>({f}, 4);
  REQUIRE(t.shape() == Shape{1, 2, 2, 2});
  CHECK(t.at(0, 0, 0, 0) == 0.0f);
  CHECK(t.at(0, 0, 0, 1) == 0.5f);
  CHECK(t.at(0, 1, 1, 0) == 1.0f);  // clipped
  CHECK_THROWS_AS(normalize_event_frames<float>({f}, 0), std::invalid_argument);
}

TEST_CASE("event binary io: roundtrip, magic, truncation") {
  rng::Stream rs(104);
  const auto events = random_stream(rs, 257, 64, 48, 1000000);
  const std::string path = temp_path("evseg_events_test.evs");
  write_events(path, events);

  const auto back = read_events(path);
  REQUIRE(back.size() == events.size());
  for (size_t i = 0; i < events.size(); ++i) {
    CHECK(back[i].x == events[i].x);
    CHECK(back[i].y == events[i].y);
    CHECK(back[i].p == events[i].p);
    CHECK(back[i].t == events[i].t);
  }
  // 8-byte magic + 16 bytes per record
  CHECK(std::filesystem::file_size(path) == 8 + 16 * events.size());

  // wrong magic
  const std::string bad = temp_path("evseg_events_bad.evs");
  {
    std::ofstream f(bad, std::ios::binary);
    f << "NOTMAGIC" << std::string(16, '\0');
  }
  CHECK_THROWS_AS(read_events(bad), DataError);

  // truncated record
  const std::string trunc = temp_path("evseg_events_trunc.evs");
  std::filesystem::copy_file(path, trunc,
                             std::filesystem::copy_options::overwrite_existing);
  std::filesystem::resize_file(trunc, std::filesystem::file_size(trunc) - 5);
  CHECK_THROWS_AS(read_events(trunc), DataError);
}

TEST_CASE("event csv io: roundtrip with header and comments") {
  const std::string path = temp_path("evseg_events_test.csv");
  {
    std::ofstream f(path);
    f << "# debug dump\n";
    f << "x,y,t,p\n";
    f << "3,4,1000,1\n";
    f << "5,6,2000,0\n";
  }
  const auto events = read_events_csv(path);
  REQUIRE(events.size() == 2);
  CHECK(events[0].x == 3);
  CHECK(events[0].y == 4);
  CHECK(events[0].t == 1000);
  CHECK(events[0].p == 1);
  CHECK(events[1].p == 0);

  const std::string out = temp_path("evseg_events_out.csv");
  write_events_csv(out, events);
  const auto back = read_events_csv(out);
  REQUIRE(back.size() == 2);
  CHECK(back[1].t == 2000);
}
