#pragma once

#include <string>
#include <vector>

#include "evseg/events.hpp"
#include "evseg/synth.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// On-disk sequence layout: one directory holding rgb_####.ppm (binary P6),
// mask_####.pgm (binary P5, pixel value = instance id), events.evs,
// scene.json and timestamps.txt.
void write_sequence(const std::string& dir, const LabeledSequence& seq);
LabeledSequence read_sequence(const std::string& dir);

// All sequence directories directly under `root`, sorted by name.
std::vector<std::string> list_sequence_dirs(const std::string& root);

// One training/evaluation unit: an RGB frame, the event window that precedes
// it, and its mask. Precision-independent; tensors are built at batch time.
struct DataSample {
  int h = 0, w = 0;
  std::vector<uint8_t> rgb;   // [3, H, W]
  EventFrame events;
  std::vector<uint8_t> mask;  // [H, W]
  SceneSpec meta;
};

// Pairs frame i (i >= 1) with the events accumulated over the 25 ms window
// [t_{i-1}, t_i); frame 0 has no preceding window and is skipped.
std::vector<DataSample> samples_from_sequence(const LabeledSequence& seq);

struct Dataset {
  std::vector<DataSample> samples;
  int max_class_id() const;
};

Dataset load_dataset(const std::string& root);

// --- batch assembly ---------------------------------------------------------

template <typename T>
Tensor<T> rgb_batch(const std::vector<const DataSample*>& batch);
template <typename T>
Tensor<T> event_batch(const std::vector<const DataSample*>& batch, int clip = 4);
ClassGrid mask_batch(const std::vector<const DataSample*>& batch);

// --- image io (exposed for tests) -------------------------------------------

void write_ppm(const std::string& path, const uint8_t* rgb_chw, int h, int w);
std::vector<uint8_t> read_ppm(const std::string& path, int& h, int& w);  // returns CHW
void write_pgm(const std::string& path, const uint8_t* gray, int h, int w);
std::vector<uint8_t> read_pgm(const std::string& path, int& h, int& w);

}  // namespace evseg
