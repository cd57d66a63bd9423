#pragma once

#include <cstdint>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// Per-class pixel counts accumulated over one or more prediction/ground-truth
// grid pairs. TP_c + FN_c equals the ground-truth pixel count of class c.
struct ConfusionCounts {
  int num_classes = 0;
  int64_t total_pixels = 0;
  std::vector<int64_t> tp, fp, fn;

  ConfusionCounts() = default;
  explicit ConfusionCounts(int classes)
      : num_classes(classes), tp(classes, 0), fp(classes, 0), fn(classes, 0) {}

  // Accumulates one pair; grids must match and hold values in [0, C).
  void add(const ClassGrid& pred, const ClassGrid& gt);
  void merge(const ConfusionCounts& other);

  double pixel_accuracy() const;
  // Jaccard index per class: TP/(TP+FP+FN). Classes absent from both masks
  // (zero union) are excluded from the mean. include_background controls
  // whether class 0 participates.
  double mean_iou(bool include_background = true) const;
  // Per-class IoU; -1 marks a class with zero union.
  std::vector<double> per_class_iou() const;
};

// Fraction of pixels classified correctly.
double pixel_accuracy(const ClassGrid& pred, const ClassGrid& gt);

struct MeanIouResult {
  double miou = 0.0;
  std::vector<double> per_class;  // -1 for zero-union classes
};

MeanIouResult mean_iou(const ClassGrid& pred, const ClassGrid& gt, int num_classes,
                       bool include_background = true);

}  // namespace evseg
