#include "evseg/metrics.hpp"

#include <stdexcept>
#include <string>

namespace evseg {

void ConfusionCounts::add(const ClassGrid& pred, const ClassGrid& gt) {
  if (!pred.same_shape(gt))
    throw std::invalid_argument("metrics: prediction grid " +
                                std::to_string(pred.b) + "x" + std::to_string(pred.h) +
                                "x" + std::to_string(pred.w) +
                                " does not match ground truth " +
                                std::to_string(gt.b) + "x" + std::to_string(gt.h) +
                                "x" + std::to_string(gt.w));
  for (size_t i = 0; i < gt.ids.size(); ++i) {
    const int32_t p = pred.ids[i];
    const int32_t g = gt.ids[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
      throw std::invalid_argument("metrics: class value outside [0," +
                                  std::to_string(num_classes) + ")");
    if (p == g) {
      tp[size_t(g)] += 1;
    } else {
      fp[size_t(p)] += 1;
      fn[size_t(g)] += 1;
    }
  }
  total_pixels += gt.numel();
}

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (other.num_classes != num_classes)
    throw std::invalid_argument("metrics: merging counts with different class counts");
  for (int c = 0; c < num_classes; ++c) {
    tp[size_t(c)] += other.tp[size_t(c)];
    fp[size_t(c)] += other.fp[size_t(c)];
    fn[size_t(c)] += other.fn[size_t(c)];
  }
  total_pixels += other.total_pixels;
}

double ConfusionCounts::pixel_accuracy() const {
  if (total_pixels == 0) return 0.0;
  int64_t correct = 0;
  for (int64_t t : tp) correct += t;
  return double(correct) / double(total_pixels);
}

std::vector<double> ConfusionCounts::per_class_iou() const {
  std::vector<double> iou(size_t(num_classes), -1.0);
  for (int c = 0; c < num_classes; ++c) {
    const int64_t uni = tp[size_t(c)] + fp[size_t(c)] + fn[size_t(c)];
    if (uni > 0) iou[size_t(c)] = double(tp[size_t(c)]) / double(uni);
  }
  return iou;
}

double ConfusionCounts::mean_iou(bool include_background) const {
  const std::vector<double> iou = per_class_iou();
  double acc = 0.0;
  int counted = 0;
  for (int c = include_background ? 0 : 1; c < num_classes; ++c) {
    if (iou[size_t(c)] < 0.0) continue;  // absent from both masks
    acc += iou[size_t(c)];
    ++counted;
  }
  return counted ? acc / counted : 0.0;
}

double pixel_accuracy(const ClassGrid& pred, const ClassGrid& gt) {
  if (!pred.same_shape(gt))
    throw std::invalid_argument("pixel_accuracy: shape mismatch");
  if (gt.ids.empty()) return 0.0;
  int64_t correct = 0;
  for (size_t i = 0; i < gt.ids.size(); ++i)
    if (pred.ids[i] == gt.ids[i]) ++correct;
  return double(correct) / double(gt.ids.size());
}

MeanIouResult mean_iou(const ClassGrid& pred, const ClassGrid& gt, int num_classes,
                       bool include_background) {
  ConfusionCounts counts(num_classes);
  counts.add(pred, gt);
  MeanIouResult r;
  r.per_class = counts.per_class_iou();
  r.miou = counts.mean_iou(include_background);
  return r;
}

}  // namespace evseg
