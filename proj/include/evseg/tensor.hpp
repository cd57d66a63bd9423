#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evseg {

// Dimension order for 4-d data is batch x channels x height x width,
// row-major contiguous.
using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

// Plain n-d value array. Graph nodes, parameters and datasets all trade in
// this type; autodiff bookkeeping lives in Graph, not here.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), values_(checked_numel(shape_), T(0)) {}

  Tensor(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (int64_t(values_.size()) != shape_numel(shape_))
      throw std::invalid_argument("Tensor: " + shape_str(shape_) + " holds " +
                                  std::to_string(shape_numel(shape_)) +
                                  " values, got " +
                                  std::to_string(values_.size()));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, T v) {
    Tensor t(std::move(shape));
    for (auto& x : t.values_) x = v;
    return t;
  }

  const Shape& shape() const { return shape_; }
  int extent(size_t i) const { return shape_[i]; }
  size_t rank() const { return shape_.size(); }
  int64_t numel() const { return int64_t(values_.size()); }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  T& operator[](int64_t i) { return values_[size_t(i)]; }
  const T& operator[](int64_t i) const { return values_[size_t(i)]; }

  // 4-d accessors; callers are responsible for rank.
  T& at(int b, int c, int y, int x) { return values_[size_t(flat(b, c, y, x))]; }
  const T& at(int b, int c, int y, int x) const {
    return values_[size_t(flat(b, c, y, x))];
  }
  int64_t flat(int b, int c, int y, int x) const {
    return ((int64_t(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(values_.size());
    for (size_t i = 0; i < values_.size(); ++i) out[i] = U(values_[i]);
    return Tensor<U>(shape_, std::move(out));
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  static int64_t checked_numel(const Shape& s) {
    for (int e : s)
      if (e < 0) throw std::invalid_argument("Tensor: negative extent in " + shape_str(s));
    return shape_numel(s);
  }

  Shape shape_;
  std::vector<T> values_;
};

// Per-pixel class indices, shape [B,H,W]. Shared by the loss, the metrics
// and the dataset masks.
struct ClassGrid {
  int b = 0, h = 0, w = 0;
  std::vector<int32_t> ids;

  ClassGrid() = default;
  ClassGrid(int b_, int h_, int w_)
      : b(b_), h(h_), w(w_), ids(size_t(b_) * h_ * w_, 0) {}

  int64_t numel() const { return int64_t(b) * h * w; }
  int32_t& at(int bi, int y, int x) {
    return ids[(size_t(bi) * h + y) * w + x];
  }
  int32_t at(int bi, int y, int x) const {
    return ids[(size_t(bi) * h + y) * w + x];
  }
  bool same_shape(const ClassGrid& o) const {
    return b == o.b && h == o.h && w == o.w;
  }
};

}  // namespace evseg
