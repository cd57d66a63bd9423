#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "evseg/tensor.hpp"

namespace evseg {

// Central finite differences (f(x+h*e_i) - f(x-h*e_i)) / 2h. `f` must be
// pure and deterministic (dropout seeded-fixed). Independent of the
// reverse-mode path by construction: it only ever evaluates f.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f,
                           const Tensor<T>& x, T h) {
  if (!(h > T(0))) throw std::invalid_argument("finite_diff_grad: h must be positive");
  Tensor<T> g = Tensor<T>::zeros(x.shape());
  Tensor<T> probe = x;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T saved = probe[i];
    probe[i] = saved + h;
    const T fp = f(probe);
    probe[i] = saved - h;
    const T fm = f(probe);
    probe[i] = saved;
    g[i] = (fp - fm) / (T(2) * h);
  }
  return g;
}

// Same, restricted to a coordinate subset (for large tensors). Entries not
// in `coords` stay zero.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<T(const Tensor<T>&)>& f,
                           const Tensor<T>& x, T h,
                           const std::vector<int64_t>& coords) {
  if (!(h > T(0))) throw std::invalid_argument("finite_diff_grad: h must be positive");
  Tensor<T> g = Tensor<T>::zeros(x.shape());
  Tensor<T> probe = x;
  for (int64_t i : coords) {
    const T saved = probe[i];
    probe[i] = saved + h;
    const T fp = f(probe);
    probe[i] = saved - h;
    const T fm = f(probe);
    probe[i] = saved;
    g[i] = (fp - fm) / (T(2) * h);
  }
  return g;
}

// abs(a-b) / max(1, |a|, |b|); the guard keeps tiny gradients from blowing
// up the ratio.
template <typename T>
T relative_error(T a, T b) {
  T denom = T(1);
  if (std::abs(a) > denom) denom = std::abs(a);
  if (std::abs(b) > denom) denom = std::abs(b);
  return std::abs(a - b) / denom;
}

}  // namespace evseg
