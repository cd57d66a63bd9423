#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "evseg/common.hpp"
#include "evseg/tensor.hpp"

namespace evseg {

// Adam with bias correction. The paper's recipe fixes only the learning
// rate; beta1/beta2/epsilon are the conventional defaults.
template <typename T>
struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step = 0;
  std::vector<Tensor<T>> m;  // first moments, aligned with the parameter list
  std::vector<Tensor<T>> v;  // second moments
};

template <typename T>
void adam_step(std::vector<Tensor<T>*>& params,
               const std::vector<const Tensor<T>*>& grads, AdamState<T>& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const Tensor<T>* p : params) {
      state.m.push_back(Tensor<T>::zeros(p->shape()));
      state.v.push_back(Tensor<T>::zeros(p->shape()));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state sized for a different model");
  if (state.step == std::numeric_limits<int64_t>::max())
    throw NumericError("adam_step: step counter overflow");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  const T b1 = T(state.beta1), b2 = T(state.beta2);
  const T one_m_b1 = T(1.0 - state.beta1), one_m_b2 = T(1.0 - state.beta2);
  const T step_size = T(state.lr / bc1);
  const T vhat_scale = T(1.0 / bc2);
  const T eps = T(state.epsilon);

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = *grads[i];
    Tensor<T>& m = state.m[i];
    Tensor<T>& v = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(m))
      throw std::invalid_argument("adam_step: shape mismatch at parameter " +
                                  std::to_string(i));
    for (int64_t j = 0; j < p.numel(); ++j) {
      m[j] = b1 * m[j] + one_m_b1 * g[j];
      v[j] = b2 * v[j] + one_m_b2 * g[j] * g[j];
      p[j] -= step_size * m[j] / (std::sqrt(v[j] * vhat_scale) + eps);
    }
  }
}

}  // namespace evseg
