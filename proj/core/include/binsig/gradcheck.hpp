#pragma once

#include <functional>
#include <vector>

#include "binsig/tensor.hpp"

namespace binsig {

// f must rebuild its forward graph on every call (define-by-run), reading
// the current contents of `point`.
template <typename T>
using ScalarFn = std::function<Tensor<T>(Tensor<T>&)>;

template <typename T>
T max_rel_error(std::span<const T> analytic, std::span<const T> numeric) {
  T worst = T(0);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const T denom = std::abs(analytic[i]) + std::abs(numeric[i]) + T(1e-12);
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

// Central differences over every coordinate of `point`. Restores the point.
template <typename T>
std::vector<T> fd_gradient(const ScalarFn<T>& f, Tensor<T>& point, T step) {
  std::vector<T> grad(point.numel());
  auto vals = point.mutable_values();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const T saved = vals[i];
    vals[i] = saved + step;
    const T up = f(point).item();
    vals[i] = saved - step;
    const T down = f(point).item();
    vals[i] = saved;
    grad[i] = (up - down) / (T(2) * step);
  }
  return grad;
}

// Max over coordinates of |analytic - central| / (|analytic| + |central| + 1e-12).
template <typename T>
T finite_difference_check(const ScalarFn<T>& f, Tensor<T>& point, T step) {
  point.set_requires_grad(true);
  point.zero_grad();
  Tensor<T> loss = f(point);
  loss.backward();
  std::vector<T> analytic(point.grad().begin(), point.grad().end());
  const std::vector<T> numeric = fd_gradient(f, point, step);
  return max_rel_error<T>(analytic, numeric);
}

}  // namespace binsig
