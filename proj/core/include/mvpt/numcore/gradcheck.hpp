#pragma once

#include <functional>
#include <vector>

#include "mvpt/numcore/tensor.hpp"

namespace mvpt::numcore {

template <typename T>
using ScalarFunction = std::function<Tensor<T>(const std::vector<Tensor<T>>&)>;

// Max over all coordinates of every tensor in `point` of
//   |autodiff - central difference| / max(|autodiff|, |central difference|, 1e-8).
// `f` must return a single value and build its result from `point` with
// numcore kernels. Throws ValueError when f is not finite at any probe.
//
// tensor_floor > 0 raises the 1e-8 floor to tensor_floor * max|central difference|
// within each tensor. Coordinates far below their tensor's gradient scale then
// count by absolute error; float autodiff cannot resolve them relatively.
template <typename T>
double grad_check(const ScalarFunction<T>& f, std::vector<Tensor<T>>& point, double step,
                  double tensor_floor = 0.0);

// 32-bit check: the gradient comes from float autodiff, the reference from
// central differences of `reference` (the same function built in double) at
// the float point widened to double.
double grad_check_mixed(const ScalarFunction<float>& f, const ScalarFunction<double>& reference,
                        std::vector<Tensor<float>>& point, double step,
                        double tensor_floor = 0.0);

}  // namespace mvpt::numcore
