#include "mvpt/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mvpt/error.hpp"

namespace mvpt::numcore {

namespace {

template <typename T>
double evaluate(const ScalarFunction<T>& f, const std::vector<Tensor<T>>& point) {
  typename Tape<T>::Pause pause;
  const double v = static_cast<double>(f(point).item());
  if (!std::isfinite(v)) throw ValueError("grad_check: function value is not finite");
  return v;
}

template <typename T>
std::vector<std::vector<double>> autodiff_gradients(const ScalarFunction<T>& f,
                                                    std::vector<Tensor<T>>& point) {
  for (auto& p : point) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  Tape<T> tape;
  GradientMap<T> grads;
  {
    typename Tape<T>::Scope scope(tape);
    Tensor<T> loss = f(point);
    if (!std::isfinite(static_cast<double>(loss.item()))) {
      throw ValueError("grad_check: function value is not finite");
    }
    grads = backward(tape, loss);
  }
  std::vector<std::vector<double>> out;
  for (auto& p : point) {
    auto g = grads.at(p);
    out.emplace_back(g.data().begin(), g.data().end());
    p.zero_grad();
  }
  return out;
}

template <typename T>
std::vector<std::vector<double>> central_differences(const ScalarFunction<T>& f,
                                                     std::vector<Tensor<T>>& point,
                                                     double step) {
  std::vector<std::vector<double>> out;
  for (auto& p : point) {
    auto values = p.mutable_data();
    std::vector<double> g(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = static_cast<T>(static_cast<double>(saved) + step);
      const double up = evaluate(f, point);
      values[i] = static_cast<T>(static_cast<double>(saved) - step);
      const double down = evaluate(f, point);
      values[i] = saved;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_error(const std::vector<std::vector<double>>& ad,
                          const std::vector<std::vector<double>>& cd, double tensor_floor) {
  double worst = 0.0;
  for (std::size_t t = 0; t < ad.size(); ++t) {
    double scale = 0.0;
    for (double c : cd[t]) scale = std::max(scale, std::abs(c));
    const double floor = std::max(1e-8, tensor_floor * scale);
    for (std::size_t i = 0; i < ad[t].size(); ++i) {
      const double a = ad[t][i], c = cd[t][i];
      const double denom = std::max({std::abs(a), std::abs(c), floor});
      worst = std::max(worst, std::abs(a - c) / denom);
    }
  }
  return worst;
}

}  // namespace

template <typename T>
double grad_check(const ScalarFunction<T>& f, std::vector<Tensor<T>>& point, double step,
                  double tensor_floor) {
  if (!(step > 0.0)) throw ValueError("grad_check: step must be positive");
  if (!(tensor_floor >= 0.0)) throw ValueError("grad_check: tensor_floor must be nonnegative");
  auto ad = autodiff_gradients(f, point);
  auto cd = central_differences(f, point, step);
  return max_relative_error(ad, cd, tensor_floor);
}

double grad_check_mixed(const ScalarFunction<float>& f, const ScalarFunction<double>& reference,
                        std::vector<Tensor<float>>& point, double step, double tensor_floor) {
  if (!(step > 0.0)) throw ValueError("grad_check: step must be positive");
  if (!(tensor_floor >= 0.0)) throw ValueError("grad_check: tensor_floor must be nonnegative");
  auto ad = autodiff_gradients(f, point);
  std::vector<Tensor<double>> wide;
  wide.reserve(point.size());
  for (const auto& p : point) {
    wide.push_back(Tensor<double>::from(p.shape(), {p.data().begin(), p.data().end()}));
  }
  auto cd = central_differences(reference, wide, step);
  return max_relative_error(ad, cd, tensor_floor);
}

template double grad_check<float>(const ScalarFunction<float>&, std::vector<Tensor<float>>&,
                                  double, double);
template double grad_check<double>(const ScalarFunction<double>&, std::vector<Tensor<double>>&,
                                   double, double);

}  // namespace mvpt::numcore
