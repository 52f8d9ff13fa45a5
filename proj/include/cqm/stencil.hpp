#pragma once

#include <array>
#include <span>
#include <type_traits>

#include "cqm/fields.hpp"

namespace cqm {

/// Central finite-difference weights. Offsets are 1..order/2; first-derivative
/// weights are antisymmetric, second-derivative weights symmetric around `center`.
struct CentralStencil {
  int order = 4;
  std::span<const double> first;
  double center = 0.0;
  std::span<const double> second;

  static CentralStencil of_order(int order);
  int half_width() const { return order / 2; }
};

/// Derivative of s -> g(s) at s = 0.
template <class G>
auto derivative(G&& g, double h, const CentralStencil& st = CentralStencil::of_order(4)) {
  using R = std::decay_t<decltype(g(0.0))>;
  R acc = st.first[0] * (g(h) - g(-h));
  for (int m = 2; m <= st.half_width(); ++m)
    acc += st.first[static_cast<std::size_t>(m - 1)] * (g(m * h) - g(-m * h));
  return R(acc / h);
}

template <class G>
auto second_derivative(G&& g, double h, const CentralStencil& st = CentralStencil::of_order(4)) {
  using R = std::decay_t<decltype(g(0.0))>;
  R acc = st.center * g(0.0);
  for (int m = 1; m <= st.half_width(); ++m)
    acc += st.second[static_cast<std::size_t>(m - 1)] * (g(m * h) + g(-m * h));
  return R(acc / (h * h));
}

/// Partial derivative of a spacetime callable along chart axis `axis`
/// (0 = time, 1..n = space).
template <class F>
auto partial(F&& f, double t, const Vec& x, int axis, double h,
             const CentralStencil& st = CentralStencil::of_order(4)) {
  if (axis == 0) return derivative([&](double s) { return f(t + s, x); }, h, st);
  return derivative(
      [&](double s) {
        Vec y = x;
        y[axis - 1] += s;
        return f(t, y);
      },
      h, st);
}

template <class F>
auto second_partial(F&& f, double t, const Vec& x, int axis, double h,
                    const CentralStencil& st = CentralStencil::of_order(4)) {
  if (axis == 0) return second_derivative([&](double s) { return f(t + s, x); }, h, st);
  return second_derivative(
      [&](double s) {
        Vec y = x;
        y[axis - 1] += s;
        return f(t, y);
      },
      h, st);
}

}  // namespace cqm
