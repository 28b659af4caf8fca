#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <span>
#include <type_traits>
#include <vector>

#include "cavload/error.hpp"

namespace cavload {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_subdivisions = 4000;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class V>
struct Panel {
  double a, b;
  V value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class V, class F>
Panel<V> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  const V fc = f(c);
  V kron = fc * kWgk[7];
  V gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = r * kXgk[j];
    const V s = f(c - dx) + f(c + dx);
    kron += s * kWgk[j];
    if (j % 2 == 1) gauss += s * kWg[j / 2];
  }
  return {a, b, kron * r, std::abs((kron - gauss) * r)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b]. Interior
// breakpoints seed the initial partition so known kinks never sit inside a
// panel. Works for real or complex valued integrands.
template <class F>
auto quad1(F&& f, double a, double b, const QuadratureSpec& spec = {},
           std::span<const double> breaks = {}) {
  using V = std::decay_t<std::invoke_result_t<F&, double>>;
  if (!(b > a)) return V{};
  std::vector<double> cuts{a};
  for (double p : breaks)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel<V>> heap;
  V total{};
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gk15<V>(f, cuts[i], cuts[i + 1]);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  const double min_width = 1e-14 * (b - a);
  while (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (panels >= spec.max_subdivisions)
      throw NumericError("quadrature did not converge within " +
                         std::to_string(spec.max_subdivisions) +
                         " subdivisions");
    auto worst = heap.top();
    if (worst.b - worst.a < min_width)
      throw NumericError("quadrature panel width underflow");
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    auto left = detail::gk15<V>(f, worst.a, m);
    auto right = detail::gk15<V>(f, m, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // Re-sum the final panels to shed the running-update rounding.
  V sum{};
  std::vector<detail::Panel<V>> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(),
            [](const auto& x, const auto& y) { return x.a < y.a; });
  for (const auto& p : all) sum += p.value;
  return sum;
}

// Iterated 2D quadrature: outer over x in [ax, bx], inner over y in
// [ay(x), by(x)]. inner_breaks(x) lists y-kinks for the inner integral.
template <class F, class YLo, class YHi, class Breaks>
auto quad2(F&& f, double ax, double bx, YLo&& ay, YHi&& by,
           Breaks&& inner_breaks, const QuadratureSpec& spec = {},
           std::span<const double> outer_breaks = {}) {
  QuadratureSpec inner = spec;
  inner.rel_tol = spec.rel_tol * 0.1;
  inner.abs_tol = spec.abs_tol * 0.1 / std::max(1.0, bx - ax);
  auto outer = [&](double x) {
    std::vector<double> br = inner_breaks(x);
    return quad1([&](double y) { return f(x, y); }, ay(x), by(x), inner, br);
  };
  return quad1(outer, ax, bx, spec, outer_breaks);
}

// Fixed 8-point Gauss-Legendre rule on [a, b]; used for short smooth panels.
template <class F>
auto gauss_legendre8(F&& f, double a, double b) {
  static constexpr std::array<double, 4> x = {
      0.1834346424956498049394761, 0.5255324099163289858177390,
      0.7966664774136267395915539, 0.9602898564975362316835609};
  static constexpr std::array<double, 4> w = {
      0.3626837833783619829651504, 0.3137066458778872873379622,
      0.2223810344533744705443560, 0.1012285362903762591525314};
  const double c = 0.5 * (a + b), r = 0.5 * (b - a);
  using V = std::decay_t<std::invoke_result_t<F&, double>>;
  V s{};
  for (int i = 0; i < 4; ++i) s += (f(c - r * x[i]) + f(c + r * x[i])) * w[i];
  return s * r;
}

}  // namespace cavload
