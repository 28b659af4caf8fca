#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavload/error.hpp"

namespace cavload {

using cplx = std::complex<double>;

template <std::size_t N>
using State = std::array<cplx, N>;

template <std::size_t N>
using Rhs = std::function<void(double, const State<N>&, State<N>&)>;

template <std::size_t N>
struct OdeSystem {
  Rhs<N> rhs;
  State<N> initial{};
  double t_start = 0.0;
  double t_end = 0.0;
  // Times where the right-hand side is discontinuous; the integrator
  // restarts there instead of stepping across.
  std::vector<double> breakpoints;
};

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double min_step = 1e-13;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

template <std::size_t N>
struct OdeSolution {
  std::vector<double> times;
  std::vector<State<N>> states;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

template <std::size_t N>
class DopriStepper {
 public:
  DopriStepper(const Rhs<N>& f, const OdeOptions& o) : f_(f), opt_(o) {}

  // Advance y from t to exactly t_target with adaptive steps. h carries the
  // step-size proposal across calls.
  void advance(double& t, State<N>& y, double t_target, double& h,
               OdeSolution<N>& sol) {
    if (!(t_target > t)) return;
    f_(t, y, k1_);
    if (h <= 0.0) h = initial_step(y);
    while (t < t_target) {
      if (sol.accepted + sol.rejected > opt_.max_steps)
        throw NumericError("ODE step budget exhausted");
      const double remaining = t_target - t;
      bool last = false;
      double step = std::min(h, opt_.max_step);
      if (step >= remaining * (1.0 - 1e-12)) {
        step = remaining;
        last = true;
      }
      if (step < opt_.min_step && !last) throw StepUnderflow(t, step);
      const double err = attempt(t, y, step);
      if (err <= 1.0) {
        ++sol.accepted;
        t = last ? t_target : t + step;
        y = ynew_;
        k1_ = k7_;
        const double fac =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // A forced short landing step says nothing about the natural step.
        if (!last || step >= h) h = step * fac;
      } else {
        ++sol.rejected;
        h = step * std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (h < opt_.min_step) throw StepUnderflow(t, h);
      }
    }
  }

 private:
  double initial_step(const State<N>& y) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = opt_.abs_tol + opt_.rel_tol * std::abs(y[i]);
      d0 += std::norm(y[i]) / (sc * sc);
      d1 += std::norm(k1_[i]) / (sc * sc);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    // Not capped by the distance to the target: advance() clamps the landing
    // step, and a tiny first target must not seed a tiny step size.
    return std::min(h0, opt_.max_step);
  }

  double attempt(double t, const State<N>& y, double h) {
    using D = Dopri;
    State<N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * D::a21 * k1_[i];
    f_(t + D::c2 * h, tmp, k2_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (D::a31 * k1_[i] + D::a32 * k2_[i]);
    f_(t + D::c3 * h, tmp, k3_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (D::a41 * k1_[i] + D::a42 * k2_[i] + D::a43 * k3_[i]);
    f_(t + D::c4 * h, tmp, k4_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (D::a51 * k1_[i] + D::a52 * k2_[i] +
                           D::a53 * k3_[i] + D::a54 * k4_[i]);
    f_(t + D::c5 * h, tmp, k5_);
    for (std::size_t i = 0; i < N; ++i)
      tmp[i] = y[i] + h * (D::a61 * k1_[i] + D::a62 * k2_[i] +
                           D::a63 * k3_[i] + D::a64 * k4_[i] + D::a65 * k5_[i]);
    f_(t + h, tmp, k6_);
    for (std::size_t i = 0; i < N; ++i)
      ynew_[i] = y[i] + h * (D::b1 * k1_[i] + D::b3 * k3_[i] + D::b4 * k4_[i] +
                             D::b5 * k5_[i] + D::b6 * k6_[i]);
    f_(t + h, ynew_, k7_);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const cplx e = h * (D::e1 * k1_[i] + D::e3 * k3_[i] + D::e4 * k4_[i] +
                          D::e5 * k5_[i] + D::e6 * k6_[i] + D::e7 * k7_[i]);
      const double sc =
          opt_.abs_tol +
          opt_.rel_tol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      acc += std::norm(e) / (sc * sc);
    }
    const double err = std::sqrt(acc / N);
    if (!std::isfinite(err))
      throw NumericError("non-finite state in ODE integration at t=" +
                         std::to_string(t));
    return err;
  }

  const Rhs<N>& f_;
  OdeOptions opt_;
  State<N> k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{}, ynew_{};
};

}  // namespace detail

// Integrates sys over [t_start, t_end] and reports the state at every time in
// grid (ascending, inside the span). Breakpoints split the span into
// segments that are integrated separately.
template <std::size_t N>
OdeSolution<N> integrate(const OdeSystem<N>& sys, std::span<const double> grid,
                         const OdeOptions& opt = {}) {
  if (!sys.rhs) throw std::invalid_argument("ODE system has no right-hand side");
  if (!(sys.t_end >= sys.t_start))
    throw std::invalid_argument("ODE span must satisfy t_end >= t_start");
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0))
    throw std::invalid_argument("ODE tolerances must be positive");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < sys.t_start || grid[i] > sys.t_end)
      throw std::invalid_argument("output grid leaves the integration span");
    if (i > 0 && grid[i] < grid[i - 1])
      throw std::invalid_argument("output grid must be ascending");
  }
  std::vector<double> stops;
  for (double b : sys.breakpoints)
    if (b > sys.t_start && b < sys.t_end) stops.push_back(b);
  std::sort(stops.begin(), stops.end());

  OdeSolution<N> sol;
  sol.times.assign(grid.begin(), grid.end());
  sol.states.reserve(grid.size());
  detail::DopriStepper<N> stepper(sys.rhs, opt);
  double t = sys.t_start;
  State<N> y = sys.initial;
  double h = 0.0;
  std::size_t next_stop = 0;
  for (double target : grid) {
    while (next_stop < stops.size() && stops[next_stop] < target) {
      stepper.advance(t, y, stops[next_stop], h, sol);
      ++next_stop;
    }
    stepper.advance(t, y, target, h, sol);
    sol.states.push_back(y);
  }
  return sol;
}

}  // namespace cavload
