#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavload/numerics/linear_response.hpp"
#include "cavload/numerics/ode.hpp"
#include "cavload/numerics/quadrature.hpp"
#include "cavload/pulses.hpp"
#include "cavload/trajectory.hpp"

namespace cavload {

inline constexpr cplx kI{0.0, 1.0};

// Atom-cavity parameters in physical rate units.
struct TwoLevelParams {
  double g = 0.0;
  double kappa = 1.0;
  double gamma = 0.0;
  double delta = 0.0;

  void validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa))
      throw std::invalid_argument("kappa must be positive");
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("g must be non-negative");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("gamma must be non-negative");
    if (!std::isfinite(delta)) throw std::invalid_argument("delta must be finite");
  }
};

struct DerivedRates {
  cplx gamma_prime;
  cplx xi;
  cplx kappa_plus, kappa_minus;
  cplx kappa_prime_plus, kappa_prime_minus;
  bool degenerate = false;  // |xi| below 1e-6 kappa: coalescent exponents
};

inline DerivedRates derived_rates(const TwoLevelParams& p) {
  p.validate();
  DerivedRates r;
  r.gamma_prime = cplx(p.gamma, -p.delta);
  const cplx d = p.kappa - r.gamma_prime;
  r.xi = std::sqrt(d * d - 4.0 * p.g * p.g);
  r.kappa_plus = 0.5 * (p.kappa + r.gamma_prime + r.xi);
  r.kappa_minus = 0.5 * (p.kappa + r.gamma_prime - r.xi);
  r.kappa_prime_plus = r.kappa_plus - r.gamma_prime;
  r.kappa_prime_minus = r.kappa_minus - r.gamma_prime;
  r.degenerate = std::abs(r.xi) < 1e-6 * p.kappa;
  return r;
}

struct Amplitudes {
  cplx beta;
  cplx c_e;
};

struct PeakLoading {
  double t_load = 0.0;
  double probability = 0.0;
};

namespace detail {

// Linear two-mode model in cavity-decay units (kappa = 1):
//   beta' = -i G c - i sqrt(2) u(t) - (1 + r) beta
//   c'    = -i G beta - (gamma' + r) c
// with input u(t) = phi(t) exp(i carrier t).
struct Effective2 {
  cplx G = 0.0;
  cplx gamma_p = 0.0;
  double decay = 0.0;
  double carrier = 0.0;

  Mat2 generator() const {
    return {-1.0 - decay, -kI * G, -kI * G, -gamma_p - decay};
  }
  cplx xi() const {
    const cplx d = 1.0 - gamma_p;
    return std::sqrt(d * d - 4.0 * G * G);
  }
};

inline const cplx kDriveGain = -kI * std::numbers::sqrt2;

inline Effective2 normalized(const TwoLevelParams& p) {
  p.validate();
  return {p.g / p.kappa, cplx(p.gamma, -p.delta) / p.kappa, 0.0, 0.0};
}

// Exact propagation of the driven linear model: the homogeneous part uses the
// matrix exponential and the driven part is integrated panel by panel with an
// 8-point Gauss rule. Panels never straddle a drive breakpoint.
class ResponseEngine {
 public:
  ResponseEngine(const Effective2& m, PulseShape drive) : m_(m), drive_(std::move(drive)) {
    prop_ = Propagator2(m_.generator());
    double rate = std::max({1.0 + std::abs(m_.decay), std::abs(m_.G), std::abs(prop_.nu()),
                            std::abs(m_.gamma_p), std::abs(m_.carrier)});
    h_max_ = std::min(0.1, 0.5 / rate);
    if (!drive_.is_zero()) {
      h_max_ = std::min(h_max_, drive_.width() / 40.0);
      breaks_ = drive_.breakpoints();
      std::sort(breaks_.begin(), breaks_.end());
    }
  }

  double origin() const { return drive_.is_zero() ? 0.0 : drive_.support().lo; }
  const Effective2& model() const { return m_; }
  const PulseShape& drive() const { return drive_; }

  cplx input(double u) const {
    const cplx v = drive_(u);
    return m_.carrier == 0.0 ? v : v * std::exp(kI * (m_.carrier * u));
  }

  // State at u1 given state z at u0 (u1 >= u0).
  Vec2 advance(Vec2 z, double u0, double u1) const {
    if (!(u1 > u0)) return z;
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u0);
    double a = u0;
    while (a < u1) {
      double b = u1;
      if (it != breaks_.end() && *it < u1) b = *it++;
      z = segment(z, a, b);
      a = b;
    }
    return z;
  }

  // States on an ascending grid; points before the drive origin are zero.
  std::vector<Vec2> sample(std::span<const double> grid) const {
    std::vector<Vec2> out;
    out.reserve(grid.size());
    Vec2 z{};
    double u = origin();
    for (double g : grid) {
      if (g > u) {
        z = advance(z, u, g);
        u = g;
      }
      out.push_back(g < origin() ? Vec2{} : z);
    }
    return out;
  }

 private:
  // Gauss-Legendre panel of length h: propagator, node offsets, and the
  // weighted input columns exp(A (h - x_i)) b w_i.
  struct Panel {
    double h = 0.0;
    Mat2 E;
    std::array<double, 8> x{};
    std::array<Vec2, 8> col{};
  };

  Panel make_panel(double h) const {
    static constexpr std::array<double, 4> gx = {
        0.1834346424956498049394761, 0.5255324099163289858177390,
        0.7966664774136267395915539, 0.9602898564975362316835609};
    static constexpr std::array<double, 4> gw = {
        0.3626837833783619829651504, 0.3137066458778872873379622,
        0.2223810344533744705443560, 0.1012285362903762591525314};
    Panel p;
    p.h = h;
    p.E = prop_(h);
    for (int i = 0; i < 4; ++i) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        const int k = 2 * i + sgn;
        p.x[k] = 0.5 * h * (1.0 + (sgn ? gx[i] : -gx[i]));
        const Mat2 M = prop_(h - p.x[k]);
        p.col[k] = Vec2{M.a, M.c} * (kDriveGain * (0.5 * h * gw[i]));
      }
    }
    return p;
  }

  Vec2 apply(const Panel& p, Vec2 z, double p0) const {
    z = p.E * z;
    for (int k = 0; k < 8; ++k) z = z + p.col[k] * input(p0 + p.x[k]);
    return z;
  }

  Vec2 segment(Vec2 z, double a, double b) const {
    const Support s = drive_.support();
    const bool driven = !drive_.is_zero() && b > s.lo && a < s.hi;
    const double hmax = driven ? h_max_ : 50.0;
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
    const double h = (b - a) / n;
    if (!driven) {
      const Mat2 E = prop_(h);
      for (int k = 0; k < n; ++k) z = E * z;
      return z;
    }
    if (cache_.h != h) cache_ = make_panel(h);
    for (int k = 0; k < n; ++k) z = apply(cache_, z, a + k * h);
    return z;
  }

  Effective2 m_;
  PulseShape drive_;
  Propagator2 prop_;
  double h_max_ = 0.1;
  std::vector<double> breaks_;
  mutable Panel cache_;
};

// Convolution kernels of the closed-form solution, written with sinhc so the
// coalescent limit xi -> 0 is continuous:
//   kc(s) = (e^{-k+ s} - e^{-k- s}) / xi
//   kb(s) = (k'+ e^{-k+ s} - k'- e^{-k- s}) / xi
inline cplx kernel_ce(const Effective2& m, cplx xi, double s) {
  const cplx a = 0.5 * (1.0 + m.gamma_p) + m.decay;
  return -std::exp(-a * s) * s * sinhc(0.5 * xi * s);
}

inline cplx kernel_beta(const Effective2& m, cplx xi, double s) {
  const cplx a = 0.5 * (1.0 + m.gamma_p) + m.decay;
  const cplx w = 0.5 * xi * s;
  return std::exp(-a * s) * (std::cosh(w) - 0.5 * (1.0 - m.gamma_p) * s * sinhc(w));
}

// Closed-form amplitudes at time u by direct quadrature of the convolution.
inline Amplitudes closed_form(const Effective2& m, const PulseShape& drive, double u,
                              const QuadratureSpec& spec) {
  if (drive.is_zero() || u <= drive.support().lo) return {0.0, 0.0};
  const cplx xi = m.xi();
  const double lo = drive.support().lo;
  const double hi = std::min(u, drive.support().hi);
  auto in = [&](double tau) {
    const cplx v = drive(tau);
    return m.carrier == 0.0 ? v : v * std::exp(kI * (m.carrier * tau));
  };
  const auto& br = drive.breakpoints();
  const cplx ib = quad1([&](double tau) { return in(tau) * kernel_beta(m, xi, u - tau); }, lo,
                        hi, spec, br);
  const cplx ic = quad1([&](double tau) { return in(tau) * kernel_ce(m, xi, u - tau); }, lo, hi,
                        spec, br);
  return {kDriveGain * ib, m.G * std::numbers::sqrt2 * ic};
}

inline double default_peak_step(const ResponseEngine& e) {
  const auto& m = e.model();
  const double rate =
      std::max({1.0, std::abs(m.G), std::abs(Propagator2(m.generator()).nu()), std::abs(m.gamma_p)});
  double step = 0.05 / rate;
  if (!e.drive().is_zero()) step = std::min(step, e.drive().width() / 400.0);
  return step;
}

// Dense scan of |c_e|^2 over [lo, hi] followed by golden-section refinement
// around the best sample. Ties resolve to the earliest time.
template <class Eval>
PeakLoading golden_peak(Eval&& prob, double lo, double hi, double step, double bracket_tol) {
  const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)));
  const double h = (hi - lo) / n;
  std::vector<double> p(n + 1);
  prob.scan(lo, h, n, p);
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (p[i] > p[best]) best = i;
  PeakLoading out{lo + best * h, p[best]};
  double a = lo + std::max(0, best - 1) * h;
  double b = lo + std::min(n, best + 1) * h;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = prob(x1), f2 = prob(x2);
  while (b - a > bracket_tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = prob(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = prob(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  const double fm = prob(xm);
  for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}, std::pair{xm, fm}})
    if (f > out.probability || (f == out.probability && x < out.t_load)) out = {x, f};
  return out;
}

// |c_e|^2 evaluator backed by a ResponseEngine with cached scan states.
class CePopulation {
 public:
  explicit CePopulation(const ResponseEngine& e) : e_(e) {}

  void scan(double lo, double h, int n, std::vector<double>& out) {
    lo_ = lo;
    h_ = h;
    states_.assign(n + 1, Vec2{});
    Vec2 z{};
    double u = e_.origin();
    for (int i = 0; i <= n; ++i) {
      const double t = lo + i * h;
      if (t > u) {
        z = e_.advance(z, u, t);
        u = t;
      }
      states_[i] = t < e_.origin() ? Vec2{} : z;
      out[i] = std::norm(states_[i].y);
    }
  }

  double operator()(double t) const {
    int i = static_cast<int>(std::floor((t - lo_) / h_));
    i = std::clamp(i, 0, static_cast<int>(states_.size()) - 1);
    double t0 = lo_ + i * h_;
    Vec2 z = states_[i];
    if (t0 < e_.origin()) {
      if (t <= e_.origin()) return 0.0;
      t0 = e_.origin();
      z = {};
    }
    return std::norm(e_.advance(z, t0, t).y);
  }

 private:
  const ResponseEngine& e_;
  std::vector<Vec2> states_;
  double lo_ = 0.0, h_ = 1.0;
};

inline Trajectory to_trajectory(std::span<const double> grid, const std::vector<Vec2>& z,
                                double time_unit) {
  Trajectory tr;
  tr.times.reserve(grid.size());
  for (double g : grid) tr.times.push_back(g * time_unit);
  tr.labels = {"beta", "c_e"};
  tr.components.assign(2, {});
  for (const auto& v : z) {
    tr.components[0].push_back(v.x);
    tr.components[1].push_back(v.y);
  }
  return tr;
}

}  // namespace detail

// Closed-form amplitudes at time t, integrating from the start of the pulse
// support.
inline Amplitudes amplitude_closed_form(const TwoLevelParams& p, const PulseShape& pulse, double t,
                                        const QuadratureSpec& spec = {}) {
  const auto m = detail::normalized(p);
  return detail::closed_form(m, pulse.time_scaled(1.0 / p.kappa), t * p.kappa, spec);
}

// Closed-form solution sampled on a grid by exact exponential propagation.
inline Trajectory amplitude_trajectory(const TwoLevelParams& p, const PulseShape& pulse,
                                       std::span<const double> grid) {
  const auto m = detail::normalized(p);
  detail::ResponseEngine eng(m, pulse.time_scaled(1.0 / p.kappa));
  std::vector<double> u(grid.begin(), grid.end());
  for (double& x : u) x *= p.kappa;
  auto tr = detail::to_trajectory(u, eng.sample(u), 1.0 / p.kappa);
  tr.times.assign(grid.begin(), grid.end());
  tr.params = {{"g", p.g}, {"kappa", p.kappa}, {"gamma", p.gamma}, {"delta", p.delta}};
  return tr;
}

// Direct numerical integration of the two-level amplitude equations in
// physical units; the independent oracle for the closed form.
inline Trajectory amplitude_ode(const TwoLevelParams& p, const PulseShape& pulse,
                                std::span<const double> grid, const OdeOptions& opt = {}) {
  p.validate();
  Trajectory tr;
  tr.times.assign(grid.begin(), grid.end());
  tr.labels = {"beta", "c_e"};
  tr.components.assign(2, std::vector<cplx>(grid.size(), 0.0));
  tr.params = {{"g", p.g}, {"kappa", p.kappa}, {"gamma", p.gamma}, {"delta", p.delta}};
  if (pulse.is_zero() || grid.empty()) return tr;
  const double origin = pulse.support().lo;
  std::vector<double> g_in;
  std::size_t first = 0;
  while (first < grid.size() && grid[first] < origin) ++first;
  g_in.assign(grid.begin() + first, grid.end());
  if (g_in.empty()) return tr;
  const double root = std::sqrt(2.0 * p.kappa);
  const cplx gp(p.gamma, -p.delta);
  OdeSystem<2> sys;
  sys.rhs = [&](double t, const State<2>& y, State<2>& dy) {
    dy[0] = -kI * p.g * y[1] - kI * root * pulse(t) - p.kappa * y[0];
    dy[1] = -kI * p.g * y[0] - gp * y[1];
  };
  sys.t_start = origin;
  sys.t_end = g_in.back();
  sys.breakpoints = pulse.breakpoints();
  auto sol = integrate(sys, g_in, opt);
  for (std::size_t i = 0; i < g_in.size(); ++i) {
    tr.components[0][first + i] = sol.states[i][0];
    tr.components[1][first + i] = sol.states[i][1];
  }
  return tr;
}

// Spectral weight of the sech pulse of width T centered at t0, with the
// convention phi_b(t) = (2 pi)^{-1/2} int phi(nu) e^{-i nu t} d nu.
inline std::function<cplx(double)> sech_spectrum(double T, double t0) {
  return [T, t0](double nu) {
    const double mag = std::sqrt(2.0 / T) * std::numbers::pi * T / 4.0 /
                       std::sqrt(2.0 * std::numbers::pi) / std::cosh(std::numbers::pi * nu * T / 8.0);
    return mag * std::exp(kI * (nu * t0));
  };
}

// c_e(t) assembled from its frequency components: each spectral slice is
// convolved analytically with the cavity kernel from t_origin (may be
// -infinity) and the slices are integrated over [nu_lo, nu_hi].
inline cplx spectral_amplitude(const TwoLevelParams& p, const std::function<cplx(double)>& phi,
                               double nu_lo, double nu_hi, double t, double t_origin,
                               const QuadratureSpec& spec = {}) {
  const auto r = derived_rates(p);
  const bool from_inf = std::isinf(t_origin);
  auto slice = [&](double nu) -> cplx {
    auto I = [&](cplx k) {
      const cplx d = k - kI * nu;
      if (from_inf) return std::exp(-kI * (nu * t)) / d;
      return (std::exp(-kI * (nu * t)) - std::exp(-k * (t - t_origin) - kI * (nu * t_origin))) / d;
    };
    auto dI = [&](cplx k) {
      const cplx d = k - kI * nu;
      if (from_inf) return -std::exp(-kI * (nu * t)) / (d * d);
      const double s = t - t_origin;
      const cplx e0 = std::exp(-k * s - kI * (nu * t_origin));
      return -(std::exp(-kI * (nu * t)) - e0) / (d * d) + s * e0 / d;
    };
    const cplx diff = r.degenerate ? dI(0.5 * (r.kappa_plus + r.kappa_minus))
                                   : (I(r.kappa_plus) - I(r.kappa_minus)) / r.xi;
    return phi(nu) * diff;
  };
  const cplx s = quad1(slice, nu_lo, nu_hi, spec);
  return p.g * std::sqrt(p.kappa / std::numbers::pi) * s;
}

// Default loading horizon: four widths past the pulse centroid.
inline double default_horizon(const PulseShape& pulse) {
  return pulse.is_zero() ? 0.0 : pulse.centroid() + 4.0 * pulse.width();
}

// Maximum of |c_e(t)|^2 over [support start, horizon].
inline PeakLoading peak_loading(const TwoLevelParams& p, const PulseShape& pulse,
                                std::optional<double> horizon = std::nullopt) {
  p.validate();
  if (pulse.is_zero()) return {horizon.value_or(0.0), 0.0};
  const double hz = horizon.value_or(default_horizon(pulse));
  const double lo = pulse.support().lo;
  if (!(hz > lo)) throw std::invalid_argument("loading horizon precedes the pulse");
  detail::ResponseEngine eng(detail::normalized(p), pulse.time_scaled(1.0 / p.kappa));
  detail::CePopulation prob(eng);
  const double w = pulse.width() * p.kappa;
  auto pk = detail::golden_peak(prob, lo * p.kappa, hz * p.kappa, detail::default_peak_step(eng),
                                1e-9 * std::max(1.0, w));
  return {pk.t_load / p.kappa, pk.probability};
}

// Loading probability in dimensionless form: kappa = 1, pulse width kT with
// centroid at t = T, gamma = gamma_over_g * g.
inline double dimensionless_load(double kT, double g_over_k, double gamma_over_g, double t_over_T,
                                 PulseKind kind = PulseKind::sech) {
  if (!(kT > 0.0)) throw std::invalid_argument("kT must be positive");
  const TwoLevelParams p{g_over_k, 1.0, gamma_over_g * g_over_k, 0.0};
  const PulseShape pulse = make_pulse_centered(kind, kT, kT);
  const double t = t_over_T * kT;
  const detail::ResponseEngine eng(detail::normalized(p), pulse);
  const double o = eng.origin();
  if (t <= o) return 0.0;
  return std::norm(eng.advance(Vec2{}, o, t).y);
}

}  // namespace cavload
