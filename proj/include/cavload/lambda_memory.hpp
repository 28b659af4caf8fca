#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavload/numerics/ode.hpp"
#include "cavload/pulses.hpp"
#include "cavload/trajectory.hpp"
#include "cavload/two_level.hpp"

namespace cavload {

// Classical control field: Rabi frequency Omega(t) >= 0 and the phase rate
// dphi/dt(t) of the control laser.
struct ControlField {
  std::function<double(double)> omega;
  std::function<double(double)> phase_rate;  // empty means zero
  std::vector<double> breakpoints;
  double peak = 0.0;                 // sup of Omega(t)
  std::optional<double> constant;    // set when Omega is constant while on
  std::optional<double> switch_off;  // Omega drops to zero here

  double rabi(double t) const { return omega ? omega(t) : 0.0; }
  double phase(double t) const { return phase_rate ? phase_rate(t) : 0.0; }

  static ControlField constant_field(double Omega) {
    if (!(Omega >= 0.0) || !std::isfinite(Omega))
      throw std::invalid_argument("control Rabi frequency must be non-negative");
    ControlField c;
    c.omega = [Omega](double) { return Omega; };
    c.peak = Omega;
    c.constant = Omega;
    return c;
  }

  // Constant Omega until t_off, zero afterwards.
  static ControlField step_off(double Omega, double t_off) {
    ControlField c = constant_field(Omega);
    c.omega = [Omega, t_off](double t) { return t < t_off ? Omega : 0.0; };
    c.breakpoints = {t_off};
    c.switch_off = t_off;
    return c;
  }

  // Same field on a clock running c times faster; rates scale by c.
  ControlField time_scaled(double c) const {
    ControlField out = *this;
    auto om = omega;
    auto ph = phase_rate;
    if (om) out.omega = [om, c](double t) { return c * om(t * c); };
    if (ph) out.phase_rate = [ph, c](double t) { return c * ph(t * c); };
    for (double& b : out.breakpoints) b /= c;
    out.peak = peak * c;
    if (constant) out.constant = *constant * c;
    if (switch_off) out.switch_off = *switch_off / c;
    return out;
  }
};

// Reads "t,Omega,phi_z" rows (header required) and interpolates linearly.
// phi_z is the control phase rate.
inline ControlField load_control_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("control_file", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("control_file", "empty file");
  line.erase(std::remove(line.begin(), line.end(), '\r'), line.end());
  line.erase(std::remove(line.begin(), line.end(), ' '), line.end());
  if (line != "t,Omega,phi_z") throw ConfigError("control_file", "header must be 't,Omega,phi_z'");
  auto t = std::make_shared<std::vector<double>>();
  auto om = std::make_shared<std::vector<double>>();
  auto ph = std::make_shared<std::vector<double>>();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> x;
    try {
      while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        x.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos)
          throw std::invalid_argument(cell);
      }
    } catch (const std::exception&) {
      throw ConfigError("control_file", "row " + std::to_string(row) + " is not numeric");
    }
    if (x.size() != 3) throw ConfigError("control_file", "row " + std::to_string(row) + " needs 3 columns");
    if (!t->empty() && !(x[0] > t->back()))
      throw ConfigError("control_file", "times must be strictly increasing");
    if (x[1] < 0.0) throw ConfigError("control_file", "Omega must be non-negative");
    t->push_back(x[0]);
    om->push_back(x[1]);
    ph->push_back(x[2]);
  }
  if (t->size() < 2) throw ConfigError("control_file", "need at least two rows");
  auto interp = [t](const std::shared_ptr<std::vector<double>>& v) {
    return [t, v](double x) {
      auto it = std::upper_bound(t->begin(), t->end(), x);
      if (it == t->begin()) return v->front();
      if (it == t->end()) return v->back();
      const std::size_t i = static_cast<std::size_t>(it - t->begin());
      const double w = (x - (*t)[i - 1]) / ((*t)[i] - (*t)[i - 1]);
      return (*v)[i - 1] * (1.0 - w) + (*v)[i] * w;
    };
  };
  ControlField c;
  c.omega = interp(om);
  c.phase_rate = interp(ph);
  c.breakpoints = *t;
  c.peak = *std::max_element(om->begin(), om->end());
  return c;
}

// Lambda-atom memory: cavity coupling g_c on the |G>-|R> leg, control Omega
// on |R>-|E>, one-photon detuning delta1, two-photon detuning delta2, and
// spontaneous decay gamma_r of |R>. photon_detuning shifts the input
// photon's carrier: the drive is phi(t) exp(-i photon_detuning t).
struct LambdaParams {
  double g_c = 0.0;
  double kappa = 1.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double gamma_r = 0.0;
  ControlField control;
  double photon_detuning = 0.0;

  void validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be positive");
    if (!(g_c >= 0.0) || !std::isfinite(g_c)) throw std::invalid_argument("g_c must be non-negative");
    if (!(gamma_r >= 0.0) || !std::isfinite(gamma_r))
      throw std::invalid_argument("gamma_r must be non-negative");
    if (!std::isfinite(delta1) || !std::isfinite(delta2) || !std::isfinite(photon_detuning))
      throw std::invalid_argument("detunings must be finite");
    if (!control.omega) throw std::invalid_argument("control field is undefined");
  }

  // Copy in cavity-decay units (kappa = 1).
  LambdaParams normalized() const {
    validate();
    LambdaParams q = *this;
    const double k = kappa;
    q.g_c /= k;
    q.kappa = 1.0;
    q.delta1 /= k;
    q.delta2 /= k;
    q.gamma_r /= k;
    q.photon_detuning /= k;
    q.control = control.time_scaled(1.0 / k);
    return q;
  }
};

// Two-photon detuning that cancels the light shifts: delta2 =
// (g_c^2 - Omega^2) / delta1 + delta1.
inline double stark_compensated_delta2(double g_c, double Omega, double delta1) {
  if (delta1 == 0.0) throw std::invalid_argument("delta1 must be nonzero");
  return (g_c * g_c - Omega * Omega) / delta1 + delta1;
}

// Carrier offset of an input photon matched to the cavity light shift.
inline double stark_carrier(double g_c, double delta1) {
  if (delta1 == 0.0) throw std::invalid_argument("delta1 must be nonzero");
  return g_c * g_c / delta1;
}

// Effective two-level model after adiabatic elimination of |R>.
struct ReducedParams {
  std::function<double(double)> g;  // g_c Omega(t) / delta1
  cplx Gamma_r;                     // 1 + i gamma_r / delta1
  std::function<double(double)> delta_eff;
  std::function<double(double)> gamma_eff;
  double drive_growth = 0.0;  // g_c^2 gamma_r / delta1^2
  double stark = 0.0;         // g_c^2 / delta1
  bool outside_validity = false;
};

inline ReducedParams reduce(const LambdaParams& p) {
  p.validate();
  if (p.delta1 == 0.0) throw std::invalid_argument("delta1 must be nonzero for adiabatic elimination");
  ReducedParams r;
  const double d1 = p.delta1, gc = p.g_c, d2 = p.delta2, gr = p.gamma_r;
  const ControlField c = p.control;
  r.g = [c, gc, d1](double t) { return gc * c.rabi(t) / d1; };
  r.Gamma_r = cplx(1.0, gr / d1);
  r.delta_eff = [c, gc, d1, d2](double t) {
    const double om = c.rabi(t);
    return (gc * gc - om * om) / d1 + d1 - d2 - c.phase(t);
  };
  r.gamma_eff = [c, gc, d1, gr](double t) {
    const double om = c.rabi(t);
    return (om * om - gc * gc) * gr / (d1 * d1);
  };
  r.drive_growth = gc * gc * gr / (d1 * d1);
  r.stark = gc * gc / d1;
  const double ad = std::abs(d1);
  r.outside_validity = ad < 10.0 * std::max(gc, c.peak) || ad < 10.0 * gr;
  return r;
}

namespace detail {

inline Trajectory empty_lambda_trajectory(std::span<const double> grid, std::vector<std::string> labels) {
  Trajectory tr;
  tr.times.assign(grid.begin(), grid.end());
  tr.labels = std::move(labels);
  tr.components.assign(tr.labels.size(), std::vector<cplx>(grid.size(), 0.0));
  return tr;
}

template <std::size_t N, class Rhs>
Trajectory run_lambda_ode(const LambdaParams& q, const PulseShape& drive, std::span<const double> grid,
                          double kappa, std::vector<std::string> labels, Rhs&& rhs,
                          const OdeOptions& opt) {
  Trajectory tr = empty_lambda_trajectory(grid, labels);
  if (drive.is_zero() || grid.empty()) return tr;
  const double origin = drive.support().lo;
  std::vector<double> u;
  std::size_t first = 0;
  while (first < grid.size() && grid[first] * kappa < origin) ++first;
  for (std::size_t i = first; i < grid.size(); ++i) u.push_back(grid[i] * kappa);
  if (u.empty()) return tr;
  OdeSystem<N> sys;
  sys.rhs = rhs;
  sys.t_start = origin;
  sys.t_end = u.back();
  sys.breakpoints = drive.breakpoints();
  sys.breakpoints.insert(sys.breakpoints.end(), q.control.breakpoints.begin(),
                         q.control.breakpoints.end());
  auto sol = integrate(sys, u, opt);
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t k = 0; k < N; ++k) tr.components[k][first + i] = sol.states[i][k];
  return tr;
}

}  // namespace detail

// Full three-amplitude Lambda model (beta, c_r, c_e), integrated numerically
// in cavity-decay units.
inline Trajectory full_ode(const LambdaParams& p, const PulseShape& pulse, std::span<const double> grid,
                           const OdeOptions& opt = {}) {
  const LambdaParams q = p.normalized();
  const PulseShape drive = pulse.time_scaled(1.0 / p.kappa);
  const double root = std::numbers::sqrt2;
  auto rhs = [&q, &drive, root](double u, const State<3>& y, State<3>& dy) {
    const double om = q.control.rabi(u);
    const cplx in = drive(u) * std::exp(-kI * (q.photon_detuning * u));
    dy[0] = -kI * q.g_c * y[1] - kI * root * in - y[0];
    dy[1] = -kI * q.g_c * y[0] + kI * q.delta1 * y[1] - kI * om * y[2] - q.gamma_r * y[1];
    dy[2] = -kI * om * y[1] - kI * (q.delta2 - q.delta1 + q.control.phase(u)) * y[2];
  };
  auto tr = detail::run_lambda_ode<3>(q, drive, grid, p.kappa, {"beta", "c_r", "c_e"}, rhs, opt);
  tr.params = {{"g_c", p.g_c}, {"kappa", p.kappa}, {"delta1", p.delta1}, {"delta2", p.delta2},
               {"gamma_r", p.gamma_r}};
  return tr;
}

// Reduced two-amplitude model with |R> adiabatically eliminated, integrated
// numerically (time-dependent Omega allowed). c_r is reconstructed from the
// elimination condition.
inline Trajectory reduced_ode(const LambdaParams& p, const PulseShape& pulse, std::span<const double> grid,
                              const OdeOptions& opt = {}) {
  const LambdaParams q = p.normalized();
  if (q.delta1 == 0.0) throw std::invalid_argument("delta1 must be nonzero for adiabatic elimination");
  const PulseShape drive = pulse.time_scaled(1.0 / p.kappa);
  const cplx Gr(1.0, q.gamma_r / q.delta1);
  const cplx d1G = q.delta1 * Gr;
  const double root = std::numbers::sqrt2;
  auto rhs = [&q, &drive, d1G, root](double u, const State<2>& y, State<2>& dy) {
    const double om = q.control.rabi(u);
    const cplx in = drive(u) * std::exp(-kI * (q.photon_detuning * u));
    const cplx geff = q.g_c * om / d1G;
    dy[0] = -kI * (q.g_c * q.g_c / d1G) * y[0] - kI * geff * y[1] - kI * root * in - y[0];
    dy[1] = -kI * geff * y[0] - kI * (om * om / d1G) * y[1] -
            kI * (q.delta2 - q.delta1 + q.control.phase(u)) * y[1];
  };
  auto tr = detail::run_lambda_ode<2>(q, drive, grid, p.kappa, {"beta", "c_e"}, rhs, opt);
  std::vector<cplx> cr(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double om = q.control.rabi(tr.times[i] * p.kappa);
    cr[i] = (q.g_c * tr.components[0][i] + om * tr.components[1][i]) / d1G;
  }
  tr.labels = {"beta", "c_r", "c_e"};
  tr.components.insert(tr.components.begin() + 1, std::move(cr));
  tr.params = {{"g_c", p.g_c}, {"kappa", p.kappa}, {"delta1", p.delta1}, {"delta2", p.delta2},
               {"gamma_r", p.gamma_r}};
  return tr;
}

namespace detail {

// Closed-form engine of the non-adiabatic scheme in cavity-decay units: the
// two-level solution with g -> g / Gamma_r, gamma -> gamma_eff, delta ->
// delta_eff, and the drive growth folded into a uniform decay of both modes.
inline Effective2 nonadiabatic_model(const LambdaParams& q) {
  if (!q.control.constant) throw std::invalid_argument("non-adiabatic loading needs a constant control field");
  const ReducedParams r = reduce(q);
  Effective2 m;
  const double Om = *q.control.constant;
  m.G = q.g_c * Om / q.delta1 / r.Gamma_r;
  // Light shifts with |R> eliminated: x^2 / (delta1 + i gamma_r) for x = g_c
  // and Omega. To first order in gamma_r / delta1 these are the familiar
  // g_c^2 / delta1 shift and g_c^2 gamma_r / delta1^2 decay; the exact
  // complex form keeps this model identical to the reduced equations.
  const cplx d1G = q.delta1 * r.Gamma_r;
  const cplx sg = q.g_c * q.g_c / d1G;
  const cplx so = Om * Om / d1G;
  const double D = q.delta2 - q.delta1 + q.control.phase(0.0);
  m.decay = -sg.imag();
  m.gamma_p = cplx(sg.imag() - so.imag(), so.real() + D - sg.real());
  m.carrier = sg.real() - q.photon_detuning;
  return m;
}

}  // namespace detail

// |c_e(t)|^2 with the control held on until t_load and off afterwards
// (the population freezes once the control stops).
inline double nonadiabatic_load(const LambdaParams& p, const PulseShape& pulse, double t_load) {
  const LambdaParams q = p.normalized();
  const detail::ResponseEngine eng(detail::nonadiabatic_model(q), pulse.time_scaled(1.0 / p.kappa));
  const double u = t_load * p.kappa;
  if (pulse.is_zero() || u <= eng.origin()) return 0.0;
  return std::norm(eng.advance(Vec2{}, eng.origin(), u).y);
}

// Trajectory of the non-adiabatic scheme; with t_load set, c_e is frozen in
// magnitude after the control switches off.
inline Trajectory nonadiabatic_trajectory(const LambdaParams& p, const PulseShape& pulse,
                                          std::span<const double> grid, std::optional<double> t_load = {}) {
  const LambdaParams q = p.normalized();
  const detail::ResponseEngine eng(detail::nonadiabatic_model(q), pulse.time_scaled(1.0 / p.kappa));
  std::vector<double> u(grid.begin(), grid.end());
  for (double& x : u) x *= p.kappa;
  std::vector<Vec2> z;
  if (t_load) {
    const double ul = *t_load * p.kappa;
    std::vector<double> before;
    for (double x : u) before.push_back(std::min(x, ul));
    z = eng.sample(before);
  } else {
    z = eng.sample(u);
  }
  auto tr = detail::to_trajectory(u, z, 1.0 / p.kappa);
  tr.times.assign(grid.begin(), grid.end());
  return tr;
}

// Optimal stopping time: maximum of |c_e|^2 over [support start, horizon].
inline PeakLoading nonadiabatic_peak(const LambdaParams& p, const PulseShape& pulse,
                                     std::optional<double> horizon = {}) {
  if (pulse.is_zero()) return {horizon.value_or(0.0), 0.0};
  const LambdaParams q = p.normalized();
  const detail::ResponseEngine eng(detail::nonadiabatic_model(q), pulse.time_scaled(1.0 / p.kappa));
  detail::CePopulation prob(eng);
  const double hz = horizon.value_or(default_horizon(pulse)) * p.kappa;
  const double w = pulse.width() * p.kappa;
  auto pk = detail::golden_peak(prob, eng.origin(), hz, detail::default_peak_step(eng),
                                1e-9 * std::max(1.0, w));
  return {pk.t_load / p.kappa, pk.probability};
}

// Non-adiabatic memory with effective coupling g_eff = g_c Omega / delta1,
// g_c / Omega = ratio, Stark-compensated two-photon detuning and a photon
// carrier matched to the cavity light shift.
inline LambdaParams nonadiabatic_params(double g_eff, double kappa, double delta1, double ratio = 1.0,
                                        double gamma_r = 0.0) {
  if (!(g_eff >= 0.0) || !(ratio > 0.0) || delta1 == 0.0)
    throw std::invalid_argument("invalid non-adiabatic parameters");
  LambdaParams p;
  p.kappa = kappa;
  p.delta1 = delta1;
  p.gamma_r = gamma_r;
  p.g_c = std::sqrt(g_eff * std::abs(delta1) * ratio);
  const double Om = std::sqrt(g_eff * std::abs(delta1) / ratio);
  p.control = ControlField::constant_field(Om);
  p.delta2 = stark_compensated_delta2(p.g_c, Om, delta1);
  p.photon_detuning = stark_carrier(p.g_c, delta1);
  return p;
}

// Sign of the radicand behind the impedance-matched control law as a function
// of x = 4 t / T. Non-negative for every x exactly when kT >= 4.
inline double adiabatic_radicand(double kT, double x) {
  return (1.0 + std::tanh(x)) * (std::tanh(x) + 0.5 * kT - 1.0);
}

// Impedance-matched control Rabi frequency for a sech photon of width T,
// with t measured from the photon center. Written in a form that stays
// finite and accurate where 1 + tanh(x) underflows.
inline double adiabatic_control_pulse(double g_c, double kappa, double T, double t) {
  if (!(kappa > 0.0) || !(T > 0.0)) throw std::invalid_argument("kappa and T must be positive");
  const double kT = kappa * T;
  if (kT < 4.0) throw std::domain_error("impedance-matched control needs kappa*T >= 4");
  if (!(g_c >= 0.0)) throw std::invalid_argument("g_c must be non-negative");
  const double x = 4.0 * t / T;
  const double a = 1.0 + std::exp(2.0 * x);
  const double b = (0.5 * kT - 2.0) + 2.0 / (1.0 + std::exp(-2.0 * x));
  return g_c * std::sqrt(2.0 / (a * b));
}

enum class AdiabaticScheme { two_photon_resonance, zero_effective_detuning };

// Lambda parameters of an adiabatic scheme for a sech photon of width T
// centered at t = T. The control is delayed by offset. Under two-photon
// resonance the photon is on the bare carrier; under zero effective
// detuning the photon carrier follows the cavity light shift and the control
// phase cancels the remaining Stark shift.
inline LambdaParams adiabatic_params(AdiabaticScheme scheme, double g_c, double delta1, double kappa, double T,
                                     double offset = 0.0) {
  if (delta1 == 0.0) throw std::invalid_argument("delta1 must be nonzero");
  const double kT = kappa * T;
  if (kT < 4.0) throw std::domain_error("impedance-matched control needs kappa*T >= 4");
  LambdaParams p;
  p.g_c = g_c;
  p.kappa = kappa;
  p.delta1 = delta1;
  p.delta2 = delta1;
  ControlField c;
  const double t0 = T + offset;
  c.omega = [=](double t) { return adiabatic_control_pulse(g_c, kappa, T, t - t0); };
  c.peak = g_c * std::sqrt(2.0 / std::max(0.5 * kT - 2.0, 1e-300));
  if (scheme == AdiabaticScheme::zero_effective_detuning) {
    c.phase_rate = [=](double t) {
      const double om = adiabatic_control_pulse(g_c, kappa, T, t - t0);
      return (g_c * g_c - om * om) / delta1;
    };
    p.photon_detuning = g_c * g_c / delta1;
  }
  p.control = std::move(c);
  return p;
}

struct AdiabaticResult {
  Trajectory trajectory;
  double probability = 0.0;  // |c_e|^2 at t_final
  double t_final = 0.0;
};

// Adiabatic loading of a sech photon (width T, centered at T) integrated with
// the reduced model; the probability is read at 5T (shifted by a positive
// control delay).
inline AdiabaticResult adiabatic_load(AdiabaticScheme scheme, double g_c, double delta1, double kappa, double T,
                                      std::span<const double> grid = {}, double offset = 0.0,
                                      const OdeOptions& opt = {}) {
  const LambdaParams p = adiabatic_params(scheme, g_c, delta1, kappa, T, offset);
  const PulseShape pulse = make_pulse(PulseKind::sech, T, T);
  const double t_final = 5.0 * T + std::max(0.0, offset);
  const std::size_t k =
      static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), t_final) - grid.begin());
  std::vector<double> g(grid.begin(), grid.begin() + k);
  g.push_back(t_final);
  g.insert(g.end(), grid.begin() + k, grid.end());
  auto full = reduced_ode(p, pulse, g, opt);
  AdiabaticResult out;
  out.t_final = t_final;
  out.probability = std::norm(full.components[2][k]);
  full.times.erase(full.times.begin() + k);
  for (auto& c : full.components) c.erase(c.begin() + k);
  out.trajectory = std::move(full);
  return out;
}

inline AdiabaticResult adiabatic_load_tpr(double g_c, double delta1, double kappa, double T,
                                          std::span<const double> grid = {}, double offset = 0.0) {
  return adiabatic_load(AdiabaticScheme::two_photon_resonance, g_c, delta1, kappa, T, grid, offset);
}

inline AdiabaticResult adiabatic_load_zed(double g_c, double delta1, double kappa, double T,
                                          std::span<const double> grid = {}, double offset = 0.0) {
  return adiabatic_load(AdiabaticScheme::zero_effective_detuning, g_c, delta1, kappa, T, grid, offset);
}

// Picks g_c and delta1 realizing g' = g_c^2 / delta1 with delta1 = 1000 g'
// (far inside the elimination regime) and runs the scheme.
inline AdiabaticResult adiabatic_load_gprime(AdiabaticScheme scheme, double g_prime, double kappa, double T,
                                             std::span<const double> grid = {}, double offset = 0.0) {
  if (!(g_prime > 0.0)) throw std::invalid_argument("g' must be positive");
  const double delta1 = 1000.0 * g_prime;
  const double g_c = std::sqrt(g_prime * delta1);
  return adiabatic_load(scheme, g_c, delta1, kappa, T, grid, offset);
}

struct DarkBright {
  double theta = 0.0;
  cplx d_amp, b_amp, r_amp;
};

// Projects (c_G, c_E, c_R) onto the dark/bright basis defined by Omega and g_c.
inline DarkBright dark_bright_decompose(cplx c_g, cplx c_e, double Omega, double g_c, cplx c_r = 0.0) {
  const double o0 = std::hypot(Omega, g_c);
  if (!(o0 > 0.0)) throw std::invalid_argument("dark state undefined for Omega = g_c = 0");
  const double ct = Omega / o0, st = g_c / o0;
  return {std::atan2(st, ct), -ct * c_g + st * c_e, st * c_g + ct * c_e, c_r};
}

enum class LoadingScheme { nonadiabatic, adiabatic_zed, adiabatic_tpr };

// Loading probability against timing offsets (in units of T) for a sech
// photon with kappa = 1 and width kT. coupling is g/kappa for the
// non-adiabatic scheme (control stopped at T_Load + offset) and g'/kappa for
// the adiabatic schemes (control delayed by offset).
inline std::vector<double> timing_offset_scan(LoadingScheme scheme, double kT, double coupling,
                                              std::span<const double> offsets_over_T) {
  std::vector<double> out;
  if (scheme == LoadingScheme::nonadiabatic) {
    const PulseShape pulse = make_pulse(PulseKind::sech, kT, kT);
    const TwoLevelParams tp{coupling, 1.0, 0.0, 0.0};
    const auto pk = peak_loading(tp, pulse);
    const detail::ResponseEngine eng(detail::normalized(tp), pulse);
    for (double off : offsets_over_T) {
      const double t = pk.t_load + off * kT;
      out.push_back(t <= eng.origin() ? 0.0 : std::norm(eng.advance(Vec2{}, eng.origin(), t).y));
    }
    return out;
  }
  const auto s = scheme == LoadingScheme::adiabatic_zed ? AdiabaticScheme::zero_effective_detuning
                                                        : AdiabaticScheme::two_photon_resonance;
  for (double off : offsets_over_T)
    out.push_back(adiabatic_load_gprime(s, coupling, 1.0, kT, {}, off * kT).probability);
  return out;
}

}  // namespace cavload
