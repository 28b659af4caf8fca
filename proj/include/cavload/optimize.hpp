#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cavload/entangled_loading.hpp"
#include "cavload/error.hpp"
#include "cavload/lambda_memory.hpp"
#include "cavload/parallel.hpp"
#include "cavload/pulses.hpp"
#include "cavload/two_level.hpp"

namespace cavload {

enum class Scenario { two_level, lambda_nonadiabatic, lambda_adiabatic_tpr, lambda_adiabatic_zed, mitnu };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::two_level: return "two_level";
    case Scenario::lambda_nonadiabatic: return "lambda_nonadiabatic";
    case Scenario::lambda_adiabatic_tpr: return "lambda_adiabatic_tpr";
    case Scenario::lambda_adiabatic_zed: return "lambda_adiabatic_zed";
    case Scenario::mitnu: return "mitnu";
  }
  return "unknown";
}

inline Scenario parse_scenario(std::string_view name) {
  for (Scenario s : {Scenario::two_level, Scenario::lambda_nonadiabatic, Scenario::lambda_adiabatic_tpr,
                     Scenario::lambda_adiabatic_zed, Scenario::mitnu})
    if (name == to_string(s)) return s;
  throw ConfigError("scenario", "unknown scenario '" + std::string(name) + "'");
}

// Dimensionless description of a loading scenario. All rates are in units
// of kappa and the photon width is kT / kappa. The coupling swept by the
// optimizer is g/kappa (two-level, non-adiabatic, mitnu) or g'/kappa =
// g_c^2 / (delta1 kappa) (adiabatic schemes).
struct ScenarioConfig {
  Scenario scenario = Scenario::two_level;
  double kT = 2.0;
  double kT0 = 2.0;
  PulseKind pulse = PulseKind::sech;
  double gamma_over_k = 0.0;
  std::optional<double> gamma_over_g;  // overrides gamma_over_k when set
  double delta_over_k = 0.0;
  double delta1_over_k = 1000.0;
  double gc_over_omega = 1.0;
  double gamma_r_over_k = 0.0;
  double kappa = 1.0;  // physical cavity decay rate

  double T() const { return kT / kappa; }

  void validate() const {
    if (!(kT > 0.0) || !std::isfinite(kT)) throw ConfigError("kT", "must be positive");
    if (scenario == Scenario::mitnu && (!(kT0 > 0.0) || !std::isfinite(kT0)))
      throw ConfigError("kT0", "must be positive");
    if (!(kappa > 0.0)) throw ConfigError("kappa", "must be positive");
    if (!(gamma_over_k >= 0.0)) throw ConfigError("gamma_over_k", "must be non-negative");
    if (gamma_over_g && !(*gamma_over_g >= 0.0)) throw ConfigError("gamma_over_g", "must be non-negative");
    if (!(gamma_r_over_k >= 0.0)) throw ConfigError("gamma_r_over_k", "must be non-negative");
    if (!(gc_over_omega > 0.0)) throw ConfigError("gc_over_omega", "must be positive");
    if (delta1_over_k == 0.0) throw ConfigError("delta1_over_k", "must be nonzero");
    if ((scenario == Scenario::lambda_adiabatic_tpr || scenario == Scenario::lambda_adiabatic_zed) && kT < 4.0)
      throw ConfigError("kT", "adiabatic schemes need kT >= 4");
  }
};

// Loading probability objective at coupling/kappa: the time peak of
// |c_e|^2 (|c_ee|^2 for mitnu) for stop-at-peak schemes and the final value
// |c_e(5T)|^2 for the adiabatic schemes.
inline PeakLoading evaluate_scenario(const ScenarioConfig& c, double coupling) {
  c.validate();
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw ConfigError("coupling", "must be non-negative");
  const double k = c.kappa;
  const double T = c.T();
  switch (c.scenario) {
    case Scenario::two_level: {
      const double g = coupling * k;
      const double gamma = c.gamma_over_g ? *c.gamma_over_g * g : c.gamma_over_k * k;
      const TwoLevelParams p{g, k, gamma, c.delta_over_k * k};
      return peak_loading(p, make_pulse_centered(c.pulse, T, T));
    }
    case Scenario::lambda_nonadiabatic: {
      const LambdaParams p =
          nonadiabatic_params(coupling * k, k, c.delta1_over_k * k, c.gc_over_omega, c.gamma_r_over_k * k);
      return nonadiabatic_peak(p, make_pulse_centered(c.pulse, T, T));
    }
    case Scenario::lambda_adiabatic_tpr:
    case Scenario::lambda_adiabatic_zed: {
      if (coupling == 0.0) return {5.0 * T, 0.0};
      const auto s = c.scenario == Scenario::lambda_adiabatic_tpr ? AdiabaticScheme::two_photon_resonance
                                                                 : AdiabaticScheme::zero_effective_detuning;
      const auto r = adiabatic_load_gprime(s, coupling * k, k, T);
      return {r.t_final, r.probability};
    }
    case Scenario::mitnu: {
      const SpdcParams sp{T, c.kT0 / k, {}};
      if (c.gamma_r_over_k == 0.0) {
        const auto b = BiphotonAmplitude::spdc(sp);
        return mitnu_peak(TwoLevelParams{coupling * k, k, 0.0, 0.0}, b);
      }
      const LambdaParams p =
          nonadiabatic_params(coupling * k, k, c.delta1_over_k * k, c.gc_over_omega, c.gamma_r_over_k * k);
      return mitnu_peak(p, sp);
    }
  }
  throw std::logic_error("unhandled scenario");
}

struct OptimumPoint {
  double g_opt = 0.0;  // coupling / kappa
  double p_max = 0.0;
  double t_load = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int evaluations = 0;
};

// Coarse log-spaced scan of the coupling over [g_lo, g_hi] followed by
// golden-section refinement inside the bracket of the best sample.
inline OptimumPoint optimize_coupling(const ScenarioConfig& c, double g_lo = 0.05, double g_hi = 10.0,
                                      double tol = 1e-4, int n_grid = 48) {
  if (!(g_lo > 0.0) || !(g_hi > g_lo) || !std::isfinite(g_hi))
    throw ConfigError("g_range", "coupling range must satisfy 0 < g_min < g_max");
  if (!(tol > 0.0)) throw ConfigError("tol", "must be positive");
  if (n_grid < 40) throw ConfigError("n_grid", "coarse grid needs at least 40 points");
  c.validate();
  OptimumPoint out;
  std::vector<double> gs(n_grid), ps(n_grid), ts(n_grid);
  const double r = std::log(g_hi / g_lo);
  for (int i = 0; i < n_grid; ++i) {
    gs[i] = i + 1 == n_grid ? g_hi : g_lo * std::exp(r * i / (n_grid - 1));
    const auto pk = evaluate_scenario(c, gs[i]);
    ps[i] = pk.probability;
    ts[i] = pk.t_load;
  }
  out.evaluations = n_grid;
  const auto [mn, mx] = std::minmax_element(ps.begin(), ps.end());
  if (*mx - *mn < 1e-9)
    throw DegenerateObjective("loading probability is flat over the coupling range");
  int best = static_cast<int>(mx - ps.begin());
  out.g_opt = gs[best];
  out.p_max = ps[best];
  out.t_load = ts[best];
  double a = gs[std::max(0, best - 1)];
  double b = gs[std::min(n_grid - 1, best + 1)];
  auto consider = [&](double g, const PeakLoading& pk) {
    if (pk.probability > out.p_max) {
      out.p_max = pk.probability;
      out.g_opt = g;
      out.t_load = pk.t_load;
    }
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  auto e1 = evaluate_scenario(c, x1), e2 = evaluate_scenario(c, x2);
  out.evaluations += 2;
  consider(x1, e1);
  consider(x2, e2);
  while (b - a > tol) {
    if (e1.probability >= e2.probability) {
      b = x2;
      x2 = x1;
      e2 = e1;
      x1 = b - phi * (b - a);
      e1 = evaluate_scenario(c, x1);
      consider(x1, e1);
    } else {
      a = x1;
      x1 = x2;
      e1 = e2;
      x2 = a + phi * (b - a);
      e2 = evaluate_scenario(c, x2);
      consider(x2, e2);
    }
    ++out.evaluations;
  }
  out.bracket_lo = a;
  out.bracket_hi = b;
  return out;
}

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

enum class SweepMode { probability, optimum };

struct SweepSpec {
  ScenarioConfig base;
  std::vector<SweepAxis> axes;
  SweepMode mode = SweepMode::optimum;
  double coupling = 1.0;  // probability mode
  double g_lo = 0.05, g_hi = 10.0, tol = 1e-4;
  unsigned threads = 0;
};

struct SweepRow {
  std::vector<double> coords;
  OptimumPoint result;
  std::string error;  // empty on success
};

// Sets a named dimensionless field of a scenario.
inline void set_axis(ScenarioConfig& c, double& coupling, std::string_view name, double v) {
  if (name == "kT") c.kT = v;
  else if (name == "kT0") c.kT0 = v;
  else if (name == "gamma_over_k") c.gamma_over_k = v;
  else if (name == "gamma_over_g") c.gamma_over_g = v;
  else if (name == "delta_over_k") c.delta_over_k = v;
  else if (name == "delta1_over_k") c.delta1_over_k = v;
  else if (name == "gamma_r_over_k") c.gamma_r_over_k = v;
  else if (name == "gc_over_omega") c.gc_over_omega = v;
  else if (name == "coupling") coupling = v;
  else throw ConfigError("axis", "unknown sweep axis '" + std::string(name) + "'");
}

// Cartesian sweep in row-major order (last axis fastest). Cells run in
// parallel; a failing cell records its error and the sweep continues.
inline std::vector<SweepRow> sweep(const SweepSpec& s) {
  std::size_t total = 1;
  for (const auto& ax : s.axes) {
    if (ax.values.empty()) throw ConfigError("axis", "sweep axis '" + ax.name + "' is empty");
    total *= ax.values.size();
  }
  {
    ScenarioConfig probe = s.base;
    double cpl = s.coupling;
    for (const auto& ax : s.axes) set_axis(probe, cpl, ax.name, ax.values.front());
  }
  std::vector<SweepRow> rows(total);
  parallel_for(
      total,
      [&](std::size_t idx) {
        ScenarioConfig c = s.base;
        double coupling = s.coupling;
        std::size_t rem = idx;
        std::vector<double> coords(s.axes.size());
        for (std::size_t a = s.axes.size(); a-- > 0;) {
          const auto& vals = s.axes[a].values;
          coords[a] = vals[rem % vals.size()];
          rem /= vals.size();
        }
        for (std::size_t a = 0; a < s.axes.size(); ++a) set_axis(c, coupling, s.axes[a].name, coords[a]);
        SweepRow row;
        row.coords = coords;
        try {
          if (s.mode == SweepMode::optimum) {
            row.result = optimize_coupling(c, s.g_lo, s.g_hi, s.tol);
          } else {
            const auto pk = evaluate_scenario(c, coupling);
            row.result = {coupling, pk.probability, pk.t_load, coupling, coupling, 1};
          }
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        rows[idx] = std::move(row);
      },
      s.threads);
  return rows;
}

struct ThroughputPoint {
  double T = 1.0;  // pulse width
  double probability = 0.0;
};

// Relative photon throughput of system A over system B: (P_A/T_A)/(P_B/T_B).
inline double throughput_compare(const ThroughputPoint& a, const ThroughputPoint& b) {
  if (!(a.T > 0.0) || !(b.T > 0.0)) throw std::invalid_argument("pulse widths must be positive");
  if (!(b.probability > 0.0)) throw std::invalid_argument("reference system has zero loading probability");
  if (!(a.probability >= 0.0)) throw std::invalid_argument("loading probability must be non-negative");
  return (a.probability / a.T) / (b.probability / b.T);
}

}  // namespace cavload
