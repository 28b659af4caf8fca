// Acceptance checks. `acceptance` runs every criterion; `acceptance <id>`
// runs one. Each prints a PASS/FAIL line; the exit status is non-zero when
// any selected criterion fails.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cavload/cli.hpp"

using namespace cavload;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (ok ? "" : "[miss] ") << what << "; ";
  }
};

std::string num(double v) { return format_number(v); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

OdeOptions tight() {
  OdeOptions o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-13;
  return o;
}

const PulseKind kShapes[] = {PulseKind::sech, PulseKind::rectangular, PulseKind::exp_rising, PulseKind::exp_decaying};

// 1: closed form vs direct integration
void oracle_equivalence(Outcome& o) {
  std::mt19937 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < 200; ++n) {
    const double kappa = 0.5 + 2.0 * U(rng);
    const TwoLevelParams p{kappa * (0.05 + 3.0 * U(rng)), kappa, kappa * 0.5 * U(rng), kappa * (2.0 * U(rng) - 1.0)};
    const double T = (0.3 + 8.0 * U(rng)) / kappa;
    const PulseShape pulse = make_pulse_centered(kShapes[n % 4], T, 2.0 * T);
    const auto grid = linspace(0.0, 7.0 * T, 25);
    const auto a = amplitude_trajectory(p, pulse, grid);
    const auto b = amplitude_ode(p, pulse, grid, tight());
    for (const char* name : {"beta", "c_e"}) {
      const auto& x = a.component(name);
      const auto& y = b.component(name);
      for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(std::abs(x[i]) - std::abs(y[i])));
    }
  }
  o.require(worst <= 1e-6, "max | |closed| - |ode| | = " + num(worst) + " over 200 cases");
}

// 2: two-level optimum at kT = 2 and kT = 100
void two_level_optimum(Outcome& o) {
  ScenarioConfig c;
  c.kT = 2.0;
  const auto a = optimize_coupling(c);
  o.require(a.p_max > 0.9, "kT=2 P_max = " + num(a.p_max) + " (g_opt " + num(a.g_opt) + ")");
  c.kT = 100.0;
  const auto b = optimize_coupling(c);
  o.require(std::abs(b.g_opt - 0.10) <= 0.02, "kT=100 g_opt = " + num(b.g_opt) + " (target 0.10 +- 0.02)");
}

// 3: pulse-shape insensitivity at kT = 2, g = 1
void pulse_shapes(Outcome& o) {
  std::vector<double> p;
  for (PulseKind k : kShapes)
    p.push_back(peak_loading({1.0, 1.0, 0.0, 0.0}, make_pulse_centered(k, 2.0, 2.0)).probability);
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  o.detail << "sech " << num(p[0]) << ", rect " << num(p[1]) << ", exp_rising " << num(p[2]) << ", exp_decaying "
           << num(p[3]) << "; ";
  o.require(*hi - *lo <= 0.05, "band " + num(*hi - *lo) + " (limit 0.05)");
  o.require(p[0] >= p[1] && p[1] >= p[2] && p[2] >= p[3], "ordering sech >= rect >= rising >= decaying");
}

// 4: two-photon resonance at kT = 5, g' = 2
void tpr_point(Outcome& o) {
  const double p = adiabatic_load_gprime(AdiabaticScheme::two_photon_resonance, 2.0, 1.0, 5.0).probability;
  o.require(std::abs(p - 0.90) <= 0.05, "P(5T) at g'=2 is " + num(p));
  double prev = 0.0;
  bool mono = true;
  for (int i = 1; i <= 25; ++i) {
    const double q = adiabatic_load_gprime(AdiabaticScheme::two_photon_resonance, 0.2 * i, 1.0, 5.0).probability;
    mono = mono && q >= prev;
    prev = q;
  }
  o.require(mono, "P nondecreasing over g' = 0.2..5");
}

// 5: control law threshold and positivity
void control_threshold(Outcome& o) {
  bool rejects = true;
  for (double kT : {0.5, 2.0, 3.999})
    try {
      adiabatic_control_pulse(1.0, 1.0, kT, 0.0);
      rejects = false;
    } catch (const std::domain_error&) {
    }
  o.require(rejects, "kT < 4 rejected");
  std::mt19937 rng(5);
  bool positive = true;
  for (double kT : {4.0001, 4.5, 6.0, 10.0, 40.0}) {
    std::uniform_real_distribution<double> U(-3.0 * kT, 3.0 * kT);
    for (int i = 0; i < 10000; ++i) {
      const double v = adiabatic_control_pulse(1.0, 1.0, kT, U(rng));
      positive = positive && std::isfinite(v) && v > 0.0;
    }
  }
  o.require(positive, "Omega(t) finite and positive at 1e4 random t for each kT in {4.0001, 4.5, 6, 10, 40}");
}

// 6: zero effective detuning optimum
void zed_optimum(Outcome& o) {
  ScenarioConfig c;
  c.scenario = Scenario::lambda_adiabatic_zed;
  for (double kT : {4.5, 6.0, 8.0, 10.0}) {
    c.kT = kT;
    const auto r = optimize_coupling(c);
    if (kT == 4.5) o.require(std::abs(r.p_max - 0.75) <= 0.05, "kT=4.5 P_max = " + num(r.p_max));
    o.require(r.g_opt >= 0.7 && r.g_opt <= 1.3, "kT=" + num(kT) + " g'_opt = " + num(r.g_opt));
  }
}

// 7: non-adiabatic loading at kT = 1 and its throughput
void nonadiabatic_point(Outcome& o) {
  ScenarioConfig c;
  c.scenario = Scenario::lambda_nonadiabatic;
  c.kT = 1.0;
  const auto r = optimize_coupling(c);
  o.require(r.p_max > 0.75, "kT=1 P_max = " + num(r.p_max) + " (g_opt " + num(r.g_opt) + ")");
  const double ratio = throughput_compare({1.0, r.p_max}, {4.0, 1.0});
  const double bound = 3.0 * (r.p_max / 0.75) * 0.99;
  o.require(ratio >= bound, "throughput ratio " + num(ratio) + " vs bound " + num(bound));
}

// 8: timing tolerance at +-T/2
void timing_tolerance(Outcome& o) {
  const std::vector<double> offs{-0.5, 0.0, 0.5};
  struct Scheme {
    const char* name;
    LoadingScheme s;
    Scenario sc;
    double kT;
  };
  for (const Scheme& s : {Scheme{"non-adiabatic", LoadingScheme::nonadiabatic, Scenario::lambda_nonadiabatic, 1.0},
                          Scheme{"adiabatic", LoadingScheme::adiabatic_zed, Scenario::lambda_adiabatic_zed, 4.5}}) {
    ScenarioConfig c;
    c.scenario = s.sc;
    c.kT = s.kT;
    const double g = optimize_coupling(c).g_opt;
    const auto p = timing_offset_scan(s.s, s.kT, g, offs);
    for (int i : {0, 2}) {
      const double r = p[i] / p[1];
      o.require(r >= 0.4 && r <= 0.6,
                std::string(s.name) + " kT=" + num(s.kT) + " offset " + num(offs[i]) + "T: P/P0 = " + num(r));
    }
  }
}

// 9: fidelity of the adiabatic elimination
double reduction_error(double g_eff, double ratio) {
  const double gc = g_eff * ratio;
  const double d1 = gc * ratio;
  LambdaParams p;
  p.g_c = gc;
  p.delta1 = d1;
  p.control = ControlField::constant_field(gc);
  p.delta2 = stark_compensated_delta2(gc, gc, d1);
  p.photon_detuning = stark_carrier(gc, d1);
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const auto grid = linspace(0.0, 10.0, 201);
  const auto full = full_ode(p, pulse, grid);
  const auto red = reduced_ode(p, pulse, grid);
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    m = std::max(m, std::abs(std::abs(full.component("c_e")[i]) - std::abs(red.component("c_e")[i])));
  return m;
}

void reduction_fidelity(Outcome& o) {
  const double e10 = reduction_error(0.5, 10.0), e30 = reduction_error(0.5, 30.0),
               e100 = reduction_error(0.5, 100.0);
  o.require(e10 <= 0.02, "ratio 10 error " + num(e10));
  o.require(e30 < e10 && e100 < e30, "errors at 30, 100: " + num(e30) + ", " + num(e100));
}

// 10: polarization invariance
void polarization(Outcome& o) {
  const TwoLevelParams leg{1.0, 1.0, 0.1, 0.0};
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  std::mt19937 rng(10);
  std::normal_distribution<double> N(0.0, 1.0);
  double lo = 1.0, hi = 0.0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    cplx a{N(rng), N(rng)}, b{N(rng), N(rng)};
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    try {
      const double p = v_level_load({a / n, b / n}, leg, leg, pulse, 3.0);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    } catch (const std::exception&) {
      ok = false;
    }
  }
  o.require(ok && hi - lo <= 1e-12, "spread " + num(hi - lo) + " over 100 qubits");
}

// 11: factorization and exchange symmetry of the joint amplitude
void biphoton_symmetry(Outcome& o) {
  QuadratureSpec q;
  q.rel_tol = 1e-11;
  q.abs_tol = 1e-13;
  const TwoLevelParams p{1.0, 1.0, 0.1, 0.2};
  const PulseShape f = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const auto sep = BiphotonAmplitude::from_function([&](double t, double u) { return f(t) * f(u); }, f.support(), {}, q);
  double worst = 0.0;
  for (double t : {2.0, 3.0, 4.0, 6.0}) {
    const cplx ce = amplitude_closed_form(p, f, t).c_e;
    worst = std::max(worst, std::abs(c_ee(p, sep, t, q) - ce * ce));
  }
  o.require(worst <= 1e-8, "separable |c_ee - c_e^2| = " + num(worst));
  const PulseShape h = make_pulse_centered(PulseKind::exp_decaying, 1.0, 2.5);
  const Support s{std::min(f.support().lo, h.support().lo), std::max(f.support().hi, h.support().hi)};
  const auto anti = BiphotonAmplitude::from_function([&](double t, double u) { return f(t) * h(u) - h(t) * f(u); }, s,
                                                     [](double) { return std::vector<double>{2.0}; });
  double big = 0.0;
  for (double t : {2.0, 3.0, 4.0, 6.0}) big = std::max(big, std::abs(c_ee(p, anti, t)));
  o.require(big <= 1e-10, "antisymmetric |c_ee| = " + num(big));
}

// 12: operating region of entangled loading
void mitnu_region(Outcome& o) {
  const std::vector<double> v{2.0, 3.0, 4.0, 5.0, 6.0};
  SweepSpec s;
  s.base.scenario = Scenario::mitnu;
  s.axes = {{"kT", v}, {"kT0", v}};
  s.threads = 4;
  const auto rows = sweep(s);
  double pmin = 1.0;
  bool decreasing = true, errors = false;
  std::ostringstream grid;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) {
      const auto& r = rows[i * v.size() + j];
      errors = errors || !r.error.empty();
      pmin = std::min(pmin, r.result.p_max);
      grid << (j ? " " : "") << num(std::round(r.result.p_max * 1000.0) / 1000.0);
      if (i > 0) decreasing = decreasing && r.result.g_opt < rows[(i - 1) * v.size() + j].result.g_opt;
      if (j > 0) decreasing = decreasing && r.result.g_opt < rows[i * v.size() + j - 1].result.g_opt;
    }
    grid << (i + 1 < v.size() ? " / " : "");
  }
  o.require(!errors, "all cells evaluated");
  o.require(pmin > 0.7, "min P_max " + num(pmin) + " (rows kT=2..6: " + grid.str() + ")");
  o.require(decreasing, "g_opt decreases along kT and kT0");
}

// 13: rate-and-time rescaling
void scaling(Outcome& o) {
  const double k = 3.7;
  double worst = 0.0;
  auto track = [&](const Trajectory& a, const Trajectory& b) {
    for (std::size_t c = 0; c < a.components.size(); ++c)
      for (std::size_t i = 0; i < a.times.size(); ++i)
        worst = std::max(worst, std::abs(std::norm(a.components[c][i]) - std::norm(b.components[c][i])));
  };
  auto scaled = [&](std::vector<double> g) {
    for (double& t : g) t /= k;
    return g;
  };
  {
    const auto grid = linspace(0.0, 10.0, 41);
    const TwoLevelParams p{0.9, 1.0, 0.2, 0.3}, q{0.9 * k, k, 0.2 * k, 0.3 * k};
    for (PulseKind kind : kShapes)
      track(amplitude_trajectory(p, make_pulse_centered(kind, 2.0, 2.0), grid),
            amplitude_trajectory(q, make_pulse_centered(kind, 2.0 / k, 2.0 / k), scaled(grid)));
  }
  {
    const auto grid = linspace(0.0, 5.0, 41);
    const LambdaParams p = nonadiabatic_params(1.7, 1.0, 1000.0, 1.0, 0.4);
    const LambdaParams q = nonadiabatic_params(1.7 * k, k, 1000.0 * k, 1.0, 0.4 * k);
    track(nonadiabatic_trajectory(p, make_pulse_centered(PulseKind::sech, 1.0, 1.0), grid, 1.6),
          nonadiabatic_trajectory(q, make_pulse_centered(PulseKind::sech, 1.0 / k, 1.0 / k), scaled(grid), 1.6 / k));
  }
  for (AdiabaticScheme s : {AdiabaticScheme::two_photon_resonance, AdiabaticScheme::zero_effective_detuning}) {
    const auto grid = linspace(0.0, 25.0, 26);
    track(adiabatic_load_gprime(s, 1.0, 1.0, 5.0, grid).trajectory,
          adiabatic_load_gprime(s, k, k, 5.0 / k, scaled(grid)).trajectory);
  }
  {
    const auto grid = linspace(0.0, 12.0, 25);
    const auto b1 = BiphotonAmplitude::spdc({2.0, 1.5, {}});
    const auto bk = BiphotonAmplitude::spdc({2.0 / k, 1.5 / k, {}});
    track(cee_trajectory({1.1, 1.0, 0.0, 0.0}, b1, grid), cee_trajectory({1.1 * k, k, 0.0, 0.0}, bk, scaled(grid)));
  }
  double peak_gap = 0.0;
  for (Scenario sc : {Scenario::two_level, Scenario::lambda_nonadiabatic, Scenario::lambda_adiabatic_tpr,
                      Scenario::lambda_adiabatic_zed, Scenario::mitnu}) {
    ScenarioConfig a;
    a.scenario = sc;
    a.kT = 5.0;
    a.gamma_r_over_k = sc == Scenario::mitnu ? 0.0 : 0.1;
    ScenarioConfig b = a;
    b.kappa = k;
    peak_gap = std::max(peak_gap, std::abs(evaluate_scenario(a, 1.2).probability - evaluate_scenario(b, 1.2).probability));
  }
  o.require(worst <= 1e-9, "max population difference along curves " + num(worst));
  o.require(peak_gap <= 1e-9, "max objective difference across scenarios " + num(peak_gap));
}

// 14: figure presets through the command line
void presets(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / ("cavload_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  for (const auto& preset : cli::preset_names()) {
    std::vector<std::string> listing[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (preset + "_" + std::to_string(rep));
      std::ostringstream out, err;
      const int rc = cli::run_cli({"figure", "--preset", preset, "--output_dir", dir.string()}, out, err);
      if (rc != 0) {
        o.require(false, preset + " exit " + std::to_string(rc) + ": " + err.str());
        ran = false;
        break;
      }
      std::istringstream in(out.str());
      for (std::string line; std::getline(in, line);) listing[rep].push_back(line);
    }
    if (!ran) continue;
    bool valid = !listing[0].empty(), same = listing[0] == listing[1];
    for (const auto& name : listing[0]) {
      std::string bodies[2];
      for (int rep = 0; rep < 2; ++rep) {
        std::ifstream in(root / (preset + "_" + std::to_string(rep)) / name, std::ios::binary);
        bodies[rep].assign(std::istreambuf_iterator<char>(in), {});
      }
      same = same && bodies[0] == bodies[1];
      if (name.ends_with(".csv")) {
        try {
          const CsvTable t = parse_csv(bodies[0]);
          valid = valid && !t.rows.empty();
          for (const auto& row : t.rows)
            for (double x : row) valid = valid && std::isfinite(x);
        } catch (const std::exception&) {
          valid = false;
        }
      }
    }
    o.require(valid && same, preset + (valid ? " valid" : " INVALID") + (same ? " identical" : " DIFFERS"));
  }
  fs::remove_all(root);
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c = {
      {1, "closed form vs integration", oracle_equivalence},
      {2, "two-level optimum", two_level_optimum},
      {3, "pulse-shape insensitivity", pulse_shapes},
      {4, "two-photon resonance point", tpr_point},
      {5, "control pulse threshold", control_threshold},
      {6, "zero effective detuning optimum", zed_optimum},
      {7, "non-adiabatic loading", nonadiabatic_point},
      {8, "timing tolerance", timing_tolerance},
      {9, "adiabatic elimination fidelity", reduction_fidelity},
      {10, "polarization invariance", polarization},
      {11, "biphoton factorization and symmetry", biphoton_symmetry},
      {12, "entangled loading region", mitnu_region},
      {13, "scaling invariance", scaling},
      {14, "figure presets", presets},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    try {
      ids.push_back(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: acceptance [id...]\n";
      return 2;
    }
  }
  if (ids.empty())
    for (const auto& c : criteria()) ids.push_back(c.id);
  int failed = 0;
  for (int id : ids) {
    const auto it = std::find_if(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.id == id; });
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    Outcome o;
    try {
      it->run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << " " << it->name << ": " << o.detail.str() << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
