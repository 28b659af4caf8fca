#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "cavload/lambda_memory.hpp"

using namespace cavload;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

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

// Max |c_e| difference between the full three-state model and the reduced
// model for a constant control with g_c = Omega and delta1 = ratio * g_c.
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

}  // namespace

TEST_CASE("reduction exposes the effective two-level parameters", "[lambda]") {
  LambdaParams p;
  p.g_c = 3.0;
  p.delta1 = 60.0;
  p.delta2 = 59.0;
  p.gamma_r = 1.2;
  p.control = ControlField::constant_field(4.0);
  const ReducedParams r = reduce(p);
  CHECK_THAT(r.g(0.0), WithinRel(3.0 * 4.0 / 60.0, 1e-15));
  CHECK(r.Gamma_r == cplx(1.0, 1.2 / 60.0));
  CHECK_THAT(r.delta_eff(0.0), WithinAbs((9.0 - 16.0) / 60.0 + 1.0, 1e-14));
  CHECK_THAT(r.gamma_eff(0.0), WithinAbs(7.0 * 1.2 / 3600.0, 1e-15));
  CHECK_THAT(r.drive_growth, WithinRel(9.0 * 1.2 / 3600.0, 1e-15));
  CHECK_THAT(r.stark, WithinRel(9.0 / 60.0, 1e-15));
  CHECK_FALSE(r.outside_validity);
  p.delta1 = 30.0;
  CHECK(reduce(p).outside_validity);
}

TEST_CASE("Stark compensation cancels the effective detuning", "[lambda]") {
  const double gc = 2.0, om = 3.0, d1 = 40.0;
  LambdaParams p;
  p.g_c = gc;
  p.delta1 = d1;
  p.delta2 = stark_compensated_delta2(gc, om, d1);
  p.control = ControlField::constant_field(om);
  CHECK_THAT(reduce(p).delta_eff(1.0), WithinAbs(0.0, 1e-13));
  CHECK_THROWS_AS(stark_compensated_delta2(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("full and reduced models converge as the detuning grows", "[lambda]") {
  const double e10 = reduction_error(0.5, 10.0);
  const double e30 = reduction_error(0.5, 30.0);
  const double e100 = reduction_error(0.5, 100.0);
  CHECK(e10 < 0.02);
  CHECK(e30 < e10);
  CHECK(e100 < e30);
  CHECK(e100 < 1e-3);
}

TEST_CASE("non-adiabatic closed form matches the reduced integration", "[lambda]") {
  for (double gr : {0.0, 0.8}) {
    LambdaParams p = nonadiabatic_params(0.9, 1.0, 200.0, 1.4, gr);
    const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
    const auto grid = linspace(0.0, 10.0, 51);
    const auto closed = nonadiabatic_trajectory(p, pulse, grid);
    const auto num = reduced_ode(p, pulse, grid, tight());
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      m = std::max(m, std::abs(std::abs(closed.component("c_e")[i]) - std::abs(num.component("c_e")[i])));
    INFO("gamma_r=" << gr);
    CHECK(m < 1e-8);
  }
}

TEST_CASE("with gamma_r = 0 the non-adiabatic scheme is the two-level problem", "[lambda]") {
  const double g = 1.2;
  const LambdaParams p = nonadiabatic_params(g, 1.0, 1000.0);
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const auto a = nonadiabatic_peak(p, pulse);
  const auto b = peak_loading(TwoLevelParams{g, 1.0, 0.0, 0.0}, pulse);
  CHECK_THAT(a.probability, WithinAbs(b.probability, 1e-12));
  CHECK_THAT(a.t_load, WithinAbs(b.t_load, 1e-6));
}

TEST_CASE("loading freezes once the control switches off", "[lambda]") {
  const LambdaParams p = nonadiabatic_params(1.0, 1.0, 500.0);
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const double t_load = 3.0;
  const auto grid = linspace(0.0, 10.0, 101);
  const auto tr = nonadiabatic_trajectory(p, pulse, grid, t_load);
  const double frozen = nonadiabatic_load(p, pulse, t_load);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= t_load) CHECK_THAT(std::norm(tr.component("c_e")[i]), WithinAbs(frozen, 1e-12));

  // the full model with the control stepped off shows the same plateau
  LambdaParams q = p;
  q.control = ControlField::step_off(*p.control.constant, t_load);
  const auto full = full_ode(q, pulse, grid);
  const auto pop = full.population("c_e");
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i] >= t_load) CHECK_THAT(pop[i], WithinAbs(pop[30], 1e-9));
  CHECK_THAT(pop[30], WithinAbs(frozen, 5e-3));
}

TEST_CASE("physical units reduce to cavity-decay units", "[lambda]") {
  const double k = 4.0;
  const LambdaParams a = nonadiabatic_params(0.7, 1.0, 300.0, 1.0, 0.5);
  const LambdaParams b = nonadiabatic_params(0.7 * k, k, 300.0 * k, 1.0, 0.5 * k);
  const PulseShape pa = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const PulseShape pb = make_pulse_centered(PulseKind::sech, 2.0 / k, 2.0 / k);
  CHECK_THAT(nonadiabatic_load(a, pa, 3.1), WithinAbs(nonadiabatic_load(b, pb, 3.1 / k), 1e-12));
}

TEST_CASE("impedance-matched control pulse", "[lambda]") {
  SECTION("matches the textbook expression where it is well conditioned") {
    const double gc = 1.7, T = 6.0;
    for (double t : {-3.0, -1.0, 0.0, 0.4, 2.0, 5.0}) {
      const double x = 4.0 * t / T;
      const double want = gc / std::cosh(x) / std::sqrt((1.0 + std::tanh(x)) * (std::tanh(x) + 0.5 * T - 1.0));
      CHECK_THAT(adiabatic_control_pulse(gc, 1.0, T, t), WithinRel(want, 1e-12));
    }
  }
  SECTION("stays finite far before the photon") {
    const double v = adiabatic_control_pulse(1.0, 1.0, 5.0, -200.0);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
  }
  SECTION("rejects short pulses") {
    CHECK_THROWS_AS(adiabatic_control_pulse(1.0, 1.0, 3.99, 0.0), std::domain_error);
    CHECK_NOTHROW(adiabatic_control_pulse(1.0, 1.0, 4.0, 0.0));
  }
  SECTION("radicand sign flips at kT = 4") {
    for (double x = -30.0; x <= 30.0; x += 0.25) CHECK(adiabatic_radicand(4.0, x) >= 0.0);
    bool negative = false;
    for (double x = -30.0; x <= 30.0; x += 0.25) negative |= adiabatic_radicand(3.9, x) < 0.0;
    CHECK(negative);
  }
}

TEST_CASE("adiabatic two-photon resonance follows the dark state", "[lambda]") {
  const double kT = 10.0, gp = 2.0;
  const auto grid = linspace(0.0, 5.0 * kT, 501);
  const auto r = adiabatic_load_gprime(AdiabaticScheme::two_photon_resonance, gp, 1.0, kT, grid);
  const LambdaParams p = adiabatic_params(AdiabaticScheme::two_photon_resonance, std::sqrt(1000.0) * gp,
                                          1000.0 * gp, 1.0, kT);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto db = dark_bright_decompose(r.trajectory.component("beta")[i], r.trajectory.component("c_e")[i],
                                          p.control.rabi(grid[i]), p.g_c, r.trajectory.component("c_r")[i]);
    worst = std::max(worst, std::norm(db.b_amp) + std::norm(db.r_amp));
  }
  CHECK(worst < 0.05);
  CHECK(r.probability > 0.9);
}

TEST_CASE("adiabatic loading grows with the coupling under two-photon resonance", "[lambda]") {
  double prev = 0.0;
  for (double gp : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double P = adiabatic_load_gprime(AdiabaticScheme::two_photon_resonance, gp, 1.0, 5.0).probability;
    CHECK(P > prev);
    prev = P;
  }
}

TEST_CASE("adiabatic trajectories agree with the full model far off resonance", "[lambda]") {
  const double kT = 6.0, gp = 1.0, d1 = 400.0;
  const double gc = std::sqrt(gp * d1);
  const auto grid = linspace(0.0, 5.0 * kT, 31);
  const auto r = adiabatic_load(AdiabaticScheme::zero_effective_detuning, gc, d1, 1.0, kT, grid);
  const LambdaParams p = adiabatic_params(AdiabaticScheme::zero_effective_detuning, gc, d1, 1.0, kT);
  const auto full = full_ode(p, make_pulse(PulseKind::sech, kT, kT), grid);
  double m = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    m = std::max(m, std::abs(std::abs(full.component("c_e")[i]) - std::abs(r.trajectory.component("c_e")[i])));
  CHECK(m < 0.02);
}

TEST_CASE("dark/bright decomposition is unitary", "[lambda]") {
  std::mt19937 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const cplx cg(N(rng), N(rng)), ce(N(rng), N(rng));
    const double om = std::abs(N(rng)), gc = std::abs(N(rng)) + 1e-3;
    const auto d = dark_bright_decompose(cg, ce, om, gc);
    CHECK_THAT(std::norm(d.d_amp) + std::norm(d.b_amp), WithinRel(std::norm(cg) + std::norm(ce), 1e-12));
  }
  // dark state: g_c beta + Omega c_e = 0
  const auto d = dark_bright_decompose(-1.0, 2.0, 1.0, 2.0);
  CHECK(std::abs(d.b_amp) < 1e-15);
  CHECK_THROWS_AS(dark_bright_decompose(1.0, 0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("timing offsets reduce the loading", "[lambda]") {
  const std::vector<double> offs{-0.5, 0.0, 0.5};
  const auto na = timing_offset_scan(LoadingScheme::nonadiabatic, 1.0, 1.7, offs);
  CHECK(na[1] > na[0]);
  CHECK(na[1] > na[2]);
  const auto ad = timing_offset_scan(LoadingScheme::adiabatic_zed, 4.5, 1.0, offs);
  CHECK(ad[1] > ad[0]);
  CHECK(ad[1] > ad[2]);
}

TEST_CASE("control CSV files load", "[lambda]") {
  const std::string path = "lambda_test_control.csv";
  std::ofstream(path) << "t,Omega,phi_z\n0,0,0\n1,2,0.5\n3,2,0.5\n";
  const ControlField c = load_control_csv(path);
  CHECK(c.rabi(0.5) == 1.0);
  CHECK(c.rabi(2.0) == 2.0);
  CHECK(c.phase(0.5) == 0.25);
  CHECK(c.peak == 2.0);
  std::remove(path.c_str());
  std::ofstream(path) << "t,Omega\n0,0\n";
  CHECK_THROWS_AS(load_control_csv(path), ConfigError);
  std::remove(path.c_str());
  std::ofstream(path) << "t,Omega,phi_z\n0,0,0\n0,1,0\n";
  CHECK_THROWS_AS(load_control_csv(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("Lambda parameters are validated", "[lambda]") {
  LambdaParams p;
  p.g_c = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // no control
  p.control = ControlField::constant_field(1.0);
  CHECK_NOTHROW(p.validate());
  p.gamma_r = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(ControlField::constant_field(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(adiabatic_params(AdiabaticScheme::two_photon_resonance, 10.0, 100.0, 1.0, 3.0),
                  std::domain_error);
}

TEST_CASE("documented parameter values", "[lambda]") {
  CHECK_THAT(stark_compensated_delta2(5.0, 3.0, 50.0), WithinAbs(50.32, 1e-12));
  CHECK(stark_compensated_delta2(4.0, 4.0, 50.0) == 50.0);
  CHECK_THAT(adiabatic_control_pulse(1.3, 1.0, 8.0, 0.0), WithinRel(1.3 / std::sqrt(3.0), 1e-14));
  LambdaParams p;
  p.g_c = 5.0;
  p.delta1 = 50.0;
  p.delta2 = 50.0;
  p.control = ControlField::constant_field(5.0);
  auto r = reduce(p);
  CHECK_THAT(r.g(0.0), WithinAbs(0.5, 1e-15));
  CHECK(r.Gamma_r == cplx(1.0, 0.0));
  CHECK(r.gamma_eff(0.0) == 0.0);
  p.gamma_r = 2.0;
  CHECK(reduce(p).gamma_eff(3.0) == 0.0);  // Omega = g_c
}

TEST_CASE("dark state limits", "[lambda]") {
  CHECK_THAT(std::abs(dark_bright_decompose(1.0, 0.0, 1e6, 1.0).d_amp), WithinAbs(1.0, 1e-11));
  CHECK_THAT(std::abs(dark_bright_decompose(0.0, 1.0, 1e-6, 1.0).d_amp), WithinAbs(1.0, 1e-11));
}

TEST_CASE("without a control field the atom stays in the ground state", "[lambda]") {
  LambdaParams p;
  p.g_c = 5.0;
  p.delta1 = 50.0;
  p.delta2 = 50.0;
  p.control = ControlField::constant_field(0.0);
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 2.0, 2.0);
  const auto grid = linspace(0.0, 10.0, 41);
  const auto full = full_ode(p, pulse, grid, tight());
  const auto bare = amplitude_closed_form({0.0, 1.0, 0.0, 0.0}, pulse, 4.0);
  for (const auto& v : full.component("c_e")) CHECK(std::abs(v) == 0.0);
  // the cavity still sees the atom through the dispersive g_c leg, so only
  // compare to the bare cavity when g_c is switched off as well
  p.g_c = 0.0;
  const auto empty = full_ode(p, pulse, std::vector<double>{4.0}, tight());
  CHECK(std::abs(empty.component("beta")[0] - bare.beta) < 1e-9);
  const auto z = full_ode(p, make_zero_pulse(), grid);
  for (const auto& c : z.components)
    for (const auto& v : c) CHECK(v == cplx(0.0));
  CHECK(nonadiabatic_load(nonadiabatic_params(0.0, 1.0, 100.0), pulse, 5.0) == 0.0);
}

TEST_CASE("non-adiabatic loading with a short photon", "[lambda]") {
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, 1.0, 1.0);
  double best = 0.0;
  for (double g = 1.0; g <= 2.5; g += 0.05)
    best = std::max(best, nonadiabatic_peak(nonadiabatic_params(g, 1.0, 1000.0), pulse).probability);
  CHECK(best > 0.75);
  // stopping the control long before the photon arrives loads nothing
  const std::vector<double> far{-6.0};
  CHECK(timing_offset_scan(LoadingScheme::nonadiabatic, 1.0, 1.7, far)[0] < 1e-6);
}
