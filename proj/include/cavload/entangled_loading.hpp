#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavload/lambda_memory.hpp"
#include "cavload/numerics/linear_response.hpp"
#include "cavload/numerics/quadrature.hpp"
#include "cavload/pulses.hpp"
#include "cavload/trajectory.hpp"
#include "cavload/two_level.hpp"

namespace cavload {

// Photon polarization state alpha |+> + beta |->.
struct PolarizationQubit {
  cplx alpha{1.0, 0.0};
  cplx beta{0.0, 0.0};

  PolarizationQubit() = default;
  PolarizationQubit(cplx a, cplx b) : alpha(a), beta(b) {
    if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-12)
      throw std::invalid_argument("polarization qubit must be normalized");
  }
};

// Loading probability of a V-type memory: each polarization drives its own
// leg (|g> <-> |e+>, |g> <-> |e->). The legs must be identical; the result
// is then independent of the polarization state.
inline double v_level_load(const PolarizationQubit& q, const TwoLevelParams& leg_plus,
                           const TwoLevelParams& leg_minus, const PulseShape& pulse, double t,
                           const QuadratureSpec& spec = {}) {
  if (leg_plus.g != leg_minus.g || leg_plus.kappa != leg_minus.kappa ||
      leg_plus.gamma != leg_minus.gamma || leg_plus.delta != leg_minus.delta)
    throw std::invalid_argument("V-level legs must be symmetric");
  const cplx cp = amplitude_closed_form(leg_plus, pulse, t, spec).c_e;
  const cplx cm = amplitude_closed_form(leg_minus, pulse, t, spec).c_e;
  const double p = std::norm(q.alpha) * std::norm(cp) + std::norm(q.beta) * std::norm(cm);
  const double single = std::norm(cp);
  if (std::abs(p - (std::norm(q.alpha) + std::norm(q.beta)) * single) > 1e-12)
    throw NumericError("V-level loading lost polarization invariance");
  return p;
}

struct SpdcParams {
  double T = 1.0;   // pump width
  double T0 = 1.0;  // phase-matching window
  std::optional<double> pump_center;

  double center() const { return pump_center.value_or(2.0 * T + T0); }
  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("SPDC pump width T must be positive");
    if (!(T0 > 0.0) || !std::isfinite(T0))
      throw std::invalid_argument("SPDC phase-matching window T0 must be positive");
  }
};

// Two-photon joint temporal amplitude phi(t, u) on a square support. For
// SPDC it is (A'/2) P((t + u)/2) 1[|t - u| <= T0] with a sech pump P; the
// pump support is clipped so that both photon times stay non-negative.
class BiphotonAmplitude {
 public:
  static BiphotonAmplitude spdc(const SpdcParams& s, const QuadratureSpec& spec = {}) {
    s.validate();
    BiphotonAmplitude b;
    b.spdc_ = s;
    const double c = s.center();
    const double lo = std::max(c - kSechHalfSpan * s.T, 0.5 * s.T0);
    const double hi = c + kSechHalfSpan * s.T;
    if (!(hi > lo)) throw std::invalid_argument("SPDC pump lies entirely before t = 0");
    const double T = s.T;
    auto th = [&](double x) { return std::tanh(4.0 * (x - c) / T); };
    const double mass = 0.5 * (th(hi) - th(lo));
    const double amp = std::sqrt(2.0 / T / mass);
    b.pump_ = make_custom_pulse([amp, c, T](double x) -> cplx { return amp / std::cosh(4.0 * (x - c) / T); },
                                {lo, hi});
    b.sup_ = {lo - 0.5 * s.T0, hi + 0.5 * s.T0};
    b.analytic_norm_ = std::sqrt(2.0 / s.T0);
    b.norm_ = 1.0;
    b.norm_ = 1.0 / std::sqrt(b.squared_norm(spec));
    return b;
  }

  // Arbitrary joint amplitude on [s.lo, s.hi]^2, normalized numerically.
  // kinks(t) lists u-values where phi(t, .) may jump.
  static BiphotonAmplitude from_function(std::function<cplx(double, double)> f, Support s,
                                         std::function<std::vector<double>(double)> kinks = {},
                                         const QuadratureSpec& spec = {}) {
    if (!f) throw std::invalid_argument("biphoton needs a function");
    if (s.empty()) throw std::invalid_argument("biphoton needs a non-empty support");
    BiphotonAmplitude b;
    b.fn_ = std::make_shared<const std::function<cplx(double, double)>>(std::move(f));
    if (kinks) b.kinks_ = std::make_shared<const std::function<std::vector<double>(double)>>(std::move(kinks));
    b.sup_ = s;
    b.norm_ = 1.0;
    const double n2 = b.squared_norm(spec);
    if (!(n2 > 0.0)) throw std::domain_error("biphoton amplitude has zero norm");
    b.norm_ = 1.0 / std::sqrt(n2);
    return b;
  }

  cplx operator()(double t, double u) const {
    if (t < sup_.lo || t > sup_.hi || u < sup_.lo || u > sup_.hi) return 0.0;
    if (spdc_) {
      if (std::abs(t - u) > spdc_->T0) return 0.0;
      return 0.5 * norm_ * pump_(0.5 * (t + u));
    }
    return norm_ * (*fn_)(t, u);
  }

  Support support() const { return sup_; }
  // Normalization constant A' found by quadrature (SPDC form) or the overall
  // scale applied to a user function.
  double norm_constant() const { return norm_; }
  // A' = sqrt(2 / T0) for an untruncated pump.
  std::optional<double> analytic_norm_constant() const {
    return spdc_ ? std::optional<double>(analytic_norm_) : std::nullopt;
  }
  const std::optional<SpdcParams>& spdc_params() const { return spdc_; }
  // Unit-norm pump amplitude (SPDC form only).
  const PulseShape& pump() const { return pump_; }

  // u-values where phi(t, .) may jump.
  std::vector<double> kinks(double t) const {
    if (spdc_) {
      const auto s = pump_.support();
      return {t - spdc_->T0, t + spdc_->T0, 2.0 * s.lo - t, 2.0 * s.hi - t};
    }
    return kinks_ ? (*kinks_)(t) : std::vector<double>{};
  }

 private:
  BiphotonAmplitude() = default;

  double squared_norm(const QuadratureSpec& spec) const {
    return quad2([this](double t, double u) { return std::norm((*this)(t, u)); }, sup_.lo, sup_.hi,
                 [this](double) { return sup_.lo; }, [this](double) { return sup_.hi; },
                 [this](double t) { return kinks(t); }, spec);
  }

  std::optional<SpdcParams> spdc_;
  PulseShape pump_;
  std::shared_ptr<const std::function<cplx(double, double)>> fn_;
  std::shared_ptr<const std::function<std::vector<double>(double)>> kinks_;
  Support sup_{};
  double norm_ = 1.0;
  double analytic_norm_ = 0.0;
};

namespace detail {

// Joint amplitude in cavity-decay units: phi_k(t, u) = phi(t/k, u/k) / k.
inline std::function<cplx(double, double)> scaled_joint(const BiphotonAmplitude& b, double kappa) {
  return [&b, kappa](double t, double u) { return b(t / kappa, u / kappa) / kappa; };
}

// Direct double convolution of the symmetrized joint amplitude with two
// copies of the single-memory impulse response h(s) = G sqrt(2) kc(s).
inline cplx c_ee_direct(const Effective2& m, const BiphotonAmplitude& b, double kappa, double u,
                        const QuadratureSpec& spec) {
  const Support s{b.support().lo * kappa, b.support().hi * kappa};
  const double hi = std::min(u, s.hi);
  if (!(hi > s.lo)) return 0.0;
  const auto phi = scaled_joint(b, kappa);
  const cplx xi = m.xi();
  auto in = [&](double t) { return m.carrier == 0.0 ? cplx(1.0) : std::exp(kI * (m.carrier * t)); };
  auto f = [&](double t, double w) {
    const cplx sym = 0.5 * (phi(t, w) + phi(w, t));
    if (sym == 0.0) return cplx(0.0);
    return sym * in(t) * in(w) * kernel_ce(m, xi, u - t) * kernel_ce(m, xi, u - w);
  };
  auto kinks = [&](double t) {
    std::vector<double> k;
    for (double x : b.kinks(t / kappa)) k.push_back(x * kappa);
    return k;
  };
  const cplx acc = quad2(f, s.lo, hi, [&](double) { return s.lo; }, [&](double) { return hi; }, kinks, spec);
  return 2.0 * m.G * m.G * acc;
}

// Structured evaluation for the SPDC form. With x half the photon time
// difference,
//   c_ee(t) = 2 A' int_0^{T0/2} dx  sum_j w_j(x) [W_j(t - x)]_{ee}
//   W_j(v)  = int_{sigma <= v} P(sigma) (E(v - sigma) b)(E(v - sigma) e_j)^T
//   w(x)    = E(2x) b
// W_j is propagated on a uniform grid and the x-integral uses Simpson's rule
// on the same grid.
class SpdcConvolution {
 public:
  SpdcConvolution(const Effective2& m, const BiphotonAmplitude& b, double kappa, double horizon)
      : m_(m), prop_(m.generator()) {
    const auto& sp = b.spdc_params();
    if (!sp) throw std::invalid_argument("structured convolution needs an SPDC biphoton");
    pump_ = b.pump().time_scaled(1.0 / kappa);
    T0_ = sp->T0 * kappa;
    amp_ = b.norm_constant() / std::sqrt(kappa);
    lo_ = pump_.support().lo;
    hi_pump_ = pump_.support().hi;
    const double rate = std::max({1.0 + std::abs(m.decay), std::abs(m.G), std::abs(prop_.nu()),
                                  std::abs(m.gamma_p), std::abs(m.carrier)});
    const double target = std::min({0.02, sp->T * kappa / 100.0, 0.25 / rate});
    m_half_ = std::max(2, 2 * static_cast<int>(std::ceil(0.5 * T0_ / target / 2.0)));
    h_ = 0.5 * T0_ / m_half_;
    n_ = std::max(1, static_cast<int>(std::ceil((horizon - lo_) / h_)));
    tabulate();
  }

  double step() const { return h_; }
  double origin() const { return lo_; }
  int points() const { return n_; }
  double grid_time(int k) const { return lo_ + k * h_; }

  // c_ee at grid point k.
  cplx at_grid(int k) const {
    cplx acc = 0.0;
    for (int i = 0; i <= m_half_ && i <= k; ++i) {
      const double wt = simpson(i);
      acc += wt * (w_[i].x * W_[0][k - i].d + w_[i].y * W_[1][k - i].d);
    }
    return 2.0 * amp_ * h_ * acc;
  }

  // c_ee at an arbitrary time in [origin, last grid point].
  cplx at(double u) const {
    if (u <= lo_) return 0.0;
    int k = static_cast<int>(std::floor((u - lo_) / h_));
    k = std::clamp(k, 0, n_);
    const double d = u - grid_time(k);
    if (d <= 0.0) return at_grid(k);
    const Nodes nd = nodes(d);
    cplx acc = 0.0;
    for (int i = 0; i <= m_half_ && i <= k; ++i) {
      const double wt = simpson(i);
      const int j = k - i;
      std::array<Mat2, 2> Wd;
      advance(W_[0][j], W_[1][j], grid_time(j), nd, Wd);
      acc += wt * (w_[i].x * Wd[0].d + w_[i].y * Wd[1].d);
    }
    // Points t - x below the origin contribute nothing; W is zero there.
    return 2.0 * amp_ * h_ * acc;
  }

 private:
  struct Nodes {
    Mat2 E;
    std::array<double, 8> x{};
    std::array<double, 8> w{};
    std::array<Mat2, 8> M{};
  };

  double simpson(int i) const {
    if (i == 0 || i == m_half_) return 1.0 / 3.0;
    return i % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0;
  }

  cplx pump(double s) const {
    const cplx v = pump_(s);
    return m_.carrier == 0.0 ? v : v * std::exp(kI * (2.0 * m_.carrier * s));
  }

  Nodes nodes(double h) const {
    static constexpr std::array<double, 4> gx = {
        0.1834346424956498049394761, 0.5255324099163289858177390,
        0.7966664774136267395915539, 0.9602898564975362316835609};
    static constexpr std::array<double, 4> gw = {
        0.3626837833783619829651504, 0.3137066458778872873379622,
        0.2223810344533744705443560, 0.1012285362903762591525314};
    Nodes n;
    n.E = prop_(h);
    for (int i = 0; i < 4; ++i)
      for (int sgn = 0; sgn < 2; ++sgn) {
        const int k = 2 * i + sgn;
        n.x[k] = 0.5 * h * (1.0 + (sgn ? gx[i] : -gx[i]));
        n.w[k] = 0.5 * h * gw[i];
        n.M[k] = prop_(h - n.x[k]);
      }
    return n;
  }

  // W_j(v + h) from W_j(v) using the node set built for step h.
  void advance(const Mat2& W0, const Mat2& W1, double v, const Nodes& nd, std::array<Mat2, 2>& out) const {
    const Mat2 Et = nd.E.transpose();
    out[0] = nd.E * W0 * Et;
    out[1] = nd.E * W1 * Et;
    for (int k = 0; k < 8; ++k) {
      const double s = v + nd.x[k];
      if (s < lo_ || s > hi_pump_) continue;
      const cplx p = pump(s) * nd.w[k];
      if (p == 0.0) continue;
      const Mat2& M = nd.M[k];
      const Vec2 vb{M.a * kDriveGain, M.c * kDriveGain};
      // (M b)(M e_j)^T for e_0 and e_1.
      out[0] = out[0] + Mat2{vb.x * M.a, vb.x * M.c, vb.y * M.a, vb.y * M.c} * p;
      out[1] = out[1] + Mat2{vb.x * M.b, vb.x * M.d, vb.y * M.b, vb.y * M.d} * p;
    }
  }

  void tabulate() {
    const Nodes nd = nodes(h_);
    W_[0].assign(n_ + 1, Mat2{});
    W_[1].assign(n_ + 1, Mat2{});
    for (int k = 0; k < n_; ++k) {
      std::array<Mat2, 2> nx;
      advance(W_[0][k], W_[1][k], grid_time(k), nd, nx);
      W_[0][k + 1] = nx[0];
      W_[1][k + 1] = nx[1];
    }
    w_.resize(m_half_ + 1);
    for (int i = 0; i <= m_half_; ++i) {
      const Mat2 E2 = prop_(2.0 * i * h_);
      w_[i] = Vec2{E2.a * kDriveGain, E2.c * kDriveGain};
    }
  }

  Effective2 m_;
  Propagator2 prop_;
  PulseShape pump_;
  double T0_ = 0.0, amp_ = 0.0, lo_ = 0.0, hi_pump_ = 0.0, h_ = 0.0;
  int m_half_ = 2, n_ = 1;
  std::array<std::vector<Mat2>, 2> W_;
  std::vector<Vec2> w_;
};

inline PeakLoading cee_peak(const Effective2& m, const BiphotonAmplitude& b, double kappa, double lo,
                            double horizon) {
  const double hz = horizon * kappa;
  SpdcConvolution conv(m, b, kappa, hz + 1.0);
  // Scan on the tabulation grid so every sample is a cheap grid read-out.
  const double start = std::max(lo * kappa, conv.origin());
  const int k0 = static_cast<int>(std::ceil((start - conv.origin()) / conv.step() - 1e-9));
  const int k1 = static_cast<int>(std::floor((hz - conv.origin()) / conv.step() + 1e-9));
  if (k1 <= k0) return {horizon, 0.0};
  struct GridProb {
    const SpdcConvolution& c;
    int k0;
    void scan(double, double, int n, std::vector<double>& out) {
      for (int i = 0; i <= n; ++i) out[i] = std::norm(c.at_grid(k0 + i));
    }
    double operator()(double t) const { return std::norm(c.at(t)); }
  } gp{conv, k0};
  auto pk = golden_peak(gp, conv.grid_time(k0), conv.grid_time(k1), conv.step() * (1.0 - 1e-12), 1e-9);
  return {pk.t_load / kappa, pk.probability};
}

}  // namespace detail

// c_ee(t): amplitude that both memories are loaded at time t, by direct
// double quadrature over the symmetrized joint amplitude.
inline cplx c_ee(const TwoLevelParams& p, const BiphotonAmplitude& b, double t, const QuadratureSpec& spec = {}) {
  return detail::c_ee_direct(detail::normalized(p), b, p.kappa, t * p.kappa, spec);
}

// c_ee(t) for an SPDC biphoton through the structured one-dimensional route.
inline cplx c_ee_structured(const TwoLevelParams& p, const BiphotonAmplitude& b, double t) {
  const detail::SpdcConvolution conv(detail::normalized(p), b, p.kappa, t * p.kappa + 1.0);
  return conv.at(t * p.kappa);
}

// Joint loading amplitude on a time grid (SPDC form).
inline Trajectory cee_trajectory(const TwoLevelParams& p, const BiphotonAmplitude& b, std::span<const double> grid) {
  Trajectory tr;
  tr.times.assign(grid.begin(), grid.end());
  tr.labels = {"c_ee"};
  tr.components.assign(1, {});
  if (grid.empty()) return tr;
  const double last = *std::max_element(grid.begin(), grid.end());
  const detail::SpdcConvolution conv(detail::normalized(p), b, p.kappa, last * p.kappa + 1.0);
  for (double t : grid) tr.components[0].push_back(conv.at(t * p.kappa));
  tr.params = {{"g", p.g}, {"kappa", p.kappa}, {"gamma", p.gamma}, {"delta", p.delta}};
  return tr;
}

// Default window for the joint loading peak: [0, 5T + T0].
inline double mitnu_horizon(const SpdcParams& s) { return 5.0 * s.T + s.T0; }

// Peak of |c_ee|^2 over [0, horizon] for two identical two-level memories.
inline PeakLoading mitnu_peak(const TwoLevelParams& p, const BiphotonAmplitude& b,
                              std::optional<double> horizon = {}) {
  const auto& sp = b.spdc_params();
  if (!sp) throw std::invalid_argument("mitnu_peak needs an SPDC biphoton");
  return detail::cee_peak(detail::normalized(p), b, p.kappa, 0.0, horizon.value_or(mitnu_horizon(*sp)));
}

// |c_ee(T_Load)|^2 for two identical non-adiabatic Lambda memories (constant
// control, Stark compensated) fed by an SPDC pair.
inline double mitnu_load(const LambdaParams& p, const SpdcParams& s, double t_load) {
  const LambdaParams q = p.normalized();
  const auto b = BiphotonAmplitude::spdc(s);
  const detail::SpdcConvolution conv(detail::nonadiabatic_model(q), b, p.kappa, t_load * p.kappa + 1.0);
  return std::norm(conv.at(t_load * p.kappa));
}

// Peak joint loading for two identical non-adiabatic Lambda memories.
inline PeakLoading mitnu_peak(const LambdaParams& p, const SpdcParams& s, std::optional<double> horizon = {}) {
  const LambdaParams q = p.normalized();
  const auto b = BiphotonAmplitude::spdc(s);
  return detail::cee_peak(detail::nonadiabatic_model(q), b, p.kappa, 0.0, horizon.value_or(mitnu_horizon(s)));
}

}  // namespace cavload
