#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cavload/error.hpp"

namespace cavload {

using cplx = std::complex<double>;

enum class PulseKind { sech, rectangular, exp_rising, exp_decaying, tabulated, zero, custom };

inline std::string_view to_string(PulseKind k) {
  switch (k) {
    case PulseKind::sech: return "sech";
    case PulseKind::rectangular: return "rectangular";
    case PulseKind::exp_rising: return "exp_rising";
    case PulseKind::exp_decaying: return "exp_decaying";
    case PulseKind::tabulated: return "tabulated";
    case PulseKind::zero: return "zero";
    case PulseKind::custom: return "custom";
  }
  return "unknown";
}

inline PulseKind parse_pulse_kind(std::string_view name) {
  for (PulseKind k : {PulseKind::sech, PulseKind::rectangular, PulseKind::exp_rising,
                      PulseKind::exp_decaying, PulseKind::tabulated, PulseKind::zero})
    if (name == to_string(k)) return k;
  throw ConfigError("pulse", "unknown pulse kind '" + std::string(name) + "'");
}

struct Support {
  double lo = 0.0;
  double hi = 0.0;
  bool empty() const { return !(hi > lo); }
};

// Number of widths kept on each side of a sech pulse, and the truncation
// length of the one-sided exponentials.
inline constexpr double kSechHalfSpan = 5.0;
inline constexpr double kExpSpan = 15.0;

// Baseband photon amplitude with unit norm on its finite support.
// Immutable; cheap to copy.
class PulseShape {
 public:
  PulseShape() : PulseShape(PulseKind::zero, 0.0, 0.0) {}

  cplx operator()(double t) const {
    if (!(t >= sup_.lo && t <= sup_.hi) || kind_ == PulseKind::zero) return 0.0;
    switch (kind_) {
      case PulseKind::sech:
        return amp_ / std::cosh(4.0 * (t - t0_) / T_);
      case PulseKind::rectangular:
        return amp_;
      case PulseKind::exp_decaying:
        return amp_ * std::exp(-(t - t0_) / T_);
      case PulseKind::exp_rising:
        return amp_ * std::exp((t - t0_) / T_);
      case PulseKind::tabulated:
        return amp_ * interpolate(t);
      case PulseKind::custom:
        return amp_ * (*fn_)(t);
      case PulseKind::zero:
        break;
    }
    return 0.0;
  }

  PulseKind kind() const { return kind_; }
  bool is_zero() const { return kind_ == PulseKind::zero; }
  // Characteristic width T (effective width for tabulated and custom data).
  double width() const {
    if (is_zero()) throw std::domain_error("zero pulse has no width");
    return T_;
  }
  double center() const { return t0_; }
  // Intensity-weighted mean time.
  double centroid() const { return centroid_; }
  Support support() const { return sup_; }
  // Points where the amplitude or its slope may jump.
  const std::vector<double>& breakpoints() const { return breaks_; }

  // Same pulse on a clock running c times faster: t -> t / c, amplitude
  // scaled by sqrt(c) to keep unit norm.
  PulseShape time_scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("time scale must be positive");
    PulseShape p = *this;
    p.T_ /= c;
    p.t0_ /= c;
    p.centroid_ /= c;
    p.sup_ = {sup_.lo / c, sup_.hi / c};
    for (double& b : p.breaks_) b /= c;
    p.amp_ = amp_ * std::sqrt(c);
    if (kind_ == PulseKind::tabulated) {
      auto ts = std::make_shared<std::vector<double>>(*ts_);
      for (double& t : *ts) t /= c;
      p.ts_ = ts;
    } else if (kind_ == PulseKind::custom) {
      auto f = fn_;
      p.fn_ = std::make_shared<const std::function<cplx(double)>>(
          [f, c](double t) { return (*f)(t * c); });
    }
    return p;
  }

  PulseShape shifted(double dt) const {
    PulseShape p = *this;
    p.t0_ += dt;
    p.centroid_ += dt;
    p.sup_ = {sup_.lo + dt, sup_.hi + dt};
    for (double& b : p.breaks_) b += dt;
    if (kind_ == PulseKind::tabulated) {
      auto ts = std::make_shared<std::vector<double>>(*ts_);
      for (double& t : *ts) t += dt;
      p.ts_ = ts;
    } else if (kind_ == PulseKind::custom) {
      auto f = fn_;
      p.fn_ = std::make_shared<const std::function<cplx(double)>>(
          [f, dt](double t) { return (*f)(t - dt); });
    }
    return p;
  }

  friend PulseShape make_pulse(PulseKind kind, double T, double t0);
  friend PulseShape make_zero_pulse();
  friend PulseShape make_tabulated_pulse(std::vector<double> t, std::vector<cplx> v);
  friend PulseShape make_custom_pulse(std::function<cplx(double)> f, Support s,
                                      std::vector<double> breaks);

 private:
  PulseShape(PulseKind k, double T, double t0) : kind_(k), T_(T), t0_(t0), centroid_(t0) {}

  cplx interpolate(double t) const {
    const auto& ts = *ts_;
    const auto& vs = *vs_;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return vs.front();
    if (it == ts.end()) return vs.back();
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return vs[i - 1] * (1.0 - w) + vs[i] * w;
  }

  PulseKind kind_;
  double T_;
  double t0_;
  double centroid_;
  double amp_ = 0.0;
  Support sup_{};
  std::vector<double> breaks_;
  std::shared_ptr<const std::vector<double>> ts_;
  std::shared_ptr<const std::vector<cplx>> vs_;
  std::shared_ptr<const std::function<cplx(double)>> fn_;
};

inline PulseShape make_zero_pulse() { return PulseShape(PulseKind::zero, 0.0, 0.0); }

// Named analytic pulse of width T. t0 is the peak for sech and rectangular,
// the leading edge of exp_decaying and the trailing edge of exp_rising.
inline PulseShape make_pulse(PulseKind kind, double T, double t0) {
  if (kind == PulseKind::zero) return make_zero_pulse();
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("pulse width must be positive and finite");
  if (!std::isfinite(t0)) throw std::invalid_argument("pulse center must be finite");
  PulseShape p(kind, T, t0);
  const double tail = std::exp(-2.0 * kExpSpan);
  const double exp_mean = 0.5 * T - kExpSpan * T * tail / (1.0 - tail);
  switch (kind) {
    case PulseKind::sech:
      p.sup_ = {t0 - kSechHalfSpan * T, t0 + kSechHalfSpan * T};
      p.amp_ = std::sqrt(2.0 / T / std::tanh(4.0 * kSechHalfSpan));
      break;
    case PulseKind::rectangular:
      p.sup_ = {t0 - 0.5 * T, t0 + 0.5 * T};
      p.amp_ = 1.0 / std::sqrt(T);
      break;
    case PulseKind::exp_decaying:
      p.sup_ = {t0, t0 + kExpSpan * T};
      p.amp_ = std::sqrt(2.0 / T / (1.0 - tail));
      p.centroid_ = t0 + exp_mean;
      break;
    case PulseKind::exp_rising:
      p.sup_ = {t0 - kExpSpan * T, t0};
      p.amp_ = std::sqrt(2.0 / T / (1.0 - tail));
      p.centroid_ = t0 - exp_mean;
      break;
    default:
      throw std::invalid_argument("make_pulse needs an analytic pulse kind");
  }
  p.breaks_ = {p.sup_.lo, p.sup_.hi};
  return p;
}

// Places a named pulse so that its centroid sits at t_c.
inline PulseShape make_pulse_centered(PulseKind kind, double T, double t_c) {
  PulseShape p = make_pulse(kind, T, 0.0);
  if (p.is_zero()) return p;
  return p.shifted(t_c - p.centroid());
}

namespace detail {

// Exact integrals of |v|^2 and |v|^4 for a piecewise-linear complex sample set.
inline std::pair<double, double> piecewise_linear_moments(const std::vector<double>& t,
                                                          const std::vector<cplx>& v) {
  double m2 = 0.0, m4 = 0.0;
  // 3-point Gauss-Legendre integrates the quartic |v|^4 on each segment exactly.
  const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    const cplx a = v[i], b = v[i + 1];
    m2 += h * (std::norm(a) + std::real(a * std::conj(b)) + std::norm(b)) / 3.0;
    for (int k = 0; k < 3; ++k) {
      const double w = 0.5 * (1.0 + gx[k]);
      m4 += 0.5 * h * gw[k] * std::pow(std::norm(a * (1.0 - w) + b * w), 2);
    }
  }
  return {m2, m4};
}

}  // namespace detail

// Ratio of (int |phi|^2)^2 / int |phi|^4, scaled by 4/3 so that a sech pulse
// of width T reports exactly T.
inline double inverse_participation_width(double m2, double m4) {
  return (4.0 / 3.0) * m2 * m2 / m4;
}

// Piecewise-linear pulse through the samples, rescaled to unit norm.
inline PulseShape make_tabulated_pulse(std::vector<double> t, std::vector<cplx> v) {
  if (t.size() != v.size()) throw std::invalid_argument("tabulated pulse: size mismatch");
  if (t.size() < 2) throw std::invalid_argument("tabulated pulse needs at least two samples");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
      throw std::invalid_argument("tabulated pulse has non-finite samples");
    if (i > 0 && !(t[i] > t[i - 1]))
      throw std::invalid_argument("tabulated pulse times must be strictly increasing");
  }
  auto [m2, m4] = detail::piecewise_linear_moments(t, v);
  if (!(m2 > 0.0)) throw std::domain_error("tabulated pulse has zero norm; width undefined");
  double mean = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    // Midpoint-weighted first moment; adequate for a reference time.
    mean += 0.5 * (t[i] + t[i + 1]) * h * 0.5 * (std::norm(v[i]) + std::norm(v[i + 1]));
  }
  double m2_trap = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    m2_trap += (t[i + 1] - t[i]) * 0.5 * (std::norm(v[i]) + std::norm(v[i + 1]));
  PulseShape p(PulseKind::tabulated, inverse_participation_width(m2, m4), 0.0);
  p.t0_ = p.centroid_ = m2_trap > 0.0 ? mean / m2_trap : 0.5 * (t.front() + t.back());
  p.sup_ = {t.front(), t.back()};
  p.breaks_ = t;
  p.amp_ = 1.0 / std::sqrt(m2);
  p.ts_ = std::make_shared<const std::vector<double>>(std::move(t));
  p.vs_ = std::make_shared<const std::vector<cplx>>(std::move(v));
  return p;
}

// Wraps an arbitrary amplitude without renormalizing it. Used for drive
// superpositions and frame-shifted inputs; the width is the support length.
inline PulseShape make_custom_pulse(std::function<cplx(double)> f, Support s,
                                    std::vector<double> breaks = {}) {
  if (!f) throw std::invalid_argument("custom pulse needs a function");
  if (s.empty()) throw std::invalid_argument("custom pulse needs a non-empty support");
  PulseShape p(PulseKind::custom, s.hi - s.lo, 0.5 * (s.lo + s.hi));
  p.sup_ = s;
  breaks.push_back(s.lo);
  breaks.push_back(s.hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  p.breaks_ = std::move(breaks);
  p.amp_ = 1.0;
  p.fn_ = std::make_shared<const std::function<cplx(double)>>(std::move(f));
  return p;
}

// Reads "t,re[,im]" rows after a required header line.
inline PulseShape load_pulse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("pulse_file", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("pulse_file", "empty file '" + path + "'");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  const bool has_im = header.size() == 3 && header[2] == "im";
  if (!(header.size() >= 2 && header[0] == "t" && header[1] == "re") ||
      (header.size() == 3 && !has_im) || header.size() > 3)
    throw ConfigError("pulse_file", "header must be 't,re' or 't,re,im'");
  std::vector<double> ts;
  std::vector<cplx> vs;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ConfigError("pulse_file", "row " + std::to_string(row) + " has wrong column count");
    try {
      std::size_t used = 0;
      std::vector<double> x;
      for (const auto& c : cells) {
        x.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      }
      ts.push_back(x[0]);
      vs.emplace_back(x[1], has_im ? x[2] : 0.0);
    } catch (const std::exception&) {
      throw ConfigError("pulse_file", "row " + std::to_string(row) + " is not numeric");
    }
  }
  try {
    return make_tabulated_pulse(std::move(ts), std::move(vs));
  } catch (const std::exception& e) {
    throw ConfigError("pulse_file", e.what());
  }
}

}  // namespace cavload
