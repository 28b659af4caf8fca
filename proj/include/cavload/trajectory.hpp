#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cavload {

using cplx = std::complex<double>;

// Sampled amplitudes on a time grid, one named component per state
// (e.g. "beta", "c_r", "c_e").
struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::vector<cplx>> components;
  std::vector<std::pair<std::string, double>> params;

  std::size_t size() const { return times.size(); }

  const std::vector<cplx>& component(std::string_view name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == name) return components[i];
    throw std::out_of_range("trajectory has no component '" + std::string(name) + "'");
  }

  std::vector<double> population(std::string_view name) const {
    const auto& c = component(name);
    std::vector<double> p(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) p[i] = std::norm(c[i]);
    return p;
  }

  double param(std::string_view name) const {
    for (const auto& [k, v] : params)
      if (k == name) return v;
    throw std::out_of_range("trajectory has no parameter '" + std::string(name) + "'");
  }
};

}  // namespace cavload
