#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "cavload/csv.hpp"
#include "cavload/entangled_loading.hpp"
#include "cavload/error.hpp"
#include "cavload/lambda_memory.hpp"
#include "cavload/optimize.hpp"
#include "cavload/parallel.hpp"
#include "cavload/pulses.hpp"
#include "cavload/two_level.hpp"

namespace cavload::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Every configurable key. Rates are in units of kappa, times in units of
// 1/kappa unless the name says otherwise.
inline const std::vector<std::string>& numeric_keys() {
  static const std::vector<std::string> k = {
      "kT",           "kT0",         "g_over_k",      "gp_over_k",     "gc_over_k",      "omega_over_k",
      "delta1_over_k", "delta2_over_k", "gamma_over_k", "gamma_over_g", "gamma_r_over_k", "delta_over_k",
      "gc_over_omega", "t_load_over_T", "t_end_over_T", "points_per_T", "g_min",          "g_max",
      "tol"};
  return k;
}

inline const std::vector<std::string>& text_keys() {
  static const std::vector<std::string> k = {"scenario",     "pulse",  "pulse_file", "control_file",
                                             "output",       "preset", "output_dir", "config"};
  return k;
}

inline std::string key_help(const std::string& key) {
  static const std::map<std::string, std::string> h = {
      {"kT", "photon width times cavity decay rate"},
      {"kT0", "phase-matching window times cavity decay rate (mitnu)"},
      {"g_over_k", "atom-cavity coupling g/kappa (effective coupling for Lambda memories)"},
      {"gp_over_k", "adiabatic coupling g' = g_c^2/delta1, over kappa"},
      {"gc_over_k", "cavity coupling of the Lambda atom"},
      {"omega_over_k", "constant control Rabi frequency"},
      {"delta1_over_k", "one-photon detuning"},
      {"delta2_over_k", "two-photon detuning"},
      {"gamma_over_k", "atomic decay rate"},
      {"gamma_over_g", "atomic decay rate relative to g"},
      {"gamma_r_over_k", "decay rate of the excited Lambda level"},
      {"delta_over_k", "atom-photon detuning"},
      {"gc_over_omega", "ratio g_c/Omega for the non-adiabatic scheme"},
      {"t_load_over_T", "control switch-off time in units of T"},
      {"t_end_over_T", "end of the output grid in units of T"},
      {"points_per_T", "output samples per pulse width"},
      {"g_min", "lower end of the coupling search"},
      {"g_max", "upper end of the coupling search"},
      {"tol", "bracket tolerance of the coupling search"},
      {"scenario", "two_level, lambda_nonadiabatic, lambda_full, lambda_adiabatic_tpr, lambda_adiabatic_zed or mitnu"},
      {"pulse", "sech, rectangular, exp_rising, exp_decaying or zero"},
      {"pulse_file", "CSV pulse with columns t,re[,im]"},
      {"control_file", "CSV control with header t,Omega,phi_z (lambda_full)"},
      {"output", "write the CSV here instead of stdout"},
      {"preset", "figure preset name (fig3 ... fig10)"},
      {"output_dir", "directory for preset output"},
      {"config", "file of key=value lines; flags override it"},
  };
  const auto it = h.find(key);
  return it == h.end() ? std::string() : it->second;
}

// Parsed command line: the subcommand plus the keys the user actually set
// (from flags or the config file).
struct RunConfig {
  std::string command;
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> texts;

  bool has(const std::string& key) const { return numbers.count(key) || texts.count(key); }

  double number(const std::string& key, std::string_view why = "required") const {
    auto it = numbers.find(key);
    if (it == numbers.end()) throw ConfigError(key, std::string(why));
    if (!std::isfinite(it->second)) throw ConfigError(key, "must be finite");
    return it->second;
  }
  double number_or(const std::string& key, double fallback) const {
    return numbers.count(key) ? number(key) : fallback;
  }
  double positive(const std::string& key, std::string_view why = "required") const {
    const double v = number(key, why);
    if (!(v > 0.0)) throw ConfigError(key, "must be positive");
    return v;
  }
  double non_negative_or(const std::string& key, double fallback) const {
    const double v = number_or(key, fallback);
    if (!(v >= 0.0)) throw ConfigError(key, "must be non-negative");
    return v;
  }
  std::string text_or(const std::string& key, std::string fallback) const {
    auto it = texts.find(key);
    return it == texts.end() ? fallback : it->second;
  }

  // Rejects keys that the command/scenario does not use.
  void restrict_to(const std::set<std::string>& allowed, std::string_view context) const {
    for (const auto& [k, v] : numbers)
      if (!allowed.count(k)) throw ConfigError(k, "not used by " + std::string(context));
    for (const auto& [k, v] : texts)
      if (!allowed.count(k)) throw ConfigError(k, "not used by " + std::string(context));
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key=value lines; '#' starts a comment. Keys are the long option names
// without dashes.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", "line " + std::to_string(row) + " is not key=value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    const auto& nk = numeric_keys();
    const auto& tk = text_keys();
    if (key == "config" || (std::find(nk.begin(), nk.end(), key) == nk.end() &&
                            std::find(tk.begin(), tk.end(), key) == tk.end()))
      throw ConfigError("config", "unknown key '" + key + "' on line " + std::to_string(row));
    kv.emplace_back(std::move(key), std::move(val));
  }
  return kv;
}

// Returns the --config path if present in args (either "--config p" or
// "--config=p").
inline std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

// Uniform time grid on [0, t_end_over_T * T] with the t/T column computed
// directly so it prints cleanly.
struct TimeGrid {
  std::vector<double> t_over_T;
  std::vector<double> t;
};

inline TimeGrid make_grid(double T, double t_end_over_T, double points_per_T) {
  if (!(t_end_over_T > 0.0)) throw ConfigError("t_end_over_T", "must be positive");
  if (!(points_per_T > 0.0) || points_per_T > 1e5) throw ConfigError("points_per_T", "must lie in (0, 1e5]");
  const long n = std::max(1L, std::lround(points_per_T * t_end_over_T));
  if (n > 10'000'000L) throw ConfigError("points_per_T", "grid too large");
  TimeGrid g;
  for (long i = 0; i <= n; ++i) {
    const double x = t_end_over_T * static_cast<double>(i) / static_cast<double>(n);
    g.t_over_T.push_back(x);
    g.t.push_back(x * T);
  }
  return g;
}

inline PulseKind named_pulse(const std::string& name) {
  const PulseKind k = parse_pulse_kind(name);
  if (k == PulseKind::tabulated || k == PulseKind::custom)
    throw ConfigError("pulse", "'" + name + "' needs --pulse_file");
  return k;
}

inline PulseShape pulse_from(const RunConfig& c, double T) {
  if (c.has("pulse_file")) {
    if (c.has("pulse")) throw ConfigError("pulse_file", "conflicts with --pulse");
    return load_pulse_csv(c.texts.at("pulse_file"));
  }
  return make_pulse_centered(named_pulse(c.text_or("pulse", "sech")), T, T);
}

inline CsvTable population_table(const TimeGrid& g, const Trajectory& tr,
                                 const std::vector<std::pair<std::string, std::string>>& columns) {
  CsvTable t;
  t.header.push_back("t_over_T");
  for (const auto& [col, comp] : columns) t.header.push_back(col);
  std::vector<std::vector<double>> pops;
  for (const auto& [col, comp] : columns) pops.push_back(tr.population(comp));
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    std::vector<double> r{g.t_over_T[i]};
    for (const auto& p : pops) r.push_back(p[i]);
    t.add_row(std::move(r));
  }
  return t;
}

inline void emit(const RunConfig& c, const CsvTable& t, std::ostream& out) {
  const std::string text = t.render();
  if (c.has("output")) write_file_atomic(c.texts.at("output"), text);
  else out << text;
}

inline const std::set<std::string> kCommonSimulate = {"scenario", "kT", "points_per_T", "t_end_over_T", "output",
                                                      "config"};

inline std::set<std::string> with_common(const std::set<std::string>& base, std::set<std::string> extra) {
  extra.insert(base.begin(), base.end());
  return extra;
}

inline AdiabaticScheme adiabatic_scheme(const std::string& s) {
  return s == "lambda_adiabatic_tpr" ? AdiabaticScheme::two_photon_resonance
                                     : AdiabaticScheme::zero_effective_detuning;
}

}  // namespace detail

// Population trajectory of one scenario as a CSV table.
inline CsvTable simulate(const RunConfig& c) {
  using namespace detail;
  const std::string scenario = c.text_or("scenario", "");
  if (scenario.empty()) throw ConfigError("scenario", "required");
  const std::string ctx = "scenario " + scenario;
  const double pts = c.number_or("points_per_T", 100.0);

  if (scenario == "two_level") {
    c.restrict_to(with_common(kCommonSimulate, {"g_over_k", "gamma_over_k", "gamma_over_g", "delta_over_k",
                                                "pulse", "pulse_file"}),
                  ctx);
    const double T = c.positive("kT");
    const double g = c.number("g_over_k");
    if (!(g >= 0.0)) throw ConfigError("g_over_k", "must be non-negative");
    if (c.has("gamma_over_k") && c.has("gamma_over_g")) throw ConfigError("gamma_over_g", "conflicts with gamma_over_k");
    const double gamma = c.has("gamma_over_g") ? c.non_negative_or("gamma_over_g", 0.0) * g
                                               : c.non_negative_or("gamma_over_k", 0.0);
    const TwoLevelParams p{g, 1.0, gamma, c.number_or("delta_over_k", 0.0)};
    p.validate();
    const auto grid = make_grid(T, c.number_or("t_end_over_T", 5.0), pts);
    const auto tr = amplitude_trajectory(p, pulse_from(c, T), grid.t);
    return population_table(grid, tr, {{"pop_beta", "beta"}, {"pop_ce", "c_e"}});
  }

  if (scenario == "lambda_nonadiabatic") {
    c.restrict_to(with_common(kCommonSimulate, {"g_over_k", "gc_over_omega", "delta1_over_k", "gamma_r_over_k",
                                                "pulse", "pulse_file", "t_load_over_T"}),
                  ctx);
    const double T = c.positive("kT");
    const double g = c.number("g_over_k");
    if (!(g >= 0.0)) throw ConfigError("g_over_k", "must be non-negative");
    const double d1 = c.number_or("delta1_over_k", 1000.0);
    if (d1 == 0.0) throw ConfigError("delta1_over_k", "must be nonzero");
    const double ratio = c.has("gc_over_omega") ? c.positive("gc_over_omega") : 1.0;
    const LambdaParams p = nonadiabatic_params(g, 1.0, d1, ratio, c.non_negative_or("gamma_r_over_k", 0.0));
    const PulseShape pulse = pulse_from(c, T);
    const double t_load = c.has("t_load_over_T") ? c.number("t_load_over_T") * T : nonadiabatic_peak(p, pulse).t_load;
    const auto grid = make_grid(T, c.number_or("t_end_over_T", 5.0), pts);
    const auto tr = nonadiabatic_trajectory(p, pulse, grid.t, t_load);
    return population_table(grid, tr, {{"pop_ce", "c_e"}});
  }

  if (scenario == "lambda_full") {
    c.restrict_to(with_common(kCommonSimulate, {"gc_over_k", "omega_over_k", "delta1_over_k", "delta2_over_k",
                                                "gamma_r_over_k", "pulse", "pulse_file", "control_file",
                                                "t_load_over_T"}),
                  ctx);
    const double T = c.positive("kT");
    LambdaParams p;
    p.g_c = c.number("gc_over_k");
    if (!(p.g_c >= 0.0)) throw ConfigError("gc_over_k", "must be non-negative");
    p.delta1 = c.number("delta1_over_k");
    if (p.delta1 == 0.0) throw ConfigError("delta1_over_k", "must be nonzero");
    p.gamma_r = c.non_negative_or("gamma_r_over_k", 0.0);
    if (c.has("control_file")) {
      if (c.has("omega_over_k")) throw ConfigError("control_file", "conflicts with --omega_over_k");
      if (c.has("t_load_over_T")) throw ConfigError("t_load_over_T", "cannot be combined with --control_file");
      p.control = load_control_csv(c.texts.at("control_file"));
      p.delta2 = c.number("delta2_over_k", "required with --control_file");
    } else {
      const double om = c.number("omega_over_k");
      if (!(om >= 0.0)) throw ConfigError("omega_over_k", "must be non-negative");
      p.control = c.has("t_load_over_T") ? ControlField::step_off(om, c.number("t_load_over_T") * T)
                                         : ControlField::constant_field(om);
      p.delta2 = c.number_or("delta2_over_k", stark_compensated_delta2(p.g_c, om, p.delta1));
    }
    p.photon_detuning = stark_carrier(p.g_c, p.delta1);
    const auto grid = make_grid(T, c.number_or("t_end_over_T", 5.0), pts);
    const auto tr = full_ode(p, pulse_from(c, T), grid.t);
    return population_table(grid, tr, {{"pop_beta", "beta"}, {"pop_cr", "c_r"}, {"pop_ce", "c_e"}});
  }

  if (scenario == "lambda_adiabatic_tpr" || scenario == "lambda_adiabatic_zed") {
    c.restrict_to(with_common(kCommonSimulate, {"gp_over_k", "gc_over_k", "delta1_over_k"}), ctx);
    const double T = c.positive("kT");
    if (T < 4.0) throw ConfigError("kT", "adiabatic schemes need kT >= 4");
    const auto grid = make_grid(T, c.number_or("t_end_over_T", 5.0), pts);
    const auto s = adiabatic_scheme(scenario);
    AdiabaticResult r;
    if (c.has("gp_over_k")) {
      if (c.has("gc_over_k") || c.has("delta1_over_k"))
        throw ConfigError("gp_over_k", "give either gp_over_k or gc_over_k with delta1_over_k");
      r = adiabatic_load_gprime(s, c.positive("gp_over_k"), 1.0, T, grid.t);
    } else {
      const double gc = c.positive("gc_over_k", "required (or give gp_over_k)");
      const double d1 = c.number("delta1_over_k", "required with gc_over_k");
      if (d1 == 0.0) throw ConfigError("delta1_over_k", "must be nonzero");
      r = adiabatic_load(s, gc, d1, 1.0, T, grid.t);
    }
    return population_table(grid, r.trajectory,
                            {{"pop_beta", "beta"}, {"pop_cr", "c_r"}, {"pop_ce", "c_e"}});
  }

  if (scenario == "mitnu") {
    c.restrict_to(with_common(kCommonSimulate, {"kT0", "g_over_k", "gamma_over_k", "delta_over_k"}), ctx);
    const double T = c.positive("kT");
    const double T0 = c.positive("kT0");
    const double g = c.number("g_over_k");
    if (!(g >= 0.0)) throw ConfigError("g_over_k", "must be non-negative");
    const TwoLevelParams p{g, 1.0, c.non_negative_or("gamma_over_k", 0.0), c.number_or("delta_over_k", 0.0)};
    const auto b = BiphotonAmplitude::spdc(SpdcParams{T, T0, {}});
    const auto grid = make_grid(T, c.number_or("t_end_over_T", 5.0 + T0 / T), pts);
    const auto tr = cee_trajectory(p, b, grid.t);
    return population_table(grid, tr, {{"pop_cee", "c_ee"}});
  }

  throw ConfigError("scenario", "unknown scenario '" + scenario + "'");
}

// Scenario description for the optimizer built from the configured keys.
inline ScenarioConfig scenario_config(const RunConfig& c) {
  const std::string name = c.text_or("scenario", "");
  if (name.empty()) throw ConfigError("scenario", "required");
  ScenarioConfig s;
  s.scenario = parse_scenario(name);
  std::set<std::string> allowed = {"scenario", "kT", "g_min", "g_max", "tol", "output", "config"};
  switch (s.scenario) {
    case Scenario::two_level:
      allowed.insert({"pulse", "gamma_over_k", "gamma_over_g", "delta_over_k"});
      break;
    case Scenario::lambda_nonadiabatic:
      allowed.insert({"pulse", "delta1_over_k", "gc_over_omega", "gamma_r_over_k"});
      break;
    case Scenario::mitnu:
      allowed.insert({"kT0", "delta1_over_k", "gc_over_omega", "gamma_r_over_k"});
      break;
    default:
      break;
  }
  c.restrict_to(allowed, "scenario " + name + " under optimize");
  s.kT = c.positive("kT");
  if (s.scenario == Scenario::mitnu) s.kT0 = c.positive("kT0");
  if (c.has("pulse")) s.pulse = detail::named_pulse(c.texts.at("pulse"));
  if (c.has("gamma_over_k") && c.has("gamma_over_g")) throw ConfigError("gamma_over_g", "conflicts with gamma_over_k");
  s.gamma_over_k = c.non_negative_or("gamma_over_k", 0.0);
  if (c.has("gamma_over_g")) s.gamma_over_g = c.non_negative_or("gamma_over_g", 0.0);
  s.delta_over_k = c.number_or("delta_over_k", 0.0);
  s.delta1_over_k = c.number_or("delta1_over_k", 1000.0);
  s.gc_over_omega = c.number_or("gc_over_omega", 1.0);
  s.gamma_r_over_k = c.non_negative_or("gamma_r_over_k", 0.0);
  s.validate();
  return s;
}

// Single-row table g_opt, P_max, T_Load (T_Load in units of 1/kappa).
inline CsvTable optimize(const RunConfig& c) {
  const ScenarioConfig s = scenario_config(c);
  const auto r = optimize_coupling(s, c.number_or("g_min", 0.05), c.number_or("g_max", 10.0),
                                   c.number_or("tol", 1e-4));
  CsvTable t;
  t.header = {"g_opt", "P_max", "T_Load"};
  t.add_row({r.g_opt, r.p_max, r.t_load});
  return t;
}

// ---------------------------------------------------------------------------
// Figure presets

namespace detail {

// Collects the files and parameters of one preset and writes the sidecar.
class PresetWriter {
 public:
  PresetWriter(std::string preset, std::filesystem::path dir) : preset_(std::move(preset)), dir_(std::move(dir)) {}

  void param(const std::string& key, const std::string& value) { params_.emplace_back(key, value); }
  void param(const std::string& key, double v) { param(key, format_number(v)); }
  void param(const std::string& key, const std::vector<double>& vs) {
    std::string s;
    for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? ";" : "") + format_number(vs[i]);
    param(key, s);
  }

  void table(const std::string& name, const CsvTable& t) {
    write_file_atomic(dir_ / name, t.render());
    files_.push_back(name);
  }

  std::vector<std::string> finish() {
    std::string s = "preset=" + preset_ + "\n";
    for (const auto& [k, v] : params_) s += k + "=" + v + "\n";
    std::string list;
    for (std::size_t i = 0; i < files_.size(); ++i) list += (i ? ";" : "") + files_[i];
    s += "files=" + list + "\n";
    const std::string side = preset_ + "_params.txt";
    write_file_atomic(dir_ / side, s);
    auto out = files_;
    out.push_back(side);
    return out;
  }

 private:
  std::string preset_;
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> params_;
  std::vector<std::string> files_;
};

inline std::string tag(std::string_view prefix, double v) { return std::string(prefix) + format_number(v); }

// Population columns of several curves on one grid, computed in parallel.
inline CsvTable curve_table(const TimeGrid& g, const std::vector<std::string>& names,
                            const std::function<std::vector<double>(std::size_t)>& curve) {
  std::vector<std::vector<double>> cols(names.size());
  parallel_for(names.size(), [&](std::size_t i) { cols[i] = curve(i); });
  CsvTable t;
  t.header.push_back("t_over_T");
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (std::size_t k = 0; k < g.t.size(); ++k) {
    std::vector<double> r{g.t_over_T[k]};
    for (const auto& c : cols) r.push_back(c[k]);
    t.add_row(std::move(r));
  }
  return t;
}

inline void check_sweep(const std::vector<SweepRow>& rows) {
  for (const auto& r : rows)
    if (!r.error.empty()) throw NumericError("sweep cell failed: " + r.error);
}

inline std::vector<std::string> fig3(PresetWriter& w, double pts) {
  const double kT = 2.0;
  const std::vector<double> gs = {0.25, 0.5, 1.0, 1.5, 2.0};
  w.param("scenario", "two_level");
  w.param("kT", kT);
  w.param("pulse", "sech");
  w.param("gamma_over_k", 0.0);
  w.param("delta_over_k", 0.0);
  w.param("g_over_k", gs);
  w.param("points_per_T", pts);
  const auto grid = make_grid(kT, 5.0, pts);
  const PulseShape pulse = make_pulse_centered(PulseKind::sech, kT, kT);
  std::vector<std::string> names;
  for (double g : gs) names.push_back(tag("pop_ce_g", g));
  w.table("fig3.csv", curve_table(grid, names, [&](std::size_t i) {
            return amplitude_trajectory(TwoLevelParams{gs[i], 1.0, 0.0, 0.0}, pulse, grid.t).population("c_e");
          }));
  return w.finish();
}

inline std::vector<std::string> fig4(PresetWriter& w) {
  const std::vector<double> kts = {0.5, 1, 1.5, 2, 2.5, 3, 4, 5, 6, 8, 10, 12, 15, 20};
  const std::vector<double> gammas = {0.0, 0.1, 0.5, 1.0};
  w.param("scenario", "two_level");
  w.param("pulse", "sech");
  w.param("delta_over_k", 0.0);
  w.param("kT", kts);
  w.param("gamma_over_g", gammas);
  SweepSpec s;
  s.base.scenario = Scenario::two_level;
  s.axes = {{"kT", kts}, {"gamma_over_g", gammas}};
  w.param("g_min", s.g_lo);
  w.param("g_max", s.g_hi);
  w.param("tol", s.tol);
  const auto rows = sweep(s);
  check_sweep(rows);
  CsvTable g, p;
  g.header = p.header = {"kT"};
  for (double gm : gammas) {
    g.header.push_back(tag("g_opt_gamma_over_g_", gm));
    p.header.push_back(tag("P_max_gamma_over_g_", gm));
  }
  for (std::size_t i = 0; i < kts.size(); ++i) {
    std::vector<double> rg{kts[i]}, rp{kts[i]};
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      const auto& r = rows[i * gammas.size() + j].result;
      rg.push_back(r.g_opt);
      rp.push_back(r.p_max);
    }
    g.add_row(std::move(rg));
    p.add_row(std::move(rp));
  }
  w.table("fig4_gopt.csv", g);
  w.table("fig4_pmax.csv", p);
  return w.finish();
}

inline std::vector<std::string> fig5(PresetWriter& w, double pts) {
  const double kT = 2.0, g = 1.0;
  const std::vector<std::pair<PulseKind, std::string>> kinds = {{PulseKind::sech, "sech"},
                                                                 {PulseKind::rectangular, "rectangular"},
                                                                 {PulseKind::exp_rising, "exp_rising"},
                                                                 {PulseKind::exp_decaying, "exp_decaying"}};
  w.param("scenario", "two_level");
  w.param("kT", kT);
  w.param("g_over_k", g);
  w.param("gamma_over_k", 0.0);
  w.param("delta_over_k", 0.0);
  w.param("pulse_centroid_over_T", 1.0);
  w.param("points_per_T", pts);
  const auto grid = make_grid(kT, 5.0, pts);
  std::vector<CsvTable> tables(kinds.size());
  parallel_for(kinds.size(), [&](std::size_t i) {
    const PulseShape pulse = make_pulse_centered(kinds[i].first, kT, kT);
    const auto pop = amplitude_trajectory(TwoLevelParams{g, 1.0, 0.0, 0.0}, pulse, grid.t).population("c_e");
    CsvTable t;
    t.header = {"t_over_T", "pulse_re", "pulse_im", "pop_ce"};
    for (std::size_t k = 0; k < grid.t.size(); ++k) {
      const cplx v = pulse(grid.t[k]);
      t.add_row({grid.t_over_T[k], v.real(), v.imag(), pop[k]});
    }
    tables[i] = std::move(t);
  });
  for (std::size_t i = 0; i < kinds.size(); ++i) w.table("fig5_" + kinds[i].second + ".csv", tables[i]);
  return w.finish();
}

inline std::vector<std::string> fig6(PresetWriter& w, double pts) {
  const std::vector<double> kts = {4.5, 5, 6, 8, 10};
  std::vector<double> gps;
  for (int i = 1; i <= 25; ++i) gps.push_back(i / 5.0);
  w.param("scenario", "lambda_adiabatic_tpr");
  w.param("pulse", "sech");
  w.param("gamma_r_over_k", 0.0);
  w.param("delta1_over_gp", 1000.0);
  w.param("t_final_over_T", 5.0);
  w.param("kT", kts);
  w.param("gp_over_k", gps);
  w.param("points_per_T", pts);
  SweepSpec s;
  s.base.scenario = Scenario::lambda_adiabatic_tpr;
  s.mode = SweepMode::probability;
  s.axes = {{"coupling", gps}, {"kT", kts}};
  const auto rows = sweep(s);
  check_sweep(rows);
  CsvTable t;
  t.header = {"gp_over_k"};
  for (double k : kts) t.header.push_back(tag("P_kT", k));
  for (std::size_t i = 0; i < gps.size(); ++i) {
    std::vector<double> r{gps[i]};
    for (std::size_t j = 0; j < kts.size(); ++j) r.push_back(rows[i * kts.size() + j].result.p_max);
    t.add_row(std::move(r));
  }
  w.table("fig6.csv", t);
  // Inset: control pulse normalized to g_c, photon centered at t/T = 1.
  const auto grid = make_grid(1.0, 2.0, pts);
  CsvTable inset;
  inset.header = {"t_over_T"};
  for (double k : kts) inset.header.push_back(tag("omega_over_gc_kT", k));
  for (std::size_t i = 0; i < grid.t.size(); ++i) {
    std::vector<double> r{grid.t_over_T[i]};
    for (double k : kts) r.push_back(adiabatic_control_pulse(1.0, 1.0, k, (grid.t_over_T[i] - 1.0) * k));
    inset.add_row(std::move(r));
  }
  w.table("fig6_control.csv", inset);
  return w.finish();
}

inline CsvTable optimum_table(const std::vector<double>& kts, const std::vector<SweepRow>& rows) {
  CsvTable t;
  t.header = {"kT", "g_opt", "P_max", "T_Load_over_T"};
  for (std::size_t i = 0; i < kts.size(); ++i) {
    const auto& r = rows[i].result;
    t.add_row({kts[i], r.g_opt, r.p_max, r.t_load / kts[i]});
  }
  return t;
}

inline std::vector<std::string> fig7(PresetWriter& w) {
  const std::vector<double> na = {0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10};
  const std::vector<double> ad = {4.5, 5, 6, 8, 10};
  w.param("pulse", "sech");
  w.param("delta_over_k", 0.0);
  w.param("gamma_r_over_k", 0.0);
  w.param("nonadiabatic_scenario", "lambda_nonadiabatic");
  w.param("nonadiabatic_kT", na);
  w.param("adiabatic_scenario", "lambda_adiabatic_zed");
  w.param("adiabatic_kT", ad);
  w.param("adiabatic_delta1_over_gp", 1000.0);
  SweepSpec a;
  a.base.scenario = Scenario::lambda_nonadiabatic;
  a.axes = {{"kT", na}};
  w.param("g_min", a.g_lo);
  w.param("g_max", a.g_hi);
  w.param("tol", a.tol);
  const auto ra = sweep(a);
  check_sweep(ra);
  SweepSpec b = a;
  b.base.scenario = Scenario::lambda_adiabatic_zed;
  b.axes = {{"kT", ad}};
  const auto rb = sweep(b);
  check_sweep(rb);
  w.table("fig7_nonadiabatic.csv", optimum_table(na, ra));
  w.table("fig7_adiabatic.csv", optimum_table(ad, rb));
  return w.finish();
}

inline std::vector<std::string> fig8(PresetWriter& w) {
  std::vector<double> offs;
  for (int i = -20; i <= 20; ++i) offs.push_back(i / 20.0);
  const double kt_na = 1.0, kt_ad = 4.5;
  ScenarioConfig cn;
  cn.scenario = Scenario::lambda_nonadiabatic;
  cn.kT = kt_na;
  ScenarioConfig ca;
  ca.scenario = Scenario::lambda_adiabatic_zed;
  ca.kT = kt_ad;
  OptimumPoint on, oa;
  parallel_for(2, [&](std::size_t i) {
    if (i == 0) on = optimize_coupling(cn);
    else oa = optimize_coupling(ca);
  });
  w.param("pulse", "sech");
  w.param("delta_over_k", 0.0);
  w.param("gamma_r_over_k", 0.0);
  w.param("nonadiabatic_kT", kt_na);
  w.param("nonadiabatic_g_over_k", on.g_opt);
  w.param("adiabatic_scheme", "lambda_adiabatic_zed");
  w.param("adiabatic_kT", kt_ad);
  w.param("adiabatic_gp_over_k", oa.g_opt);
  w.param("offset_over_T", offs);
  std::vector<double> pn(offs.size()), pa(offs.size());
  const std::vector<double> zero{0.0};
  double pn0 = 0.0, pa0 = 0.0;
  parallel_for(2 * offs.size() + 2, [&](std::size_t i) {
    if (i == 2 * offs.size()) {
      pn0 = timing_offset_scan(LoadingScheme::nonadiabatic, kt_na, on.g_opt, zero)[0];
    } else if (i == 2 * offs.size() + 1) {
      pa0 = timing_offset_scan(LoadingScheme::adiabatic_zed, kt_ad, oa.g_opt, zero)[0];
    } else if (i < offs.size()) {
      pn[i] = timing_offset_scan(LoadingScheme::nonadiabatic, kt_na, on.g_opt, std::span(&offs[i], 1))[0];
    } else {
      const std::size_t k = i - offs.size();
      pa[k] = timing_offset_scan(LoadingScheme::adiabatic_zed, kt_ad, oa.g_opt, std::span(&offs[k], 1))[0];
    }
  });
  auto table = [&](const std::vector<double>& p, double p0) {
    CsvTable t;
    t.header = {"offset_over_T", "P", "P_over_P0"};
    for (std::size_t i = 0; i < offs.size(); ++i) t.add_row({offs[i], p[i], p[i] / p0});
    return t;
  };
  w.table("fig8_adiabatic.csv", table(pa, pa0));
  w.table("fig8_nonadiabatic.csv", table(pn, pn0));
  return w.finish();
}

inline std::vector<std::string> fig9(PresetWriter& w, double pts) {
  const double kT = 2.0;
  const std::vector<double> gs = {0.25, 0.5, 1.0, 1.5, 2.0};
  const double kT0_a = 2.0;
  const std::vector<double> t0s = {0.5, 1.0, 2.0, 4.0, 6.0};
  const double g_b = 1.0;
  w.param("scenario", "mitnu");
  w.param("kT", kT);
  w.param("pump", "sech");
  w.param("pump_center", "2T+T0");
  w.param("gamma_prime_over_k", 0.0);
  w.param("a_kT0", kT0_a);
  w.param("a_g_over_k", gs);
  w.param("b_g_over_k", g_b);
  w.param("b_kT0", t0s);
  w.param("points_per_T", pts);
  const auto ga = make_grid(kT, 5.0 + kT0_a / kT, pts);
  std::vector<std::string> na, nb;
  for (double g : gs) na.push_back(tag("pop_cee_g", g));
  for (double t0 : t0s) nb.push_back(tag("pop_cee_kT0_", t0));
  const auto ba = BiphotonAmplitude::spdc(SpdcParams{kT, kT0_a, {}});
  w.table("fig9a.csv", curve_table(ga, na, [&](std::size_t i) {
            return cee_trajectory(TwoLevelParams{gs[i], 1.0, 0.0, 0.0}, ba, ga.t).population("c_ee");
          }));
  const double t0max = *std::max_element(t0s.begin(), t0s.end());
  const auto gb = make_grid(kT, 5.0 + t0max / kT, pts);
  w.table("fig9b.csv", curve_table(gb, nb, [&](std::size_t i) {
            const auto b = BiphotonAmplitude::spdc(SpdcParams{kT, t0s[i], {}});
            return cee_trajectory(TwoLevelParams{g_b, 1.0, 0.0, 0.0}, b, gb.t).population("c_ee");
          }));
  return w.finish();
}

inline std::vector<std::string> fig10(PresetWriter& w) {
  const std::vector<double> kts = {0.5, 1, 2, 3, 4, 5, 6};
  const std::vector<double> t0s = kts;
  w.param("scenario", "mitnu");
  w.param("pump", "sech");
  w.param("gamma_prime_over_k", 0.0);
  w.param("kT", kts);
  w.param("kT0", t0s);
  SweepSpec s;
  s.base.scenario = Scenario::mitnu;
  s.axes = {{"kT", kts}, {"kT0", t0s}};
  w.param("g_min", s.g_lo);
  w.param("g_max", s.g_hi);
  w.param("tol", s.tol);
  const auto rows = sweep(s);
  check_sweep(rows);
  CsvTable g, p;
  g.header = p.header = {"kT"};
  for (double t0 : t0s) {
    g.header.push_back(tag("g_opt_kT0_", t0));
    p.header.push_back(tag("P_max_kT0_", t0));
  }
  for (std::size_t i = 0; i < kts.size(); ++i) {
    std::vector<double> rg{kts[i]}, rp{kts[i]};
    for (std::size_t j = 0; j < t0s.size(); ++j) {
      rg.push_back(rows[i * t0s.size() + j].result.g_opt);
      rp.push_back(rows[i * t0s.size() + j].result.p_max);
    }
    g.add_row(std::move(rg));
    p.add_row(std::move(rp));
  }
  w.table("fig10_gopt.csv", g);
  w.table("fig10_pmax.csv", p);
  return w.finish();
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> n = {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"};
  return n;
}

// Runs a figure preset and returns the written file names (relative to
// output_dir), sidecar last.
inline std::vector<std::string> figure(const RunConfig& c) {
  c.restrict_to({"preset", "output_dir", "points_per_T", "config"}, "figure");
  const std::string preset = c.text_or("preset", "");
  if (preset.empty()) throw ConfigError("preset", "required");
  const auto& names = preset_names();
  if (std::find(names.begin(), names.end(), preset) == names.end())
    throw ConfigError("preset", "unknown preset '" + preset + "'");
  const double pts = c.number_or("points_per_T", 100.0);
  if (!(pts > 0.0) || pts > 1e5) throw ConfigError("points_per_T", "must lie in (0, 1e5]");
  const std::filesystem::path dir = c.text_or("output_dir", ".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir", "cannot create '" + dir.string() + "': " + ec.message());
  detail::PresetWriter w(preset, dir);
  if (preset == "fig3") return detail::fig3(w, pts);
  if (preset == "fig4") return detail::fig4(w);
  if (preset == "fig5") return detail::fig5(w, pts);
  if (preset == "fig6") return detail::fig6(w, pts);
  if (preset == "fig7") return detail::fig7(w);
  if (preset == "fig8") return detail::fig8(w);
  if (preset == "fig9") return detail::fig9(w, pts);
  return detail::fig10(w);
}

// ---------------------------------------------------------------------------
// Entry point

// Parses args (program name excluded) and runs the selected command.
// Returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-photon loading of cavity quantum memories"};
  app.require_subcommand(1, 1);
  std::map<std::string, std::map<std::string, double>> nums;
  std::map<std::string, std::map<std::string, std::string>> txts;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"simulate", "write a population trajectory CSV"},
                      {"optimize", "find the coupling that maximizes loading"},
                      {"figure", "regenerate the datasets of a figure preset"}};
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto& nm = nums[s.name];
    auto& tx = txts[s.name];
    for (const auto& k : numeric_keys())
      sub->add_option("--" + k, nm[k], key_help(k))->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    for (const auto& k : text_keys())
      sub->add_option("--" + k, tx[k], key_help(k))->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  try {
    // Config file entries go first so that flags override them.
    if (!args.empty() && (args[0] == "simulate" || args[0] == "optimize" || args[0] == "figure")) {
      if (auto path = detail::find_config_path(args)) {
        std::vector<std::string> injected;
        for (auto& [k, v] : detail::read_config_file(*path)) {
          injected.push_back("--" + k);
          injected.push_back(v);
        }
        args.insert(args.begin() + 1, injected.begin(), injected.end());
      }
    }
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    RunConfig cfg;
    cfg.command = sub->get_name();
    for (const auto& k : numeric_keys())
      if (sub->count("--" + k)) cfg.numbers[k] = nums[cfg.command][k];
    for (const auto& k : text_keys())
      if (sub->count("--" + k)) cfg.texts[k] = txts[cfg.command][k];

    if (cfg.command == "simulate") {
      detail::emit(cfg, simulate(cfg), out);
    } else if (cfg.command == "optimize") {
      detail::emit(cfg, optimize(cfg), out);
    } else {
      for (const auto& f : figure(cfg)) out << f << "\n";
    }
    return kExitOk;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

inline int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run_cli(std::move(args), out, err);
}

}  // namespace cavload::cli
