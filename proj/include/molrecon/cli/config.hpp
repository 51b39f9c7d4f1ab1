#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: an INI-style key = value document with unit
 *        suffixes in the key names (a_um, T_s, D_m2s, ...).
 *
 * Every key has a default; the defaults are the nominal simulation
 * parameters, so an empty file reproduces the reference setting. Values are
 * kept as text so the resolved configuration can be written out and
 * re-executed exactly.
 */

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "molrecon/dspp_stats.hpp"
#include "molrecon/math_kernels.hpp"
#include "molrecon/montecarlo.hpp"
#include "molrecon/optimizer.hpp"

namespace molrecon::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { validate, sweep, optimize, distributions, trace };

inline constexpr double kMicron = 1e-6;

/// Ordered list of every accepted key with its default value.
inline const std::vector<std::pair<std::string, std::string>>& config_defaults() {
  static const std::vector<std::pair<std::string, std::string>> defaults = {
      {"experiment", "validate"},
      {"mu_s", "100"},
      {"sigma_s_sq", "100"},
      {"rho_sx", "0.75"},
      {"D_m2s", "1e-12"},
      {"a_um", "1"},
      {"b_um", "2"},
      {"T_s", "0.1"},
      {"tau_s", "0.001"},
      {"delta_um", ""},
      {"step_law", "lattice"},
      {"signal_mode", "fixed"},
      {"seed", "1"},
      {"trials", "10000"},
      {"threads", "0"},
      {"b_list_um", "2, 2.5, 3"},
      {"T_grid_s", "linspace(0.01, 0.25, 25)"},
      {"T_bracket_s", "0.0001, 0.25"},
      {"a_bracket_um", "0.5, 2"},
      {"f_bracket_hz", "4, 10000"},
      {"sweep_variable", "T"},
      {"surface_variable", "none"},
      {"grid_D_m2s", "1e-12, 5e-12, 1e-11"},
      {"grid_a_um", "linspace(0.6, 2.0, 8)"},
      {"grid_f_hz", "linspace(4, 100, 25)"},
      {"tie_b_to_2a", "false"},
      {"with_t_opt", "false"},
      {"optimize_target", "T"},
      {"optimize_over", "none"},
      {"E_max_m6", ""},
      {"draws", "1000000"},
      {"bins", "60"},
      {"Q", "10000"},
      {"r_um", "10"},
      {"bin_width_um", "1"},
      {"t_max_s", "10"},
      {"stride", "10"},
  };
  return defaults;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n\"");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\"");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(key + ": expected a number, got an empty value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": '" + t + "' is not a finite number");
  }
  return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

/// "v1, v2, ..." or "linspace(lo, hi, n)".
inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.empty()) return out;
  if (t.rfind("linspace(", 0) == 0) {
    if (t.back() != ')') throw ConfigError(key + ": malformed linspace(...)");
    const auto args = split(t.substr(9, t.size() - 10), ',');
    if (args.size() != 3) throw ConfigError(key + ": linspace needs (lo, hi, n)");
    const double n = parse_number(key, args[2]);
    if (n < 1 || n != std::floor(n)) throw ConfigError(key + ": linspace point count must be a positive integer");
    return linspace(parse_number(key, args[0]), parse_number(key, args[1]), static_cast<std::size_t>(n));
  }
  for (const auto& part : split(t, ',')) out.push_back(parse_number(key, part));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + t + "'");
}

inline std::int64_t parse_integer(const std::string& key, const std::string& text, std::int64_t min_value) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || v < static_cast<double>(min_value) || v > 9.0e15) {
    throw ConfigError(key + ": expected an integer >= " + std::to_string(min_value));
  }
  return static_cast<std::int64_t>(v);
}

inline Bracket parse_bracket(const std::string& key, const std::string& text, double scale) {
  const auto v = parse_list(key, text);
  if (v.size() != 2 || !(v[0] > 0.0) || v[0] > v[1]) throw ConfigError(key + ": expected 'lo, hi' with 0 < lo <= hi");
  return {v[0] * scale, v[1] * scale};
}

inline std::vector<double> scaled_grid(const std::string& key, const std::string& text, double scale) {
  auto v = parse_list(key, text);
  if (v.empty()) throw ConfigError(key + ": grid is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw ConfigError(key + ": grid values must be > 0");
    if (i > 0 && !(v[i] > v[i - 1])) throw ConfigError(key + ": grid must be strictly increasing");
    v[i] *= scale;
  }
  return v;
}

inline SweepVariable parse_variable(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "T") return SweepVariable::period;
  if (t == "D") return SweepVariable::diffusion;
  if (t == "a") return SweepVariable::radius;
  if (t == "f") return SweepVariable::frequency;
  throw ConfigError(key + ": expected one of T, D, a, f; got '" + t + "'");
}

}  // namespace detail

/// Fully typed, validated run configuration in SI units.
struct RunConfig {
  std::map<std::string, std::string> values;  ///< resolved text of every key

  Experiment experiment = Experiment::validate;
  double mu_s = 100, sigma_s_sq = 100, rho_sx = 0.75;
  double diffusion = 1e-12;
  double a = 1e-6, b = 2e-6;
  double period = 0.1;
  double tau = 1e-3;
  std::optional<double> delta;
  StepLaw step_law = StepLaw::lattice;
  SignalMode signal_mode = SignalMode::fixed_mean;
  std::uint64_t seed = 1;
  std::int64_t trials = 10000;
  unsigned threads = 0;
  std::vector<double> b_list;
  std::vector<double> period_grid;
  Bracket period_bracket = kDefaultPeriodBracket;
  Bracket radius_bracket = kDefaultRadiusBracket;
  Bracket frequency_bracket{4.0, 1e4};
  SweepVariable sweep_variable = SweepVariable::period;
  std::optional<SweepVariable> surface_variable;
  std::vector<double> diffusion_grid, radius_grid, frequency_grid;
  bool tie_b_to_2a = false;
  bool with_t_opt = false;
  SweepVariable optimize_target = SweepVariable::period;
  std::optional<SweepVariable> optimize_over;
  std::optional<double> max_distortion;
  std::int64_t draws = 1'000'000;
  std::int64_t bins = 60;
  std::int64_t molecules = 10000;
  double distance = 10e-6;
  double bin_width = 1e-6;
  double t_max = 10.0;
  std::int64_t stride = 10;

  SignalModel signal() const { return {mu_s, sigma_s_sq, rho_sx}; }
  ChannelParams channel() const { return ChannelParams{diffusion}; }
  ReceiverGeometry geometry() const { return {a, b}; }
  WalkParams walk() const {
    return delta ? WalkParams::explicit_step(tau, *delta, step_law) : WalkParams::derived(channel(), tau, step_law);
  }

  /// Canonical "key = value" text; parsing it reproduces this configuration.
  std::string canonical_text() const {
    std::ostringstream out;
    for (const auto& [key, dflt] : config_defaults()) out << key << " = " << values.at(key) << '\n';
    return out.str();
  }
};

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::validate: return "validate";
    case Experiment::sweep: return "sweep";
    case Experiment::optimize: return "optimize";
    case Experiment::distributions: return "distributions";
    case Experiment::trace: return "trace";
  }
  return "?";
}

/// Build a RunConfig from key/value text; unknown keys are rejected.
inline RunConfig resolve_config(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [key, dflt] : config_defaults()) cfg.values[key] = dflt;
  for (const auto& [key, value] : overrides) {
    if (!cfg.values.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
    cfg.values[key] = detail::trim(value);
  }
  const auto& v = cfg.values;
  using namespace detail;

  const std::string exp = v.at("experiment");
  if (exp == "validate") cfg.experiment = Experiment::validate;
  else if (exp == "sweep") cfg.experiment = Experiment::sweep;
  else if (exp == "optimize") cfg.experiment = Experiment::optimize;
  else if (exp == "distributions") cfg.experiment = Experiment::distributions;
  else if (exp == "trace") cfg.experiment = Experiment::trace;
  else throw ConfigError("experiment: expected validate, sweep, optimize, distributions or trace; got '" + exp + "'");

  cfg.mu_s = parse_number("mu_s", v.at("mu_s"));
  cfg.sigma_s_sq = parse_number("sigma_s_sq", v.at("sigma_s_sq"));
  cfg.rho_sx = parse_number("rho_sx", v.at("rho_sx"));
  cfg.diffusion = parse_number("D_m2s", v.at("D_m2s"));
  cfg.a = parse_number("a_um", v.at("a_um")) * kMicron;
  cfg.b = parse_number("b_um", v.at("b_um")) * kMicron;
  cfg.period = parse_number("T_s", v.at("T_s"));
  cfg.tau = parse_number("tau_s", v.at("tau_s"));
  if (!v.at("delta_um").empty()) cfg.delta = parse_number("delta_um", v.at("delta_um")) * kMicron;

  const std::string law = v.at("step_law");
  if (law == "lattice") cfg.step_law = StepLaw::lattice;
  else if (law == "gaussian") cfg.step_law = StepLaw::gaussian;
  else throw ConfigError("step_law: expected lattice or gaussian; got '" + law + "'");

  const std::string mode = v.at("signal_mode");
  if (mode == "fixed") cfg.signal_mode = SignalMode::fixed_mean;
  else if (mode == "gaussian") cfg.signal_mode = SignalMode::gaussian;
  else throw ConfigError("signal_mode: expected fixed or gaussian; got '" + mode + "'");

  cfg.seed = static_cast<std::uint64_t>(parse_integer("seed", v.at("seed"), 0));
  cfg.trials = parse_integer("trials", v.at("trials"), 1);
  cfg.threads = static_cast<unsigned>(parse_integer("threads", v.at("threads"), 0));
  cfg.b_list = scaled_grid("b_list_um", v.at("b_list_um"), kMicron);
  cfg.period_grid = scaled_grid("T_grid_s", v.at("T_grid_s"), 1.0);
  cfg.period_bracket = parse_bracket("T_bracket_s", v.at("T_bracket_s"), 1.0);
  cfg.radius_bracket = parse_bracket("a_bracket_um", v.at("a_bracket_um"), kMicron);
  cfg.frequency_bracket = parse_bracket("f_bracket_hz", v.at("f_bracket_hz"), 1.0);
  cfg.sweep_variable = parse_variable("sweep_variable", v.at("sweep_variable"));
  if (v.at("surface_variable") != "none") cfg.surface_variable = parse_variable("surface_variable", v.at("surface_variable"));
  cfg.diffusion_grid = scaled_grid("grid_D_m2s", v.at("grid_D_m2s"), 1.0);
  cfg.radius_grid = scaled_grid("grid_a_um", v.at("grid_a_um"), kMicron);
  cfg.frequency_grid = scaled_grid("grid_f_hz", v.at("grid_f_hz"), 1.0);
  cfg.tie_b_to_2a = parse_bool("tie_b_to_2a", v.at("tie_b_to_2a"));
  cfg.with_t_opt = parse_bool("with_t_opt", v.at("with_t_opt"));
  cfg.optimize_target = parse_variable("optimize_target", v.at("optimize_target"));
  if (cfg.optimize_target == SweepVariable::diffusion) throw ConfigError("optimize_target: D is not a design parameter");
  if (v.at("optimize_over") != "none") cfg.optimize_over = parse_variable("optimize_over", v.at("optimize_over"));
  if (!v.at("E_max_m6").empty()) cfg.max_distortion = parse_number("E_max_m6", v.at("E_max_m6"));
  cfg.draws = parse_integer("draws", v.at("draws"), 1);
  cfg.bins = parse_integer("bins", v.at("bins"), 1);
  cfg.molecules = parse_integer("Q", v.at("Q"), 0);
  cfg.distance = parse_number("r_um", v.at("r_um")) * kMicron;
  cfg.bin_width = parse_number("bin_width_um", v.at("bin_width_um")) * kMicron;
  cfg.t_max = parse_number("t_max_s", v.at("t_max_s"));
  cfg.stride = parse_integer("stride", v.at("stride"), 1);

  // Re-run the domain invariants so bad input fails at load time.
  auto check = [](const char* field, auto&& build) {
    try {
      build();
    } catch (const DomainError& e) {
      throw ConfigError(std::string(field) + ": " + e.what());
    }
  };
  check("mu_s/sigma_s_sq/rho_sx", [&] { (void)cfg.signal(); });
  check("D_m2s", [&] { (void)cfg.channel(); });
  if (!cfg.tie_b_to_2a) check("a_um/b_um", [&] { (void)cfg.geometry(); });
  check("tau_s/delta_um", [&] { (void)cfg.walk(); });
  if (!(cfg.period > 0.0)) throw ConfigError("T_s: sampling period must be > 0");
  if (!(cfg.bin_width > 0.0)) throw ConfigError("bin_width_um: must be > 0");
  if (!(cfg.t_max > 0.0)) throw ConfigError("t_max_s: must be > 0");
  for (double b : cfg.b_list) {
    if (!(b > cfg.a)) throw ConfigError("b_list_um: every reception radius must exceed a_um");
  }
  return cfg;
}

/// Raw key/value pairs of an INI-style document (no sections; '#' or ';' comments).
inline std::map<std::string, std::string> read_config_values(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  std::map<std::string, std::string> kv;
  for (const auto& [key, node] : tree) {
    if (!node.empty()) throw ConfigError("config: sections are not supported ('" + key + "')");
    kv[key] = node.data();
  }
  return kv;
}

inline RunConfig parse_config(std::istream& in) { return resolve_config(read_config_values(in)); }

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace molrecon::cli
