#pragma once

/**
 * @file experiments.hpp
 * @brief The five experiments behind the command-line tool. Each returns a
 *        ResultTable whose rows depend only on the configuration (never on
 *        the thread count).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "molrecon/cli/config.hpp"
#include "molrecon/cli/result_table.hpp"
#include "molrecon/distortion.hpp"
#include "molrecon/montecarlo.hpp"
#include "molrecon/optimizer.hpp"

namespace molrecon::cli {

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void base_meta(ResultTable& t, const RunConfig& cfg) {
  const std::string text = cfg.canonical_text();
  t.meta["tool"] = kToolName;
  t.meta["version"] = kToolVersion;
  t.meta["schema_version"] = kSchemaVersion;
  t.meta["experiment"] = to_string(cfg.experiment);
  t.meta["seed"] = cfg.seed;
  t.meta["config_hash"] = hex64(fnv1a64(text));
  t.meta["config"] = text;
  t.meta["notes"] = nlohmann::ordered_json::array();
}

inline void note(ResultTable& t, const std::string& message) { t.meta["notes"].push_back(message); }

inline void walk_notes(ResultTable& t, const RunConfig& cfg, const ReceiverGeometry& geom) {
  const WalkParams walk = cfg.walk();
  if (walk.tunneling_risk(geom)) note(t, "step length exceeds a/10; absorption may be missed between steps");
  if (cfg.signal().gaussian_approximation_questionable()) note(t, "mu_s < 30: Gaussian shell-count model is crude");
}

inline double display_scale(SweepVariable v) { return v == SweepVariable::radius ? 1.0 / kMicron : 1.0; }

inline Column axis_column(SweepVariable v) {
  switch (v) {
    case SweepVariable::period: return {"T", "s"};
    case SweepVariable::diffusion: return {"D", "m^2/s"};
    case SweepVariable::radius: return {"a", "um"};
    case SweepVariable::frequency: return {"f", "Hz"};
  }
  return {"x", ""};
}

inline const std::vector<double>& grid_for(const RunConfig& cfg, SweepVariable v) {
  switch (v) {
    case SweepVariable::period: return cfg.period_grid;
    case SweepVariable::diffusion: return cfg.diffusion_grid;
    case SweepVariable::radius: return cfg.radius_grid;
    case SweepVariable::frequency: return cfg.frequency_grid;
  }
  return cfg.period_grid;
}

/// Template inputs; with b tied to 2a the configured b is replaced.
inline DistortionInputs template_inputs(const RunConfig& cfg) {
  const double b = cfg.tie_b_to_2a ? 2.0 * cfg.a : cfg.b;
  return {ReceiverGeometry{cfg.a, b}, cfg.channel(), cfg.signal(), cfg.period};
}

}  // namespace detail

/**
 * @brief Analytic and Monte Carlo distortion over the period grid, one block
 *        of rows per reception radius, plus a summary row per radius with
 *        the analytic optimum, the Monte Carlo grid argmin and their gap.
 */
inline ResultTable cmd_validate(const RunConfig& cfg) {
  ResultTable t;
  t.schema = {{"row_kind", ""},    {"b", "um"},          {"T", "s"},          {"E_analytic", "m^-6"},
              {"E_mc", "m^-6"},    {"mc_std_error", "m^-6"}, {"rho_empirical", ""}, {"argmin_mc", "s"},
              {"argmin_gap", "s"}, {"mc_unimodal", ""}};
  detail::base_meta(t, cfg);
  const WalkParams walk = cfg.walk();
  const SignalModel sig = cfg.signal();
  const McOptions mc{cfg.signal_mode, cfg.threads};
  double worst_gap = 0.0;

  for (double b : cfg.b_list) {
    const ReceiverGeometry geom{cfg.a, b};
    detail::walk_notes(t, cfg, geom);
    const DistortionInputs tmpl{geom, cfg.channel(), sig, cfg.period};
    const McCurve curve = estimate_distortion_curve(geom, walk, sig, cfg.period_grid, cfg.trials, cfg.seed, mc);
    std::vector<molrecon::detail::Sample> samples;
    for (std::size_t j = 0; j < cfg.period_grid.size(); ++j) {
      const double T = cfg.period_grid[j];
      const McEstimate& est = curve.points[j];
      Row& row = t.add_row();
      row.cells[0] = std::string("curve");
      row.cells[1] = b / kMicron;
      row.cells[2] = T;
      row.cells[3] = mse_value(tmpl.with_period(T));
      row.cells[4] = est.distortion;
      row.cells[5] = est.std_error;
      row.cells[6] = est.rho_empirical.value_or(detail::kNaN);
      if (curve.steps[j].truncated) detail::note(t, "T = " + format_double(T) + " s truncated to whole steps");
      samples.push_back({T, est.distortion});
    }
    const auto best = std::min_element(samples.begin(), samples.end(),
                                       [](const auto& p, const auto& q) { return p.f < q.f; });
    const bool unimodal = molrecon::detail::local_minima(samples).size() == 1;

    Row& row = t.add_row();
    row.cells[0] = std::string("summary");
    row.cells[1] = b / kMicron;
    try {
      const OptimumResult opt = t_opt(tmpl, cfg.period_bracket);
      const double gap = std::abs(best->x - opt.argmin);
      worst_gap = std::max(worst_gap, gap);
      row.cells[2] = opt.argmin;
      row.cells[3] = opt.min_distortion;
      row.cells[4] = best->f;
      row.cells[7] = best->x;
      row.cells[8] = gap;
      row.cells[9] = unimodal ? 1.0 : 0.0;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  }
  t.meta["summary"] = {{"max_argmin_gap_s", worst_gap}};
  return t;
}

/// Distortion over one grid or an (x, y) surface in row-major order.
inline ResultTable cmd_sweep(const RunConfig& cfg) {
  ResultTable t;
  const SweepVariable xv = cfg.sweep_variable;
  t.schema.push_back(detail::axis_column(xv));
  if (cfg.surface_variable) t.schema.push_back(detail::axis_column(*cfg.surface_variable));
  t.schema.push_back({"E", "m^-6"});
  if (cfg.with_t_opt) t.schema.push_back({"T_opt", "s"});
  detail::base_meta(t, cfg);

  SweepSpec spec{SweepAxis{xv, detail::grid_for(cfg, xv)}, std::nullopt, detail::template_inputs(cfg),
                 cfg.tie_b_to_2a, cfg.with_t_opt, cfg.period_bracket};
  if (cfg.surface_variable) {
    if (*cfg.surface_variable == xv) throw ConfigError("surface_variable: must differ from sweep_variable");
    spec.secondary = SweepAxis{*cfg.surface_variable, detail::grid_for(cfg, *cfg.surface_variable)};
  }
  const auto rows = sweep(spec, cfg.threads);
  for (const auto& r : rows) {
    Row& row = t.add_row();
    std::size_t c = 0;
    row.cells[c++] = r.x * detail::display_scale(xv);
    if (r.y) row.cells[c++] = *r.y * detail::display_scale(*cfg.surface_variable);
    row.cells[c++] = r.distortion;
    if (cfg.with_t_opt) row.cells[c++] = r.t_opt.value_or(detail::kNaN);
    row.ok = r.ok;
    row.error = r.error;
  }
  return t;
}

/**
 * @brief Optimum design parameters.
 *
 * Target T or f: one row per value of the outer grid (a or D, or a single
 * row). Target a: one row per sampling period on T_grid_s, with b = 2a.
 */
inline ResultTable cmd_optimize(const RunConfig& cfg) {
  ResultTable t;
  detail::base_meta(t, cfg);
  const SignalModel sig = cfg.signal();

  if (cfg.optimize_target == SweepVariable::radius) {
    t.schema = {{"T", "s"}, {"a_opt", "um"}, {"E_min", "m^-6"}, {"tolerance", "um"}, {"evaluations", ""}};
    t.meta["notes"].push_back("b tied to 2a for radius optimisation");
    for (double T : cfg.period_grid) {
      Row& row = t.add_row();
      row.cells[0] = T;
      try {
        const OptimumResult r = a_opt(sig, cfg.channel(), T, cfg.radius_bracket);
        row.cells[1] = r.argmin / kMicron;
        row.cells[2] = r.min_distortion;
        row.cells[3] = r.tolerance / kMicron;
        row.cells[4] = static_cast<double>(r.evaluations);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
    return t;
  }

  std::vector<double> outer{detail::kNaN};
  if (cfg.optimize_over) {
    if (*cfg.optimize_over != SweepVariable::radius && *cfg.optimize_over != SweepVariable::diffusion) {
      throw ConfigError("optimize_over: expected none, a or D");
    }
    outer = detail::grid_for(cfg, *cfg.optimize_over);
    t.schema.push_back(detail::axis_column(*cfg.optimize_over));
  }
  for (Column c : std::vector<Column>{{"T_opt", "s"}, {"f_opt", "Hz"}, {"E_min", "m^-6"}, {"tolerance", "s"},
                                      {"evaluations", ""}}) {
    t.schema.push_back(c);
  }
  if (cfg.max_distortion) {
    t.schema.push_back({"T_low", "s"});
    t.schema.push_back({"T_high", "s"});
  }

  for (double value : outer) {
    Row& row = t.add_row();
    std::size_t c = 0;
    try {
      RunConfig point = cfg;
      if (cfg.optimize_over) {
        row.cells[c++] = value * detail::display_scale(*cfg.optimize_over);
        if (*cfg.optimize_over == SweepVariable::radius) point.a = value;
        else point.diffusion = value;
      }
      const DistortionInputs tmpl = detail::template_inputs(point);
      OptimumResult r;
      double period = 0.0;
      if (cfg.optimize_target == SweepVariable::frequency) {
        r = f_opt(tmpl, cfg.frequency_bracket);
        period = 1.0 / r.argmin;
        row.cells[c++] = period;
        row.cells[c++] = r.argmin;
        row.cells[c++] = r.min_distortion;
        row.cells[c++] = r.tolerance * period * period;
      } else {
        r = t_opt(tmpl, cfg.period_bracket);
        period = r.argmin;
        row.cells[c++] = period;
        row.cells[c++] = 1.0 / period;
        row.cells[c++] = r.min_distortion;
        row.cells[c++] = r.tolerance;
      }
      row.cells[c++] = static_cast<double>(r.evaluations);
      if (cfg.max_distortion) {
        const DistortionInterval iv = distortion_interval(tmpl, *cfg.max_distortion, cfg.period_bracket);
        row.cells[c++] = iv.period_lo;
        row.cells[c++] = iv.period_hi;
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  }
  return t;
}

/// Histograms of the shell and receiver concentrations from composed draws.
inline ResultTable cmd_distributions(const RunConfig& cfg) {
  ResultTable t;
  t.schema = {{"row_kind", ""},       {"bin_low", "m^-3"},   {"bin_high", "m^-3"}, {"count", ""},
              {"density", "m^3"},     {"mean", "m^-3"},      {"variance", "m^-6"}};
  detail::base_meta(t, cfg);
  const ReceiverGeometry geom = cfg.geometry();
  const DistributionPair pair = distribution_pair(geom, cfg.channel(), cfg.signal(), cfg.period, cfg.draws, cfg.seed,
                                                  {static_cast<std::size_t>(cfg.bins), cfg.threads, std::nullopt});
  auto emit = [&](const char* kind, const Histogram& h) {
    const double width = h.bin_width();
    const auto n = static_cast<double>(cfg.draws);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      Row& row = t.add_row();
      row.cells[0] = std::string(kind);
      row.cells[1] = h.lo + width * static_cast<double>(i);
      row.cells[2] = h.lo + width * static_cast<double>(i + 1);
      row.cells[3] = static_cast<double>(h.counts[i]);
      row.cells[4] = static_cast<double>(h.counts[i]) / (n * width);
    }
    Row& row = t.add_row();
    row.cells[0] = std::string(kind) + "_summary";
    row.cells[5] = h.mean;
    row.cells[6] = h.variance;
  };
  emit("shell", pair.shell);
  emit("receiver", pair.receiver);
  t.meta["summary"] = {{"capture_fraction", pair.fraction},
                       {"normalized_mean_gap", pair.normalized_mean_gap()},
                       {"clamped_draws", pair.clamped_draws}};
  return t;
}

/// One-dimensional random-walk concentration next to the analytic curve.
inline ResultTable cmd_trace(const RunConfig& cfg) {
  ResultTable t;
  t.schema = {{"t", "s"}, {"C_walk", "1/m"}, {"C_theory", "1/m"}};
  detail::base_meta(t, cfg);
  const ConcentrationTrace trace = concentration_trace(cfg.molecules, cfg.distance, cfg.channel(), cfg.walk(),
                                                       cfg.bin_width, cfg.t_max, cfg.seed, cfg.stride);
  if (trace.step_inconsistent) {
    detail::note(t, "delta_um differs from sqrt(2 D tau); the walk diffuses with D_eff = " +
                        format_double(cfg.walk().effective_diffusion()) + " m^2/s");
  }
  for (const auto& p : trace.points) {
    Row& row = t.add_row();
    row.cells[0] = p.time;
    row.cells[1] = p.walk;
    row.cells[2] = p.theory;
  }
  t.meta["summary"] = {{"peak_time_s", concentration_peak_time(cfg.distance, cfg.channel())}};
  return t;
}

inline ResultTable run_experiment(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::validate: return cmd_validate(cfg);
    case Experiment::sweep: return cmd_sweep(cfg);
    case Experiment::optimize: return cmd_optimize(cfg);
    case Experiment::distributions: return cmd_distributions(cfg);
    case Experiment::trace: return cmd_trace(cfg);
  }
  throw ConfigError("unknown experiment");
}

}  // namespace molrecon::cli
