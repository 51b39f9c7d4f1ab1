#pragma once

/**
 * @file optimizer.hpp
 * @brief Receiver design: optimum sampling period, receiver radius and
 *        sampling frequency, plus parameter sweeps over the distortion.
 *
 * All minimisation is derivative-free on mse_stationary: a coarse pre-scan
 * rejects non-unimodal brackets, then Brent's golden-section / parabolic
 * search refines the minimum.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "molrecon/distortion.hpp"
#include "molrecon/errors.hpp"
#include "molrecon/parallel.hpp"

namespace molrecon {

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

inline constexpr Bracket kDefaultPeriodBracket{1e-4, 0.25};   // s
inline constexpr Bracket kDefaultRadiusBracket{0.5e-6, 2e-6};  // m

struct OptimumResult {
  double argmin = 0.0;
  double min_distortion = 0.0;
  Bracket bracket;         ///< search interval as requested
  double tolerance = 0.0;  ///< width of the final Brent bracket
  int evaluations = 0;
};

struct MinimizerOptions {
  double abs_tolerance = 1e-7;
  int prescan_points = 64;
  int max_iterations = 500;
};

namespace detail {

struct Sample {
  double x;
  double f;
};

/// Interior and boundary local minima of a sampled curve; plateaus count once.
inline std::vector<double> local_minima(const std::vector<Sample>& pts) {
  std::vector<int> signs;
  std::vector<std::size_t> at;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = pts[i].f - pts[i - 1].f;
    if (d != 0.0) {
      signs.push_back(d > 0.0 ? 1 : -1);
      at.push_back(i);
    }
  }
  std::vector<double> minima;
  if (signs.empty()) return minima;
  if (signs.front() > 0) minima.push_back(pts.front().x);
  for (std::size_t k = 1; k < signs.size(); ++k) {
    if (signs[k - 1] < 0 && signs[k] > 0) minima.push_back(pts[at[k] - 1].x);
  }
  if (signs.back() < 0) minima.push_back(pts.back().x);
  return minima;
}

}  // namespace detail

/**
 * @brief Minimise a unimodal scalar function on [lo, hi].
 *
 * Throws AmbiguityError when the pre-scan finds more than one local minimum
 * (boundary minima included) and DegenerateError when the function is flat.
 */
template <std::invocable<double> Fn>
OptimumResult minimize_bracketed(Fn&& fn, Bracket bracket, const MinimizerOptions& opt = {}) {
  detail::require(std::isfinite(bracket.lo) && std::isfinite(bracket.hi) && bracket.lo <= bracket.hi,
                  "minimize_bracketed: invalid bracket");
  OptimumResult res;
  res.bracket = bracket;
  if (bracket.lo == bracket.hi) {
    res.argmin = bracket.lo;
    res.min_distortion = fn(bracket.lo);
    res.evaluations = 1;
    return res;
  }

  const int n = std::max(opt.prescan_points, 3);
  std::vector<detail::Sample> scan;
  scan.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = i == n - 1 ? bracket.hi : bracket.lo + bracket.width() * i / (n - 1);
    scan.push_back({x, fn(x)});
  }
  res.evaluations = n;

  auto [lo_it, hi_it] = std::minmax_element(scan.begin(), scan.end(),
                                            [](const auto& p, const auto& q) { return p.f < q.f; });
  const double span = hi_it->f - lo_it->f;
  const double scale = std::max(std::abs(hi_it->f), std::abs(lo_it->f));
  if (!std::isfinite(span)) throw NumericError("minimize_bracketed: non-finite objective in pre-scan");
  if (span <= 1e-15 * scale) throw DegenerateError("minimize_bracketed: objective is flat over the bracket");

  const auto minima = detail::local_minima(scan);
  if (minima.size() > 1) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "minimize_bracketed: objective is not unimodal on [" << bracket.lo << ", " << bracket.hi
        << "]; local minima near";
    for (double m : minima) msg << ' ' << m;
    throw AmbiguityError(msg.str(), minima);
  }

  const auto best = static_cast<std::size_t>(lo_it - scan.begin());
  double a = scan[best == 0 ? 0 : best - 1].x;
  double b = scan[std::min(best + 1, scan.size() - 1)].x;

  // Brent's method (golden section with parabolic interpolation).
  constexpr double golden = 0.3819660112501051;
  double x = lo_it->x, w = x, v = x;
  double fx = lo_it->f, fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = 1e-10 * std::abs(x) + 0.25 * opt.abs_tolerance;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

    bool golden_step = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x >= xm ? a : b) - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = fn(u);
    ++res.evaluations;
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w, fv = fw;
      w = x, fw = fx;
      x = u, fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w, fv = fw;
        w = u, fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u, fv = fu;
      }
    }
  }

  res.argmin = x;
  res.min_distortion = fx;
  res.tolerance = b - a;
  return res;
}

/// Optimum sampling period for fixed geometry, channel and signal.
inline OptimumResult t_opt(const DistortionInputs& tmpl, Bracket bracket = kDefaultPeriodBracket,
                           const MinimizerOptions& opt = {}) {
  detail::require(bracket.lo > 0.0, "t_opt: bracket must lie in T > 0");
  return minimize_bracketed([&](double T) { return mse_value(tmpl.with_period(T)); }, bracket, opt);
}

/**
 * @brief Optimum sampling frequency: the period optimum over the reciprocal
 *        bracket, reported as f = 1 / T_opt.
 */
inline OptimumResult f_opt(const DistortionInputs& tmpl, Bracket freq_bracket, const MinimizerOptions& opt = {}) {
  detail::require(freq_bracket.lo > 0.0 && freq_bracket.lo <= freq_bracket.hi,
                  "f_opt: frequency bracket must satisfy 0 < lo <= hi");
  OptimumResult res = t_opt(tmpl, {1.0 / freq_bracket.hi, 1.0 / freq_bracket.lo}, opt);
  const double period = res.argmin;
  res.argmin = 1.0 / period;
  res.tolerance = res.tolerance / (period * period);
  res.bracket = freq_bracket;
  return res;
}

/// Distortion as a function of receiver radius a with b tied to 2a.
inline double mse_tied_radius(double a, const SignalModel& sig, const ChannelParams& chan, double period) {
  return mse_value(DistortionInputs{ReceiverGeometry{a, 2.0 * a}, chan, sig, period});
}

/// Optimum receiver radius under b = 2a at fixed sampling period.
inline OptimumResult a_opt(const SignalModel& sig, const ChannelParams& chan, double period,
                           Bracket a_bracket = kDefaultRadiusBracket,
                           MinimizerOptions opt = {.abs_tolerance = 1e-11}) {
  detail::require(a_bracket.lo > 0.0, "a_opt: bracket must lie in a > 0");
  detail::require(period > 0.0, "a_opt: sampling period must be > 0");
  return minimize_bracketed([&](double a) { return mse_tied_radius(a, sig, chan, period); }, a_bracket, opt);
}

/// Sampling periods around T_opt whose distortion stays at or below a cap.
struct DistortionInterval {
  double period_lo = 0.0;
  double period_hi = 0.0;
  bool clipped_lo = false;  ///< the cap is still met at the bracket's lower end
  bool clipped_hi = false;
  OptimumResult optimum;
};

inline DistortionInterval distortion_interval(const DistortionInputs& tmpl, double max_distortion,
                                              Bracket bracket = kDefaultPeriodBracket, double abs_tolerance = 1e-9) {
  auto energy = [&](double T) { return mse_value(tmpl.with_period(T)); };
  DistortionInterval out;
  out.optimum = t_opt(tmpl, bracket);
  if (out.optimum.min_distortion > max_distortion) {
    throw DomainError("distortion_interval: cap is below the minimum achievable distortion");
  }
  // Bisect for the crossing E(T) = cap between inside (<= cap) and outside.
  auto crossing = [&](double inside, double outside) {
    while (std::abs(outside - inside) > abs_tolerance) {
      const double mid = 0.5 * (inside + outside);
      (energy(mid) <= max_distortion ? inside : outside) = mid;
    }
    return inside;
  };
  const double topt = out.optimum.argmin;
  if (energy(bracket.lo) <= max_distortion) {
    out.period_lo = bracket.lo;
    out.clipped_lo = true;
  } else {
    out.period_lo = crossing(topt, bracket.lo);
  }
  if (energy(bracket.hi) <= max_distortion) {
    out.period_hi = bracket.hi;
    out.clipped_hi = true;
  } else {
    out.period_hi = crossing(topt, bracket.hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepVariable { period, diffusion, radius, frequency };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::period: return "T";
    case SweepVariable::diffusion: return "D";
    case SweepVariable::radius: return "a";
    case SweepVariable::frequency: return "f";
  }
  return "?";
}

struct SweepAxis {
  SweepVariable variable = SweepVariable::period;
  std::vector<double> grid;  ///< SI units: s, m^2/s, m, Hz
};

struct SweepSpec {
  SweepAxis primary;
  std::optional<SweepAxis> secondary;  ///< surface sweeps, row-major over primary
  DistortionInputs fixed;
  bool tie_b_to_2a = false;
  bool with_t_opt = false;
  Bracket t_opt_bracket = kDefaultPeriodBracket;
};

struct SweepRow {
  double x = 0.0;
  std::optional<double> y;
  double distortion = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> t_opt;
  bool ok = true;
  std::string error;
};

namespace detail {

inline void validate_grid(const SweepAxis& axis) {
  require(!axis.grid.empty(), "sweep: grid must be non-empty");
  for (std::size_t i = 0; i < axis.grid.size(); ++i) {
    require(std::isfinite(axis.grid[i]) && axis.grid[i] > 0.0, "sweep: grid values must be finite and > 0");
    if (i > 0) require(axis.grid[i] > axis.grid[i - 1], "sweep: grid must be strictly increasing");
  }
}

struct PointParams {
  double a, b, D, T;
};

inline void apply(PointParams& p, SweepVariable v, double value, bool tie) {
  switch (v) {
    case SweepVariable::period: p.T = value; break;
    case SweepVariable::frequency: p.T = 1.0 / value; break;
    case SweepVariable::diffusion: p.D = value; break;
    case SweepVariable::radius:
      p.a = value;
      if (tie) p.b = 2.0 * value;
      break;
  }
}

}  // namespace detail

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  detail::require(n >= 1, "linspace: need at least one point");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

/**
 * @brief Evaluate the distortion over one or two grids.
 *
 * Invalid points (e.g. a >= b) become flagged rows; the sweep continues.
 * Rows are returned in grid order whatever the thread count.
 */
inline std::vector<SweepRow> sweep(const SweepSpec& spec, unsigned threads = 1) {
  detail::validate_grid(spec.primary);
  if (spec.secondary) detail::validate_grid(*spec.secondary);
  const std::size_t nx = spec.primary.grid.size();
  const std::size_t ny = spec.secondary ? spec.secondary->grid.size() : 1;
  std::vector<SweepRow> rows(nx * ny);

  const detail::PointParams base{spec.fixed.geom.receiver_radius(), spec.fixed.geom.reception_radius(),
                                 spec.fixed.chan.diffusion(), spec.fixed.period};
  if (spec.tie_b_to_2a && !(spec.primary.variable == SweepVariable::radius ||
                            (spec.secondary && spec.secondary->variable == SweepVariable::radius))) {
    // Tie applies to the fixed geometry too when a is not swept.
    detail::require(std::abs(base.b - 2.0 * base.a) <= 1e-12 * base.b, "sweep: b = 2a constraint violated by fixed geometry");
  }

  parallel_for(rows.size(), threads, [&](std::size_t k) {
    SweepRow& row = rows[k];
    const std::size_t i = k / ny;
    const std::size_t j = k % ny;
    detail::PointParams p = base;
    row.x = spec.primary.grid[i];
    detail::apply(p, spec.primary.variable, row.x, spec.tie_b_to_2a);
    if (spec.secondary) {
      row.y = spec.secondary->grid[j];
      detail::apply(p, spec.secondary->variable, *row.y, spec.tie_b_to_2a);
    }
    try {
      const DistortionInputs in{ReceiverGeometry{p.a, p.b}, ChannelParams{p.D}, spec.fixed.sig, p.T};
      row.distortion = mse_value(in);
      if (spec.with_t_opt) row.t_opt = t_opt(in, spec.t_opt_bracket).argmin;
    } catch (const std::exception& ex) {
      row.ok = false;
      row.error = ex.what();
    }
  });
  return rows;
}

}  // namespace molrecon
