#pragma once

/**
 * @file montecarlo.hpp
 * @brief Seeded random-walk simulation of shell molecules absorbed by the
 *        receiver, and Monte Carlo estimates of the distortion.
 *
 * Every trial draws from its own engine derived from (seed, trial index),
 * so results do not depend on how trials are scheduled across threads.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "molrecon/distortion.hpp"
#include "molrecon/dspp_stats.hpp"
#include "molrecon/errors.hpp"
#include "molrecon/math_kernels.hpp"
#include "molrecon/parallel.hpp"
#include "molrecon/rng.hpp"

namespace molrecon {

enum class StepLaw {
  lattice,   ///< +-delta on each axis with probability 1/2
  gaussian,  ///< Normal(0, delta^2) on each axis
};

class WalkParams {
 public:
  /// Step length from the channel: delta = sqrt(2 D tau).
  static WalkParams derived(const ChannelParams& chan, double step_time, StepLaw law = StepLaw::lattice) {
    detail::require(step_time > 0.0 && std::isfinite(step_time), "WalkParams: step time must be > 0");
    return WalkParams(step_time, std::sqrt(2.0 * chan.diffusion() * step_time), law);
  }

  static WalkParams explicit_step(double step_time, double step_length, StepLaw law = StepLaw::lattice) {
    detail::require(step_time > 0.0 && std::isfinite(step_time), "WalkParams: step time must be > 0");
    detail::require(step_length > 0.0 && std::isfinite(step_length), "WalkParams: step length must be > 0");
    return WalkParams(step_time, step_length, law);
  }

  double step_time() const noexcept { return tau_; }
  double step_length() const noexcept { return delta_; }
  StepLaw law() const noexcept { return law_; }

  /// Diffusion coefficient the walk actually realises, delta^2 / (2 tau).
  double effective_diffusion() const noexcept { return delta_ * delta_ / (2.0 * tau_); }

  /// Steps coarser than a/10 can jump across the absorber surface.
  bool tunneling_risk(const ReceiverGeometry& geom) const noexcept {
    return delta_ > geom.receiver_radius() / 10.0;
  }

 private:
  WalkParams(double tau, double delta, StepLaw law) : tau_(tau), delta_(delta), law_(law) {}

  double tau_;
  double delta_;
  StepLaw law_;
};

/// Number of whole steps in a period; the remainder is dropped.
struct StepCount {
  std::int64_t steps = 0;
  bool truncated = false;
};

inline StepCount steps_for_period(double period, double step_time) {
  detail::require(period >= 0.0 && step_time > 0.0, "steps_for_period: invalid period or step time");
  const double ratio = period / step_time;
  const auto steps = static_cast<std::int64_t>(std::floor(ratio * (1.0 + 1e-12)));
  return {steps, std::abs(static_cast<double>(steps) - ratio) > 1e-9 * std::max(1.0, ratio)};
}

struct TrialRecord {
  std::int64_t s_initial = 0;
  std::int64_t x_absorbed = 0;
};

struct SignalDraw {
  std::int64_t count = 0;
  bool clamped = false;
};

/// Shell count: Normal(mu_s, sigma_s^2) rounded to the nearest integer, clamped at 0.
inline SignalDraw sample_signal(const SignalModel& sig, Engine& eng) {
  if (sig.variance() == 0.0) return {static_cast<std::int64_t>(std::llround(sig.mean())), false};
  std::normal_distribution<double> normal(sig.mean(), sig.stddev());
  const double v = std::round(normal(eng));
  if (v < 0.0) return {0, true};
  return {static_cast<std::int64_t>(v), false};
}

/// Absorbed count for a given shell count: Poisson with mean F * s.
inline std::int64_t sample_reconstruction(std::int64_t shell_count, double fraction, Engine& eng) {
  detail::require(shell_count >= 0, "sample_reconstruction: shell count must be >= 0");
  detail::require(fraction >= 0.0 && fraction <= 1.0, "sample_reconstruction: fraction must lie in [0, 1]");
  const double mean = fraction * static_cast<double>(shell_count);
  if (mean == 0.0) return 0;
  std::poisson_distribution<std::int64_t> poisson(mean);
  return poisson(eng);
}

struct TrialOptions {
  /// Overrides the (a + b) / 2 starting radius; used by tests.
  std::optional<double> start_radius;
};

inline constexpr std::int64_t kNeverAbsorbed = -1;

/**
 * @brief Walk `count` molecules for up to `max_steps` steps and return the
 *        step at which each was absorbed (kNeverAbsorbed otherwise).
 *
 * Molecules start uniformly on the sphere of the starting radius. The
 * absorption test r <= a runs at step 0 and after every full step; there is
 * no outer boundary, so molecules leaving the reception sphere keep walking.
 */
inline std::vector<std::int64_t> first_hit_steps(const ReceiverGeometry& geom, const WalkParams& walk,
                                                 std::int64_t count, std::int64_t max_steps, Engine& eng,
                                                 const TrialOptions& opt = {}) {
  detail::require(count >= 0 && max_steps >= 0, "first_hit_steps: counts must be >= 0");
  const double a = geom.receiver_radius();
  const double a2 = a * a;
  const double start = opt.start_radius.value_or(geom.midpoint_radius());
  detail::require(start >= a, "first_hit_steps: start radius inside the receiver");
  const double delta = walk.step_length();
  // Upper bound on distance covered per step (lattice: sqrt(3) delta).
  const double reach_per_step = walk.law() == StepLaw::lattice ? std::sqrt(3.0) * delta : 0.0;

  std::vector<std::int64_t> hits(static_cast<std::size_t>(count), kNeverAbsorbed);
  BitSource bits(eng);
  std::normal_distribution<double> normal(0.0, delta);

  for (auto& hit : hits) {
    const double cos_theta = 2.0 * uniform01(eng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform01(eng);
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    double x = start * sin_theta * std::cos(phi);
    double y = start * sin_theta * std::sin(phi);
    double z = start * cos_theta;
    if (start <= a || x * x + y * y + z * z <= a2) {
      hit = 0;
      continue;
    }
    for (std::int64_t step = 1; step <= max_steps; ++step) {
      if (walk.law() == StepLaw::lattice) {
        const std::uint64_t b3 = bits.take(3);
        x += (b3 & 1u) ? delta : -delta;
        y += (b3 & 2u) ? delta : -delta;
        z += (b3 & 4u) ? delta : -delta;
      } else {
        x += normal(eng);
        y += normal(eng);
        z += normal(eng);
      }
      const double r2 = x * x + y * y + z * z;
      if (r2 <= a2) {
        hit = step;
        break;
      }
      if (reach_per_step > 0.0) {
        // Too far out to reach the surface in the steps that remain.
        const double gap = std::sqrt(r2) - a;
        if (gap > reach_per_step * static_cast<double>(max_steps - step)) break;
      }
    }
  }
  return hits;
}

/// One trial: s_count molecules walking for floor(T / tau) steps.
inline TrialRecord run_trial(const ReceiverGeometry& geom, const WalkParams& walk, std::int64_t s_count,
                             double period, Engine& eng, const TrialOptions& opt = {}) {
  detail::require(s_count >= 0, "run_trial: molecule count must be >= 0");
  detail::require(period > 0.0, "run_trial: period must be > 0");
  const StepCount sc = steps_for_period(period, walk.step_time());
  const auto hits = first_hit_steps(geom, walk, s_count, sc.steps, eng, opt);
  TrialRecord rec{s_count, 0};
  for (auto h : hits) rec.x_absorbed += (h != kNeverAbsorbed) ? 1 : 0;
  return rec;
}

enum class SignalMode {
  fixed_mean,  ///< every trial places round(mu_s) molecules
  gaussian,    ///< s_i drawn by sample_signal
};

struct McOptions {
  SignalMode signal_mode = SignalMode::fixed_mean;
  unsigned threads = 1;
};

struct McEstimate {
  double period = 0.0;
  double distortion = 0.0;
  double std_error = 0.0;
  std::int64_t n_trials = 0;
  std::optional<double> rho_empirical;  ///< undefined when s or x has no spread
  double mean_absorbed = 0.0;
  double mean_shell = 0.0;
};

struct McCurve {
  std::vector<McEstimate> points;
  std::vector<StepCount> steps;  ///< per period, after truncation to whole steps
  std::int64_t clamped_draws = 0;
};

namespace detail {

inline std::optional<double> correlation(std::span<const double> s, std::span<const double> x) {
  const auto n = static_cast<double>(s.size());
  double ms = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mx += x[i];
  }
  ms /= n;
  mx /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxx += (s[i] - ms) * (s[i] - ms);
    syy += (x[i] - mx) * (x[i] - mx);
    sxy += (s[i] - ms) * (x[i] - mx);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

/**
 * @brief Monte Carlo distortion mean over trials of (s_i / (V_R - V_N) - x_i / V_N)^2
 *        for every period on a grid.
 *
 * Each trial's molecules are walked once up to the longest period; x_i(T)
 * counts those absorbed within floor(T / tau) steps. The estimate at any
 * period is therefore the same as a single-period run with the same seed.
 */
inline McCurve estimate_distortion_curve(const ReceiverGeometry& geom, const WalkParams& walk,
                                         const SignalModel& sig, std::span<const double> periods,
                                         std::int64_t n_trials, std::uint64_t seed, const McOptions& opt = {}) {
  detail::require(n_trials >= 1, "estimate_distortion: need at least one trial");
  detail::require(!periods.empty(), "estimate_distortion: need at least one period");
  McCurve curve;
  std::int64_t max_steps = 0;
  for (double T : periods) {
    detail::require(T > 0.0 && std::isfinite(T), "estimate_distortion: periods must be > 0");
    curve.steps.push_back(steps_for_period(T, walk.step_time()));
    max_steps = std::max(max_steps, curve.steps.back().steps);
  }
  const std::size_t np = periods.size();
  const auto nt = static_cast<std::size_t>(n_trials);
  std::vector<double> shell(nt);
  std::vector<double> absorbed(nt * np);
  std::vector<unsigned char> clamped(nt, 0);

  parallel_for(nt, opt.threads, [&](std::size_t k) {
    Engine eng = make_engine({seed, k});
    std::int64_t s = 0;
    if (opt.signal_mode == SignalMode::gaussian) {
      const SignalDraw d = sample_signal(sig, eng);
      s = d.count;
      clamped[k] = d.clamped ? 1 : 0;
    } else {
      s = std::llround(sig.mean());
    }
    auto hits = first_hit_steps(geom, walk, s, max_steps, eng);
    std::sort(hits.begin(), hits.end());
    shell[k] = static_cast<double>(s);
    for (std::size_t j = 0; j < np; ++j) {
      const std::int64_t limit = curve.steps[j].steps;
      const auto absorbed_by = std::count_if(hits.begin(), hits.end(),
                                             [limit](std::int64_t h) { return h != kNeverAbsorbed && h <= limit; });
      absorbed[k * np + j] = static_cast<double>(absorbed_by);
    }
  });

  const double vs = geom.shell_volume();
  const double vn = geom.receiver_volume();
  const auto n = static_cast<double>(nt);
  for (auto c : clamped) curve.clamped_draws += c;
  std::vector<double> err(nt), xs(nt);
  for (std::size_t j = 0; j < np; ++j) {
    double sum = 0.0, sum_x = 0.0, sum_s = 0.0;
    for (std::size_t k = 0; k < nt; ++k) {
      xs[k] = absorbed[k * np + j];
      const double e = shell[k] / vs - xs[k] / vn;
      err[k] = e * e;
      sum += err[k];
      sum_x += xs[k];
      sum_s += shell[k];
    }
    McEstimate est;
    est.period = periods[j];
    est.n_trials = n_trials;
    est.distortion = sum / n;
    double ss = 0.0;
    for (double e : err) ss += (e - est.distortion) * (e - est.distortion);
    est.std_error = nt > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    est.rho_empirical = detail::correlation(shell, xs);
    est.mean_absorbed = sum_x / n;
    est.mean_shell = sum_s / n;
    curve.points.push_back(est);
  }
  return curve;
}

inline McEstimate estimate_distortion(const ReceiverGeometry& geom, const WalkParams& walk, const SignalModel& sig,
                                      double period, std::int64_t n_trials, std::uint64_t seed,
                                      const McOptions& opt = {}) {
  const double periods[] = {period};
  return estimate_distortion_curve(geom, walk, sig, periods, n_trials, seed, opt).points.front();
}

// ---------------------------------------------------------------------------
// Distributions of the shell and reconstructed concentrations
// ---------------------------------------------------------------------------

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> counts;
  double mean = 0.0;
  double variance = 0.0;

  double bin_width() const noexcept { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

namespace detail {

inline Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  h.lo = *mn;
  h.hi = *mx > *mn ? *mx : *mn + 1.0;
  const double width = (h.hi - h.lo) / static_cast<double>(bins);
  double sum = 0.0;
  for (double v : values) {
    auto idx = static_cast<std::size_t>((v - h.lo) / width);
    ++h.counts[std::min(idx, bins - 1)];
    sum += v;
  }
  const auto n = static_cast<double>(values.size());
  h.mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - h.mean) * (v - h.mean);
  h.variance = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return h;
}

}  // namespace detail

struct DistributionPair {
  Histogram shell;     ///< s_i / (V_R - V_N) [m^-3]
  Histogram receiver;  ///< x_i / V_N [m^-3]
  double fraction = 0.0;
  std::int64_t clamped_draws = 0;

  /// |mean_s - mean_x| / mean_s of the two concentrations.
  double normalized_mean_gap() const { return std::abs(shell.mean - receiver.mean) / shell.mean; }
};

struct DistributionOptions {
  std::size_t bins = 60;
  unsigned threads = 1;
  std::optional<double> fraction_override;  ///< replaces F(T), e.g. to force full capture
};

/// Raw composed draws: s_i ~ Gaussian, x_i ~ Poisson(F s_i).
struct DsppDraws {
  std::vector<std::int64_t> shell;
  std::vector<std::int64_t> absorbed;
  std::int64_t clamped = 0;
};

inline DsppDraws draw_dspp(const SignalModel& sig, double fraction, std::int64_t n_draws, std::uint64_t seed,
                           unsigned threads = 1) {
  detail::require(n_draws >= 1, "draw_dspp: need at least one draw");
  constexpr std::size_t block = 1 << 16;
  const auto n = static_cast<std::size_t>(n_draws);
  const std::size_t blocks = (n + block - 1) / block;
  DsppDraws out;
  out.shell.resize(n);
  out.absorbed.resize(n);
  std::vector<std::int64_t> clamps(blocks, 0);
  parallel_for(blocks, threads, [&](std::size_t b) {
    Engine eng = make_engine({seed, b});
    const std::size_t end = std::min(n, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      const SignalDraw d = sample_signal(sig, eng);
      clamps[b] += d.clamped ? 1 : 0;
      out.shell[i] = d.count;
      out.absorbed[i] = sample_reconstruction(d.count, fraction, eng);
    }
  });
  for (auto c : clamps) out.clamped += c;
  return out;
}

inline DistributionPair distribution_pair(const ReceiverGeometry& geom, const ChannelParams& chan,
                                          const SignalModel& sig, double period, std::int64_t n_draws = 1'000'000,
                                          std::uint64_t seed = 1, const DistributionOptions& opt = {}) {
  detail::require(opt.bins >= 1, "distribution_pair: need at least one bin");
  DistributionPair out;
  out.fraction = opt.fraction_override.value_or(capture_fraction(period, geom, chan));
  const DsppDraws d = draw_dspp(sig, out.fraction, n_draws, seed, opt.threads);
  out.clamped_draws = d.clamped;
  const double vs = geom.shell_volume();
  const double vn = geom.receiver_volume();
  std::vector<double> cs(d.shell.size()), cx(d.absorbed.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    cs[i] = static_cast<double>(d.shell[i]) / vs;
    cx[i] = static_cast<double>(d.absorbed[i]) / vn;
  }
  out.shell = detail::make_histogram(cs, opt.bins);
  out.receiver = detail::make_histogram(cx, opt.bins);
  return out;
}

// ---------------------------------------------------------------------------
// One-dimensional concentration trace
// ---------------------------------------------------------------------------

struct TracePoint {
  double time = 0.0;
  double walk = 0.0;    ///< molecules per metre in the counting window
  double theory = 0.0;  ///< concentration_1d at the same time
};

struct ConcentrationTrace {
  std::vector<TracePoint> points;
  /// The step length differs from sqrt(2 D tau) for the channel's D.
  bool step_inconsistent = false;
};

/**
 * @brief Q molecules released at the origin of a line, each stepping +-delta
 *        every tau; at every step the concentration at distance r is the
 *        number inside [r - w/2, r + w/2] divided by w.
 */
inline ConcentrationTrace concentration_trace(std::int64_t count, double r, const ChannelParams& chan,
                                              const WalkParams& walk, double bin_width, double t_max,
                                              std::uint64_t seed, std::int64_t stride = 1) {
  detail::require(count >= 0, "concentration_trace: molecule count must be >= 0");
  detail::require(bin_width > 0.0, "concentration_trace: bin width must be > 0");
  detail::require(t_max > 0.0, "concentration_trace: t_max must be > 0");
  detail::require(stride >= 1, "concentration_trace: stride must be >= 1");
  ConcentrationTrace out;
  const double derived = std::sqrt(2.0 * chan.diffusion() * walk.step_time());
  out.step_inconsistent = std::abs(walk.step_length() - derived) > 1e-3 * walk.step_length();

  const double delta = walk.step_length();
  const auto steps = steps_for_period(t_max, walk.step_time()).steps;
  std::vector<std::int32_t> pos(static_cast<std::size_t>(count), 0);
  Engine eng = make_engine({seed, 0});
  BitSource bits(eng);
  const double lo = r - 0.5 * bin_width;
  const double hi = r + 0.5 * bin_width;
  for (std::int64_t n = 1; n <= steps; ++n) {
    std::int64_t inside = 0;
    for (auto& p : pos) {
      p += bits.take(1) ? 1 : -1;
      const double xpos = static_cast<double>(p) * delta;
      inside += (xpos >= lo && xpos <= hi) ? 1 : 0;
    }
    if (n % stride != 0) continue;
    const double t = static_cast<double>(n) * walk.step_time();
    out.points.push_back({t, static_cast<double>(inside) / bin_width,
                          concentration_1d(static_cast<double>(count), r, t, chan)});
  }
  return out;
}

}  // namespace molrecon
