#pragma once

/**
 * @file dspp_stats.hpp
 * @brief Moments of the absorbed-count process x(t), a doubly stochastic
 *        Poisson process whose intensity is (F(T)/T) s(t) for a Gaussian
 *        shell-count process s(t).
 *
 * The *_general functions integrate arbitrary mean / autocovariance
 * functions numerically; the stationary closed forms below specialise them
 * to m(t) = mu_s, R(t1, t2) = sigma_s^2 over one sampling period.
 */

#include <cmath>
#include <concepts>
#include <cstdint>

#include "molrecon/errors.hpp"
#include "molrecon/math_kernels.hpp"
#include "molrecon/quadrature.hpp"

namespace molrecon {

/// Gaussian statistics of the shell count s_i and its correlation with x_i.
class SignalModel {
 public:
  SignalModel(double mean, double variance, double correlation)
      : mean_(mean), variance_(variance), correlation_(correlation) {
    detail::require(std::isfinite(mean) && mean >= 0.0, "SignalModel: mu_s must be finite and >= 0");
    detail::require(std::isfinite(variance) && variance >= 0.0,
                    "SignalModel: sigma_s^2 must be finite and >= 0");
    detail::require(correlation >= 0.0 && correlation <= 1.0, "SignalModel: rho_sx must lie in [0, 1]");
  }

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  double stddev() const noexcept { return std::sqrt(variance_); }
  double correlation() const noexcept { return correlation_; }

  /// Below ~30 molecules the Gaussian approximation to the count is poor.
  bool gaussian_approximation_questionable() const noexcept { return mean_ < 30.0; }

 private:
  double mean_;
  double variance_;
  double correlation_;
};

struct StationaryMoments {
  double mean_x = 0.0;
  double var_x = 0.0;
  double second_moment_x = 0.0;
};

namespace detail {

inline void check_period_and_fraction(double period, double fraction) {
  require(period > 0.0 && std::isfinite(period), "sampling period must be finite and > 0");
  require(fraction >= 0.0 && fraction <= 1.0, "capture fraction must lie in [0, 1]");
}

inline void check_window(double t0, double t) {
  require(std::isfinite(t0) && std::isfinite(t) && t > t0, "integration window requires t > t0");
}

}  // namespace detail

/// Rate of the absorbed-count process for a shell count s: F s / T.
inline double intensity(double shell_count, double period, double fraction) {
  detail::check_period_and_fraction(period, fraction);
  detail::require(shell_count >= 0.0, "intensity: shell count must be >= 0");
  return fraction * shell_count / period;
}

/// E{x(t)} = (F/T) * integral of m(u) over [t0, t].
template <std::invocable<double> MeanFn>
double mean_x_general(double t0, double t, MeanFn&& mean_fn, double period, double fraction,
                      const QuadratureOptions& opt = {}) {
  detail::check_period_and_fraction(period, fraction);
  detail::check_window(t0, t);
  return fraction / period * integrate(mean_fn, t0, t, opt);
}

/**
 * @brief Var{x(t)} = 2 (F/T)^2 * integral of R over t0 <= t1 <= t2 <= t
 *        + (F/T) * integral of m over [t0, t].
 *
 * The double integral runs over the triangle only; the factor 2 carries the
 * symmetric half.
 */
template <std::invocable<double> MeanFn, std::invocable<double, double> CovFn>
double var_x_general(double t0, double t, MeanFn&& mean_fn, CovFn&& autocov_fn, double period,
                     double fraction, const QuadratureOptions& opt = {.relative_tolerance = 1e-8}) {
  detail::check_period_and_fraction(period, fraction);
  detail::check_window(t0, t);
  const double scale = fraction / period;
  const double cov = integrate_triangle(autocov_fn, t0, t, opt);
  return 2.0 * scale * scale * cov + scale * integrate(mean_fn, t0, t, opt);
}

/// E{x^2(t)} over an arbitrary window; Var + mean^2 from the general forms.
template <std::invocable<double> MeanFn, std::invocable<double, double> CovFn>
double second_moment_x_general(double t0, double t, MeanFn&& mean_fn, CovFn&& autocov_fn,
                               double period, double fraction,
                               const QuadratureOptions& opt = {.relative_tolerance = 1e-8}) {
  const double mean = mean_x_general(t0, t, mean_fn, period, fraction, opt);
  return var_x_general(t0, t, mean_fn, autocov_fn, period, fraction, opt) + mean * mean;
}

/**
 * @brief Second moment of the i-th sample x_i, window [iT, (i+1)T], under
 *        stationary statistics: F^2 sigma^2 + F mu + F^2 mu^2.
 */
inline double second_moment_x_sample(std::int64_t index, double period, double fraction,
                                     const SignalModel& sig) {
  detail::require(index >= 0, "second_moment_x_sample: sample index must be >= 0");
  detail::check_period_and_fraction(period, fraction);
  const double f = fraction;
  const double mu = sig.mean();
  return f * f * sig.variance() + f * mu + f * f * mu * mu;
}

inline StationaryMoments stationary_moments(double fraction, const SignalModel& sig) {
  detail::require(fraction >= 0.0 && fraction <= 1.0, "stationary_moments: capture fraction must lie in [0, 1]");
  StationaryMoments m;
  m.mean_x = fraction * sig.mean();
  m.var_x = fraction * fraction * sig.variance() + fraction * sig.mean();
  m.second_moment_x = m.var_x + m.mean_x * m.mean_x;
  return m;
}

inline StationaryMoments stationary_moments(double period, const ReceiverGeometry& geom,
                                            const ChannelParams& chan, const SignalModel& sig) {
  return stationary_moments(capture_fraction(period, geom, chan), sig);
}

}  // namespace molrecon
