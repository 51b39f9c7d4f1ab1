#pragma once

/**
 * @file distortion.hpp
 * @brief Mean-square error between the shell concentration s_i / (V_R - V_N)
 *        and the reconstructed concentration x_i / V_N.
 *
 * Units of the distortion are (molecules / m^3)^2, i.e. m^-6.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>

#include "molrecon/dspp_stats.hpp"
#include "molrecon/errors.hpp"
#include "molrecon/math_kernels.hpp"
#include "molrecon/quadrature.hpp"

namespace molrecon {

struct DistortionInputs {
  ReceiverGeometry geom;
  ChannelParams chan;
  SignalModel sig;
  double period;  ///< sampling period T [s]

  DistortionInputs(ReceiverGeometry g, ChannelParams c, SignalModel s, double T)
      : geom(g), chan(c), sig(s), period(T) {
    detail::require(std::isfinite(T) && T > 0.0, "DistortionInputs: sampling period must be > 0");
  }

  DistortionInputs with_period(double T) const { return {geom, chan, sig, T}; }
};

/// Total distortion and its three additive parts.
struct DistortionValue {
  double value = 0.0;
  double shell_term = 0.0;     ///< E{s^2} / (V_R - V_N)^2
  double cross_term = 0.0;     ///< -2 E{s x} / (V_N (V_R - V_N)), always <= 0
  double receiver_term = 0.0;  ///< E{x^2} / V_N^2
};

namespace detail {

inline DistortionValue assemble(double shell, double cross, double receiver) {
  return {shell + cross + receiver, shell, cross, receiver};
}

}  // namespace detail

/**
 * @brief Closed-form distortion for stationary shell statistics.
 *
 *   E = (s2 + mu^2) / Vs^2
 *     - [2 rho sigma sqrt(F (F s2 + mu)) + 2 F mu^2] / (V_N Vs)
 *     + F (F s2 + mu + F mu^2) / V_N^2
 *
 * with Vs = V_R - V_N and F the capture fraction over the period.
 */
inline DistortionValue mse_stationary(const DistortionInputs& in) {
  const double f = capture_fraction(in.period, in.geom, in.chan);
  const double vn = in.geom.receiver_volume();
  const double vs = in.geom.shell_volume();
  const double mu = in.sig.mean();
  const double s2 = in.sig.variance();
  const double sigma_x = std::sqrt(f * (f * s2 + mu));

  const double shell = (s2 + mu * mu) / (vs * vs);
  const double cross = -(2.0 * in.sig.correlation() * in.sig.stddev() * sigma_x + 2.0 * f * mu * mu) / (vn * vs);
  const double receiver = f * (f * s2 + mu + f * mu * mu) / (vn * vn);
  return detail::assemble(shell, cross, receiver);
}

inline double mse_value(const DistortionInputs& in) { return mse_stationary(in).value; }

/**
 * @brief Distortion of the i-th sample from arbitrary shell mean and
 *        autocovariance functions, integrated over [iT, (i+1)T].
 *
 * With m = mu_s and R = sigma_s^2 this reduces to mse_stationary.
 */
template <std::invocable<double> MeanFn, std::invocable<double, double> CovFn>
DistortionValue mse_general(std::int64_t index, const DistortionInputs& in, MeanFn&& mean_fn,
                            CovFn&& autocov_fn, const QuadratureOptions& opt = {.relative_tolerance = 1e-10}) {
  detail::require(index >= 0, "mse_general: sample index must be >= 0");
  const double T = in.period;
  const double t0 = static_cast<double>(index) * T;
  const double t1 = t0 + T;
  const double f = capture_fraction(T, in.geom, in.chan);
  const double vn = in.geom.receiver_volume();
  const double vs = in.geom.shell_volume();
  const double mu = in.sig.mean();
  const double s2 = in.sig.variance();

  const double mean_integral = integrate(mean_fn, t0, t1, opt);
  const double cov_integral = integrate_triangle(autocov_fn, t0, t1, opt);
  const double scale = f / T;
  const double mean_x = scale * mean_integral;
  const double var_x = std::max(0.0, 2.0 * scale * scale * cov_integral + mean_x);

  const double shell = (s2 + mu * mu) / (vs * vs);
  const double cross = -2.0 * (mu * mean_x + in.sig.correlation() * in.sig.stddev() * std::sqrt(var_x)) / (vs * vn);
  const double receiver = (var_x + mean_x * mean_x) / (vn * vn);
  return detail::assemble(shell, cross, receiver);
}

/// z = (b - a) / (4 sqrt(D T)), the erfc argument of the capture fraction.
inline double derivative_z(const DistortionInputs& in) {
  return (in.geom.reception_radius() - in.geom.receiver_radius()) / (4.0 * std::sqrt(in.chan.diffusion() * in.period));
}

/**
 * @brief Closed-form dE/dT as a three-term expression in
 *        z = (b - a) / (4 sqrt(D T)), evaluated term by term as written.
 *
 * Kept for comparison only; the optimizer differentiates mse_stationary
 * numerically instead.
 */
inline double dmse_dT_published(const DistortionInputs& in) {
  const double a = in.geom.receiver_radius();
  const double b = in.geom.reception_radius();
  const double D = in.chan.diffusion();
  const double T = in.period;
  const double mu = in.sig.mean();
  const double s2 = in.sig.variance();
  const double sigma = in.sig.stddev();
  const double rho = in.sig.correlation();

  const double dt = D * T;
  const double z = derivative_z(in);
  const double g = std::exp(-z * z);
  const double ez = erfc_exact(z);
  const double pi52 = std::pow(std::numbers::pi, 2.5);
  const double dt32 = std::pow(dt, 1.5);
  const double b3a3 = b * b * b - a * a * a;

  const double first = -9.0 * (b - a) * D * mu * mu * g / (16.0 * a * a * (a + b) * b3a3 * pi52 * dt32);
  const double second =
      (9.0 * (b * b - a * a) * D * mu * g + 36.0 * a * (b - a) * D * mu * mu * g * ez +
       36.0 * a * (b - a) * D * s2 * g * ez) /
      (32.0 * (a + b) * (a + b) * std::pow(a, 5) * pi52 * dt32);
  const double root = std::sqrt(2.0 * a * mu * (a + b) * ez + 4.0 * a * a * s2 * ez * ez);
  const double third =
      -(18.0 * rho * sigma * sigma * sigma * a * (b - a) * D * g * ez + 9.0 * (b * b - a * a) * D * mu * g +
        18.0 * a * (b - a) * s2 * D * ez) /
      (32.0 * a * a * pi52 * (a + b) * b3a3 * dt32 * root);
  return first + second + third;
}

/// Default central-difference step for derivatives in T.
inline double default_fd_step(double period) { return std::max(1e-6, 1e-6 * period); }

/// Central difference (E(T + h) - E(T - h)) / 2h of any scalar function of T.
template <std::invocable<double> Fn>
double central_difference(Fn&& fn, double x, double h) {
  detail::require(h > 0.0, "central_difference: step must be > 0");
  return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

/// dE/dT of mse_stationary by central differences.
inline double dmse_dT_fd(const DistortionInputs& in, double step = 0.0) {
  const double h = step > 0.0 ? step : default_fd_step(in.period);
  if (!(in.period - h > 0.0)) throw DomainError("dmse_dT_fd: T - h must be > 0");
  return central_difference([&](double T) { return mse_value(in.with_period(T)); }, in.period, h);
}

}  // namespace molrecon
