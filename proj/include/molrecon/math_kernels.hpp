#pragma once

/**
 * @file math_kernels.hpp
 * @brief Special functions and the capture / concentration formulas used by
 *        every other part of the library.
 *
 * Units are SI throughout: metres, seconds, m^2/s. One-dimensional
 * concentrations are molecules per metre.
 */

#include <cmath>
#include <numbers>

#include "molrecon/errors.hpp"

namespace molrecon {

/// Diffusion coefficient of the medium [m^2/s].
class ChannelParams {
 public:
  explicit ChannelParams(double diffusion) : diffusion_(diffusion) {
    detail::require(std::isfinite(diffusion) && diffusion > 0.0,
                    "ChannelParams: diffusion coefficient must be finite and > 0");
  }

  double diffusion() const noexcept { return diffusion_; }

 private:
  double diffusion_;
};

/**
 * @brief Absorbing receiver of radius a inside a reception sphere of radius b.
 *
 * The signal lives in the shell between the two spheres; the receiver volume
 * holds what has been absorbed.
 */
class ReceiverGeometry {
 public:
  ReceiverGeometry(double receiver_radius, double reception_radius)
      : a_(receiver_radius), b_(reception_radius) {
    detail::require(std::isfinite(a_) && std::isfinite(b_),
                    "ReceiverGeometry: radii must be finite");
    detail::require(a_ > 0.0 && a_ < b_, "ReceiverGeometry: require 0 < a < b");
  }

  double receiver_radius() const noexcept { return a_; }
  double reception_radius() const noexcept { return b_; }

  double receiver_volume() const noexcept { return sphere_volume(a_); }
  double reception_volume() const noexcept { return sphere_volume(b_); }
  double shell_volume() const noexcept { return reception_volume() - receiver_volume(); }

  /// Mean starting distance of a shell molecule from the receiver centre.
  double midpoint_radius() const noexcept { return 0.5 * (a_ + b_); }

 private:
  static double sphere_volume(double r) noexcept {
    return 4.0 / 3.0 * std::numbers::pi * r * r * r;
  }

  double a_;
  double b_;
};

/// Complementary error function; the canonical implementation used everywhere.
inline double erfc_exact(double x) {
  if (!std::isfinite(x)) throw DomainError("erfc_exact: non-finite argument");
  return std::erfc(x);
}

/// Coefficients of the two-parameter exponential erfc approximation.
struct TsayCoefficients {
  double c1 = 1.09500814703333;
  double c2 = 0.75651138383854;
};

/**
 * @brief erfc(x) ~ exp(-c1 x - c2 x^2), valid for x >= 0.
 *
 * Never substituted for erfc_exact implicitly; callers opt in.
 */
inline double erfc_tsay(double x, const TsayCoefficients& c = {}) {
  if (!(x >= 0.0)) throw DomainError("erfc_tsay: requires x >= 0");
  if (!std::isfinite(x)) throw DomainError("erfc_tsay: non-finite argument");
  return std::exp(-c.c1 * x - c.c2 * x * x);
}

/**
 * @brief Probability that a molecule released at distance y from the receiver
 *        centre has been absorbed by time t.
 *
 * F(y, t) = (a / y) erfc((y - a) / sqrt(4 D t)).
 * At t = 0 the limit values are returned: 1 on the surface, 0 outside it.
 */
inline double hitting_probability(double y, double t, const ReceiverGeometry& geom,
                                  const ChannelParams& chan) {
  const double a = geom.receiver_radius();
  if (!std::isfinite(y) || !std::isfinite(t)) throw DomainError("hitting_probability: non-finite input");
  if (y < a) throw DomainError("hitting_probability: starting point inside the receiver (y < a)");
  if (t < 0.0) throw DomainError("hitting_probability: negative time");
  if (y == a) return 1.0;
  if (t == 0.0) return 0.0;
  return (a / y) * erfc_exact((y - a) / std::sqrt(4.0 * chan.diffusion() * t));
}

/// Capture fraction over one sampling period: F evaluated at the shell midpoint.
inline double capture_fraction(double period, const ReceiverGeometry& geom, const ChannelParams& chan) {
  if (!(period > 0.0)) throw DomainError("capture_fraction: sampling period must be > 0");
  return hitting_probability(geom.midpoint_radius(), period, geom, chan);
}

/**
 * @brief One-dimensional point-source solution of the diffusion equation.
 *
 * C(r, t) = Q / sqrt(4 pi D t) * exp(-r^2 / (4 D t)), molecules per metre.
 * For fixed r the maximum over t is at r^2 / (2 D).
 */
inline double concentration_1d(double count, double r, double t, const ChannelParams& chan) {
  if (!(count >= 0.0)) throw DomainError("concentration_1d: molecule count must be >= 0");
  if (!(t > 0.0)) throw DomainError("concentration_1d: time must be > 0");
  const double four_dt = 4.0 * chan.diffusion() * t;
  return count / std::sqrt(std::numbers::pi * four_dt) * std::exp(-r * r / four_dt);
}

/// Time at which concentration_1d peaks for a fixed distance.
inline double concentration_peak_time(double r, const ChannelParams& chan) {
  return r * r / (2.0 * chan.diffusion());
}

}  // namespace molrecon
