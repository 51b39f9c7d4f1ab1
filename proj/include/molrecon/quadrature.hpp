#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "molrecon/errors.hpp"

namespace molrecon {

struct QuadratureOptions {
  double relative_tolerance = 1e-9;
  unsigned max_depth = 15;
};

namespace detail {

[[noreturn]] inline void quadrature_failure(const char* what, double lo, double hi, double value,
                                            double error, double tol) {
  std::ostringstream msg;
  msg.precision(17);
  msg << what << ": no convergence on [" << lo << ", " << hi << "], estimate " << value
      << ", error " << error << ", requested relative tolerance " << tol;
  throw NumericError(msg.str());
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (15/31) integral of f over [lo, hi].
template <class F>
double integrate(F&& f, double lo, double hi, const QuadratureOptions& opt = {}) {
  using boost::math::quadrature::gauss_kronrod;
  // Integrate over the unit interval: boost compares its (unscaled) error
  // estimate against a scaled tolerance, so short intervals would otherwise
  // be bisected to max_depth for nothing.
  const double width = hi - lo;
  auto unit = [&](double u) { return f(lo + width * u); };
  double error = 0.0;
  const double value =
      width * gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, opt.max_depth, opt.relative_tolerance, &error);
  error *= std::abs(width);
  if (!std::isfinite(value)) detail::quadrature_failure("integrate", lo, hi, value, error, opt.relative_tolerance);
  // Absolute floor so that integrals of (near) zero functions converge.
  const double allowed = opt.relative_tolerance * std::max(std::abs(value), 1e-300) + 1e-300;
  if (error > allowed && error > 1e3 * std::numeric_limits<double>::epsilon() * std::abs(value)) {
    detail::quadrature_failure("integrate", lo, hi, value, error, opt.relative_tolerance);
  }
  return value;
}

/// Integral of g(t1, t2) over the triangle lo <= t1 <= t2 <= hi.
template <class G>
double integrate_triangle(G&& g, double lo, double hi, const QuadratureOptions& opt = {}) {
  QuadratureOptions inner = opt;
  inner.relative_tolerance = opt.relative_tolerance * 0.1;
  auto outer = [&](double t2) {
    if (t2 <= lo) return 0.0;
    return integrate([&](double t1) { return g(t1, t2); }, lo, t2, inner);
  };
  return integrate(outer, lo, hi, opt);
}

}  // namespace molrecon
