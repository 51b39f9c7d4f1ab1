// Unit tests for the special functions and capture / concentration formulas.
//
// Reference values were computed with mpmath at 40 significant digits; the
// erfc sweep uses boost::multiprecision at 50 digits as an independent oracle.

#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <catch_amalgamated.hpp>

#include "molrecon/math_kernels.hpp"

using namespace molrecon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using big = boost::multiprecision::cpp_bin_float_50;

double erfc_oracle(double x) { return static_cast<double>(boost::math::erfc(big(x))); }

const ReceiverGeometry kNominal{1e-6, 2e-6};
const ChannelParams kSlow{1e-12};

}  // namespace

TEST_CASE("erfc_exact matches a 50-digit oracle", "[math][erfc]") {
  double worst = 0.0;
  for (int i = 0; i <= 2400; ++i) {
    const double x = -6.0 + 12.0 * i / 2400.0;
    const double ref = erfc_oracle(x);
    worst = std::max(worst, std::abs(erfc_exact(x) - ref) / ref);
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("erfc_exact reference points", "[math][erfc]") {
  CHECK(erfc_exact(0.0) == 1.0);
  CHECK_THAT(erfc_exact(1.0), WithinRel(0.1572992070502851306587793649173907407039, 1e-15));
  CHECK(erfc_exact(10.0) < 1e-40);
  CHECK_THAT(erfc_exact(10.0), WithinRel(2.088487583762544757000786294957788611561e-45, 1e-13));
}

TEST_CASE("erfc_exact is strictly decreasing", "[math][erfc]") {
  double prev = erfc_exact(-6.0);
  for (int i = 1; i <= 1200; ++i) {
    const double v = erfc_exact(-6.0 + 0.01 * i);
    // Near x = -6 the value sits within a few ulps of 2.
    CHECK(v <= prev);
    if (v > 0.0 && v < 1.9999) CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("erfc_exact rejects non-finite input", "[math][erfc]") {
  CHECK_THROWS_AS(erfc_exact(std::numeric_limits<double>::infinity()), DomainError);
  CHECK_THROWS_AS(erfc_exact(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST_CASE("erfc_tsay", "[math][erfc]") {
  CHECK(erfc_tsay(0.0) == 1.0);
  CHECK_THAT(erfc_tsay(1.0), WithinRel(0.1569984210215676564438964680700747721957, 1e-14));
  CHECK(std::abs(erfc_tsay(1.0) / erfc_exact(1.0) - 1.0) < 0.01);
  CHECK_THROWS_AS(erfc_tsay(-1e-9), DomainError);

  SECTION("coefficients survive a text round trip bit for bit") {
    const TsayCoefficients c;
    CHECK(std::strtod("1.09500814703333", nullptr) == c.c1);
    CHECK(std::strtod("0.75651138383854", nullptr) == c.c2);
  }

  SECTION("relative error within 1% up to x = 1.2, absolute error small to x = 3") {
    double worst_rel = 0.0;
    double worst_abs = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 3.0 * i / 999.0;
      const double approx = erfc_tsay(x);
      const double exact = erfc_exact(x);
      if (x <= 1.2) worst_rel = std::max(worst_rel, std::abs(approx / exact - 1.0));
      worst_abs = std::max(worst_abs, std::abs(approx - exact));
    }
    CHECK(worst_rel <= 0.01);
    CHECK(worst_abs <= 2.5e-3);
  }
}

TEST_CASE("ReceiverGeometry invariants", "[math][geometry]") {
  CHECK_THROWS_AS(ReceiverGeometry(2e-6, 1e-6), DomainError);
  CHECK_THROWS_AS(ReceiverGeometry(1e-6, 1e-6), DomainError);
  CHECK_THROWS_AS(ReceiverGeometry(0.0, 1e-6), DomainError);
  CHECK_THROWS_AS(ChannelParams(0.0), DomainError);
  CHECK_THROWS_AS(ChannelParams(std::numeric_limits<double>::infinity()), DomainError);

  const double pi = 3.14159265358979323846;
  CHECK_THAT(kNominal.receiver_volume(), WithinRel(4.0 / 3.0 * pi * 1e-18, 1e-15));
  CHECK_THAT(kNominal.reception_volume(), WithinRel(4.0 / 3.0 * pi * 8e-18, 1e-15));
  CHECK(kNominal.shell_volume() > 0.0);
  CHECK(kNominal.midpoint_radius() == 1.5e-6);
}

TEST_CASE("hitting_probability", "[math][hitting]") {
  SECTION("on the surface it is certain") {
    CHECK(hitting_probability(1e-6, 0.01, kNominal, kSlow) == 1.0);
    CHECK(hitting_probability(1e-6, 0.0, kNominal, kSlow) == 1.0);
  }
  SECTION("limit t -> 0 outside the surface") {
    CHECK(hitting_probability(1.5e-6, 0.0, kNominal, kSlow) == 0.0);
    CHECK(hitting_probability(1.5e-6, 1e-9, kNominal, kSlow) < 1e-100);
  }
  SECTION("reference value") {
    CHECK_THAT(hitting_probability(1.5e-6, 0.1, kNominal, kSlow),
               WithinRel(0.1757016515219818202491839642982509855661, 1e-14));
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(hitting_probability(0.9e-6, 0.1, kNominal, kSlow), DomainError);
    CHECK_THROWS_AS(hitting_probability(1.5e-6, -0.1, kNominal, kSlow), DomainError);
  }
}

TEST_CASE("hitting_probability is bounded and monotone (fuzz)", "[math][hitting][property]") {
  std::mt19937_64 gen(20190130);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 5000; ++n) {
    const double a = 1e-7 + 5e-6 * u(gen);
    const ReceiverGeometry geom{a, 3.0 * a};
    const ChannelParams chan{std::pow(10.0, -13.0 + 4.0 * u(gen))};
    const double y = a * (1.0 + 99.0 * u(gen));
    const double t = 1e3 * u(gen) + 1e-9;
    const double p = hitting_probability(y, t, geom, chan);
    REQUIRE(p >= 0.0);
    REQUIRE(p <= 1.0);
    // Nondecreasing in t, nonincreasing in y.
    REQUIRE(hitting_probability(y, t * 1.01, geom, chan) >= p);
    REQUIRE(hitting_probability(y * 1.01, t, geom, chan) <= p);
  }
}

TEST_CASE("dF/dt >= 0 by finite differences on a grid", "[math][hitting][property]") {
  for (int iy = 0; iy < 20; ++iy) {
    const double y = 1e-6 * (1.0 + 0.25 * iy);
    for (int it = 1; it <= 200; ++it) {
      const double t = 1e-3 * it;
      const double h = 1e-6 * t;
      const double d = (hitting_probability(y, t + h, kNominal, kSlow) - hitting_probability(y, t - h, kNominal, kSlow)) / (2 * h);
      REQUIRE(d >= 0.0);
    }
  }
}

TEST_CASE("capture_fraction is the midpoint hitting probability", "[math][capture]") {
  CHECK(capture_fraction(0.1, kNominal, kSlow) == hitting_probability(1.5e-6, 0.1, kNominal, kSlow));
  CHECK_THAT(capture_fraction(0.25, kNominal, kSlow), WithinRel(0.319666748124635641544835564072023647509, 1e-14));
  CHECK(capture_fraction(0.05, kNominal, kSlow) <= capture_fraction(0.06, kNominal, kSlow));
  CHECK_THROWS_AS(capture_fraction(0.0, kNominal, kSlow), DomainError);
  CHECK_THROWS_AS(capture_fraction(-1.0, kNominal, kSlow), DomainError);
}

TEST_CASE("concentration_1d", "[math][concentration]") {
  const ChannelParams fast{1e-11};
  CHECK(concentration_1d(0.0, 1e-5, 3.0, fast) == 0.0);
  CHECK_THROWS_AS(concentration_1d(1e4, 1e-5, 0.0, fast), DomainError);
  CHECK_THROWS_AS(concentration_1d(-1.0, 1e-5, 1.0, fast), DomainError);

  SECTION("peak time r^2 / 2D") {
    CHECK_THAT(concentration_peak_time(1e-5, fast), WithinRel(5.0, 1e-14));
    // Stationarity of ln C: -1/(2t) + r^2/(4 D t^2) = 0 at the peak.
    double best_t = 0.0, best_c = -1.0;
    for (int i = 1; i <= 20000; ++i) {
      const double t = 1e-3 * i;
      const double c = concentration_1d(1e4, 1e-5, t, fast);
      if (c > best_c) best_c = c, best_t = t;
    }
    CHECK_THAT(best_t, WithinAbs(5.0, 1e-3));
  }

  SECTION("conserves molecules") {
    // Composite Simpson over +-12 standard deviations.
    const double t = 2.0;
    const double sd = std::sqrt(2.0 * fast.diffusion() * t);
    const int n = 20000;
    const double lo = -12 * sd, hi = 12 * sd, h = (hi - lo) / n;
    double sum = concentration_1d(1e4, lo, t, fast) + concentration_1d(1e4, hi, t, fast);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * concentration_1d(1e4, lo + i * h, t, fast);
    CHECK_THAT(sum * h / 3.0, WithinRel(1e4, 1e-3));
  }
}
