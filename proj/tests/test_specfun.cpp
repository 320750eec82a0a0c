#include <doctest.h>

#include "lpscat/specfun.hpp"

#include <cmath>

using namespace lpscat;

namespace {

// Ascending series for J0 and Y0.
cplx hankel0_series(double x) {
  const double gamma = 0.57721566490153286061;
  const double q = 0.25 * x * x;
  double term = 1.0, j0 = 1.0, ysum = 0.0, harmonic = 0.0;
  for (int k = 1; k < 80; ++k) {
    term *= -q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    j0 += term;
    ysum -= term * harmonic;
  }
  const double y0 = 2.0 / pi * ((std::log(0.5 * x) + gamma) * j0 + ysum);
  return {j0, y0};
}

cplx hankel0_asymptotic(double x) {
  const cplx s = 1.0 - I / (8.0 * x) - 9.0 / (128.0 * x * x) + 225.0 * I / (3072.0 * x * x * x);
  return std::sqrt(2.0 / (pi * x)) * std::exp(I * (x - pi / 4.0)) * s;
}

} // namespace

TEST_CASE("Hankel H0 against the ascending series") {
  for (double x : {0.01, 0.3, 1.0, 2.5, 4.0, 6.0}) {
    const cplx h = hankel0_first(x);
    const cplx s = hankel0_series(x);
    CHECK(std::abs(h - s) < 1e-12 * std::max(1.0, std::abs(s)));
  }
}

TEST_CASE("Hankel H0 against the large-argument expansion") {
  for (double x : {60.0, 150.0, 400.0}) {
    const cplx h = hankel0_first(x);
    CHECK(std::abs(h - hankel0_asymptotic(x)) < 1e-8 * std::abs(h));
  }
}

TEST_CASE("Hankel Wronskian and derivative relation") {
  for (double x : {0.05, 0.7, 3.3, 12.0, 45.0}) {
    const cplx h0 = hankel0_first(x), h1 = hankel1_first(x);
    // J1 Y0 - J0 Y1 = 2 / (pi x)
    const double wr = -std::imag(std::conj(h0) * h1);
    CHECK(wr == doctest::Approx(2.0 / (pi * x)).epsilon(1e-12));
    const double e = 1e-4 * std::min(1.0, x);
    const cplx dh = (hankel0_first(x + e) - hankel0_first(x - e)) / (2.0 * e);
    CHECK(std::abs(dh + h1) < 1e-7 * std::abs(h1));
  }
}

TEST_CASE("Hankel H0 solves Bessel's equation") {
  for (double x : {0.5, 2.0, 9.0}) {
    const double e = 1e-3;
    const cplx h = hankel0_first(x);
    const cplx d1 = (hankel0_first(x + e) - hankel0_first(x - e)) / (2.0 * e);
    const cplx d2 = (hankel0_first(x + e) - 2.0 * h + hankel0_first(x - e)) / (e * e);
    CHECK(std::abs(d2 + d1 / x + h) < 1e-5);
  }
}

TEST_CASE("Hankel rejects non-positive arguments") {
  CHECK_THROWS_AS(hankel0_first(0.0), DomainError);
  CHECK_THROWS_AS(hankel1_first(-1.0), DomainError);
}

TEST_CASE("branch_sqrt takes the upper branch on the negative real axis") {
  CHECK(std::abs(branch_sqrt(cplx(4.0, 0.0)) - 2.0) < 1e-15);
  CHECK(std::abs(branch_sqrt(cplx(-4.0, 0.0)) - 2.0 * I) < 1e-15);
  for (double th = -0.49 * pi; th < 1.5 * pi; th += 0.1) {
    const cplx z = std::polar(2.0, th);
    const cplx s = branch_sqrt(z);
    CHECK(std::abs(s * s - z) < 1e-14);
    CHECK(std::arg(s) >= -pi / 4.0 - 1e-14);
    CHECK(std::arg(s) <= 3.0 * pi / 4.0 + 1e-14);
  }
  // Continuous across the negative real axis.
  CHECK(std::abs(branch_sqrt(cplx(-1.0, 1e-12)) - branch_sqrt(cplx(-1.0, -1e-12))) < 1e-11);
}

TEST_CASE("beta: propagating real, evanescent positive imaginary") {
  const WaveParams p{10.0, 2.0 * pi, -1};
  CHECK(p.kappa(3, 0.2) == doctest::Approx(2.8));
  const cplx bp = beta(3, 0.2, p);
  CHECK(bp.imag() == 0.0);
  CHECK(bp.real() == doctest::Approx(std::sqrt(100.0 - 2.8 * 2.8)));
  const cplx be = beta(12, 0.2, p);
  CHECK(be.real() == doctest::Approx(0.0).scale(1.0));
  CHECK(be.imag() == doctest::Approx(std::sqrt(11.8 * 11.8 - 100.0)));
}

TEST_CASE("csinc") {
  CHECK(std::abs(csinc(0.0) - 1.0) < 1e-16);
  for (cplx z : {cplx(1e-9, 0.0), cplx(0.3, 0.2), cplx(4.0, -2.0)})
    CHECK(std::abs(csinc(z) - (std::abs(z) < 1e-6 ? 1.0 - z * z / 6.0 : std::sin(z) / z)) < 1e-14);
}
