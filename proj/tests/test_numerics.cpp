#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fkqkd/numerics.hpp"

using namespace fkqkd;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("Probability rejects values outside [0, 1]") {
  CHECK(Probability(0.0).value() == 0.0);
  CHECK(Probability(1.0).value() == 1.0);
  CHECK_THROWS_AS(Probability(-1e-12), std::domain_error);
  CHECK_THROWS_AS(Probability(1.0 + 1e-12), std::domain_error);
  CHECK_THROWS_AS(Probability(std::nan("")), std::domain_error);
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == 1.0);
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  // mpmath, 40 digits
  CHECK(binary_entropy(0.11) == doctest::Approx(0.499915958164528).epsilon(1e-14));
  CHECK(binary_entropy(0.25) == doctest::Approx(0.81127812445913286).epsilon(1e-14));
  CHECK(binary_entropy(1e-6) == doctest::Approx(2.1374262888865377e-5).epsilon(1e-13));
  CHECK(binary_entropy(0.024) == doctest::Approx(0.16334554318340229).epsilon(1e-14));
  CHECK(binary_entropy(0.083) == doctest::Approx(0.41266265592362742).epsilon(1e-14));
  CHECK(1.0 - 2.0 * binary_entropy(0.11) == doctest::Approx(0.0).epsilon(1e-3));
  CHECK_THROWS_AS(binary_entropy(-0.1), std::domain_error);
  CHECK_THROWS_AS(binary_entropy(1.1), std::domain_error);
}

TEST_CASE("binary entropy is symmetric with its maximum at one half") {
  for (int i = 0; i <= 1000; ++i) {
    const double x = i / 1000.0;
    CHECK(binary_entropy(x) == doctest::Approx(binary_entropy(1.0 - x)).epsilon(1e-12));
    CHECK(binary_entropy(x) <= 1.0);
    CHECK(binary_entropy(x) >= 0.0);
  }
  CHECK(binary_entropy(0.5 - 1e-6) < 1.0);
  CHECK(binary_entropy(0.5 + 1e-6) < 1.0);
}

TEST_CASE("clipped entropy") {
  CHECK(clipped_entropy(0.6) == 1.0);
  CHECK(clipped_entropy(0.5) == 1.0);
  CHECK(clipped_entropy(7.0) == 1.0);
  CHECK(clipped_entropy(0.25) == binary_entropy(0.25));
  CHECK_THROWS_AS(clipped_entropy(-0.01), std::domain_error);
}

TEST_CASE("incomplete beta: endpoints and closed forms") {
  CHECK(reg_inc_beta(0.0, 3.0, 4.0) == 0.0);
  CHECK(reg_inc_beta(1.0, 3.0, 4.0) == 1.0);
  CHECK(reg_inc_beta(0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(reg_inc_beta(0.1, 1.0, 10.0) == doctest::Approx(1.0 - std::pow(0.9, 10)).epsilon(1e-14));
  CHECK(reg_inc_beta(0.1, 1.0, 10.0) == doctest::Approx(0.6513215599).epsilon(1e-10));
  for (double x : {0.05, 0.3, 0.77}) {
    // I_x(a, 1) = x^a
    CHECK(reg_inc_beta(x, 4.5, 1.0) == doctest::Approx(std::pow(x, 4.5)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(reg_inc_beta(0.5, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(reg_inc_beta(0.5, 1.0, -2.0), std::domain_error);
  CHECK_THROWS_AS(reg_inc_beta(1.5, 1.0, 1.0), std::domain_error);
}

TEST_CASE("incomplete beta: high-precision reference values") {
  struct Case {
    double x, a, b, want;
  };
  // mpmath at 40 digits; integer-shape cases via exact binomial tails.
  const Case cases[] = {
      {0.5, 2.5, 3.5, 0.66976527263135502482},
      {0.3, 100, 200, 0.10884306564490983653},
      {0.35, 7, 14, 0.58337458178076747743},
      {0.9, 0.5, 0.5, 0.79516723530086654835},
      {0.001, 1e-3, 5, 0.9951825151101092062},
      {0.7, 30.5, 12.25, 0.40522936411048483436},
      {0.0123, 1230, 98771, 0.50386219624685161983},
      {5e-5, 50, 1e6, 0.51894771990075929251},
      {0.499, 5e5, 5e5, 0.02275005096163157875},
  };
  for (const auto& c : cases) {
    CAPTURE(c.x);
    CAPTURE(c.a);
    CAPTURE(c.b);
    CHECK(rel_err(reg_inc_beta(c.x, c.a, c.b), c.want) < 1e-12);
  }
}

TEST_CASE("incomplete beta agrees with adaptive quadrature for shapes up to 100") {
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double shapes[] = {0.5, 1.0, 2.5, 10.0, 37.0, 100.0};
  const double xs[] = {0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
  for (double a : shapes) {
    for (double b : shapes) {
      const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
      auto density = [&](double t) {
        return std::exp((a - 1) * std::log(t) + (b - 1) * std::log1p(-t) - log_norm);
      };
      for (double x : xs) {
        const double want = integrator.integrate(density, 0.0, x);
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(x);
        CHECK(std::abs(reg_inc_beta(x, a, b) - want) < 1e-9);
      }
    }
  }
}

TEST_CASE("incomplete beta agrees with boost ibeta for large shapes") {
  const double shapes[] = {150.0, 1e3, 2.5e4, 3e5, 1e6};
  for (double a : shapes) {
    for (double b : shapes) {
      const double mean = a / (a + b);
      const double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)));
      for (double z : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
        const double x = mean + z * sd;
        if (x <= 0.0 || x >= 1.0) continue;
        const double want = boost::math::ibeta(a, b, x);
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(x);
        CHECK(rel_err(reg_inc_beta(x, a, b), want) < 1e-10);
      }
    }
  }
}

TEST_CASE("incomplete beta is non-decreasing in x") {
  for (double a : {0.7, 3.0, 40.0, 2000.0}) {
    for (double b : {0.7, 5.0, 80.0, 1500.0}) {
      double prev = 0.0;
      for (int i = 0; i <= 400; ++i) {
        const double v = reg_inc_beta(i / 400.0, a, b);
        CHECK(v >= prev - 1e-15);
        prev = v;
      }
    }
  }
}

TEST_CASE("binomial cdf reference values") {
  CHECK(binom_cdf(5, 5, 0.3) == 1.0);
  CHECK(binom_cdf(0, 2, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(binom_cdf(3, 10, 0.2) == doctest::Approx(0.8791261184).epsilon(1e-12));
  CHECK(binom_cdf(6, 20, 0.3) == doctest::Approx(0.60800981220092396332).epsilon(1e-12));
  CHECK(binom_cdf(6, 20, 0.3) == doctest::Approx(1.0 - reg_inc_beta(0.3, 7, 14)).epsilon(1e-12));
  CHECK(binom_cdf(50, 1000, 0.05) == doctest::Approx(0.53752904080142772207).epsilon(1e-12));
  CHECK(binom_cdf(280, 10000, 0.024) == doctest::Approx(0.99517887674372584701).epsilon(1e-12));
  CHECK(binom_cdf(1000, 100000, 0.011) ==
        doctest::Approx(0.001112553035776403401).epsilon(1e-10));
  CHECK(binom_cdf(350, 100000, 0.003) == doctest::Approx(0.99783392842275050369).epsilon(1e-12));
  CHECK(binom_cdf(0, 7, 0.0) == 1.0);
  CHECK(binom_cdf(6, 7, 1.0) == 0.0);
  CHECK_THROWS_AS(binom_cdf(-1, 5, 0.3), std::domain_error);
  CHECK_THROWS_AS(binom_cdf(6, 5, 0.3), std::domain_error);
}

TEST_CASE("binomial tail equals the incomplete beta on a 1000-point grid") {
  // 1 - F_{n,q}(a) = I_q(a + 1, n - a). n <= 1e4 exercises the direct sum, so
  // the two sides are computed independently.
  const std::int64_t ns[] = {1, 2, 7, 30, 120, 999, 4000, 10000};
  int points = 0;
  for (std::int64_t n : ns) {
    for (int qi = 1; qi <= 25; ++qi) {
      const double q = qi / 26.0;
      for (int ai = 0; ai < 5; ++ai) {
        // a spread over the bulk of the distribution, z = -2..2 sd
        const double sd = std::sqrt(static_cast<double>(n) * q * (1 - q));
        const auto a = std::clamp<std::int64_t>(std::llround(q * n + (ai - 2) * sd), 0, n - 1);
        const double lhs = 1.0 - binom_cdf(a, n, q);
        const double rhs = reg_inc_beta(q, static_cast<double>(a + 1), static_cast<double>(n - a));
        CAPTURE(n);
        CAPTURE(a);
        CAPTURE(q);
        CHECK(std::abs(lhs - rhs) <= 1e-10);
        CHECK(std::abs(binom_sf(a, n, q) - rhs) <= 1e-10);
        ++points;
      }
    }
  }
  CHECK(points == 1000);
}

TEST_CASE("binomial survival function avoids cancellation") {
  // P[Bin(1000, 0.01) > 60] is far below double epsilon relative to 1.
  const double sf = binom_sf(60, 1000, 0.01);
  CHECK(sf > 0.0);
  CHECK(sf < 1e-20);
  CHECK(rel_err(sf, boost::math::ibeta(61.0, 940.0, 0.01)) < 1e-10);
}
