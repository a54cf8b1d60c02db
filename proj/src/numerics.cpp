#include "fkqkd/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fkqkd {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kHalfLn2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(what) + ": argument outside [0, 1]");
  }
}

// lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2]
double stirling_remainder(double z) {
  if (z >= 15.0) {
    const double r = 1.0 / z;
    const double r2 = r * r;
    return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
  }
  return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + kHalfLn2Pi);
}

// log1p(t) - t
double log1p_minus(double t) {
  if (std::fabs(t) < 0.05) {
    // -t^2/2 + t^3/3 - t^4/4 + ...
    double term = t * t;
    double sum = 0.0;
    for (int k = 2; k < 40; ++k) {
      const double contrib = term / k;
      sum += (k % 2 == 0) ? -contrib : contrib;
      if (std::fabs(contrib) < 1e-18 * std::fabs(sum)) break;
      term *= t;
    }
    return sum;
  }
  return std::log1p(t) - t;
}

// Continued fraction for I_x(a,b) (modified Lentz).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const int budget = 200 + 20 * static_cast<int>(std::ceil(std::sqrt(std::max(a, b))));

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= budget; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("reg_inc_beta: continued fraction did not converge");
}

double log_binomial_pmf(std::int64_t i, std::int64_t n, double log_q, double log_1mq) {
  const auto di = static_cast<double>(i);
  const auto dn = static_cast<double>(n);
  return std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0) +
         di * log_q + (dn - di) * log_1mq;
}

// Sum of pmf over [lo, hi] by direct log-domain evaluation.
double sum_pmf(std::int64_t lo, std::int64_t hi, std::int64_t n, double q) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  double sum = 0.0;
  for (std::int64_t i = lo; i <= hi; ++i) {
    sum += std::exp(log_binomial_pmf(i, n, log_q, log_1mq));
  }
  return sum;
}

void check_binomial_args(std::int64_t j, std::int64_t n, double q) {
  if (n < 1) throw std::domain_error("binom_cdf: n must be positive");
  if (j < 0 || j > n) throw std::domain_error("binom_cdf: j outside [0, n]");
  require_unit(q, "binom_cdf");
}

}  // namespace

Probability::Probability(double value) : value_(value) {
  require_unit(value, "Probability");
}

double binary_entropy(double x) {
  require_unit(x, "binary_entropy");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -(x * std::log(x) + (1.0 - x) * std::log1p(-x)) / kLn2;
}

double clipped_entropy(double x) {
  if (!(x >= 0.0)) throw std::domain_error("clipped_entropy: negative argument");
  if (x > 0.5) return 1.0;
  return binary_entropy(x);
}

double log_beta_prefactor(double x, double a, double b) {
  const double s = a + b;
  const double shift = x * s - a;  // a*u = -b*v = shift
  const double u = shift / a;
  const double v = -shift / b;
  return a * log1p_minus(u) + b * log1p_minus(v) + 0.5 * std::log(a * b / s) - kHalfLn2Pi -
         stirling_remainder(a) - stirling_remainder(b) + stirling_remainder(s);
}

double reg_inc_beta(double x, double a, double b) {
  require_unit(x, "reg_inc_beta");
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::domain_error("reg_inc_beta: shape parameters must be positive");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  if (x > (a + 1.0) / (a + b + 2.0)) {
    const double front = std::exp(log_beta_prefactor(x, a, b));
    const double value = 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
    return std::clamp(value, 0.0, 1.0);
  }
  const double front = std::exp(log_beta_prefactor(x, a, b));
  return std::clamp(front * beta_continued_fraction(x, a, b) / a, 0.0, 1.0);
}

double binom_cdf(std::int64_t j, std::int64_t n, double q) {
  check_binomial_args(j, n, q);
  if (j == n || q == 0.0) return 1.0;
  if (q == 1.0) return 0.0;
  if (n > kDirectSumLimit) {
    return 1.0 - reg_inc_beta(q, static_cast<double>(j + 1), static_cast<double>(n - j));
  }
  const double mean = static_cast<double>(n) * q;
  if (static_cast<double>(j) < mean) return std::min(1.0, sum_pmf(0, j, n, q));
  return std::max(0.0, 1.0 - sum_pmf(j + 1, n, n, q));
}

double binom_sf(std::int64_t j, std::int64_t n, double q) {
  check_binomial_args(j, n, q);
  if (j == n || q == 0.0) return 0.0;
  if (q == 1.0) return 1.0;
  if (n > kDirectSumLimit) {
    return reg_inc_beta(q, static_cast<double>(j + 1), static_cast<double>(n - j));
  }
  const double mean = static_cast<double>(n) * q;
  if (static_cast<double>(j) >= mean) return std::min(1.0, sum_pmf(j + 1, n, n, q));
  return std::max(0.0, 1.0 - sum_pmf(0, j, n, q));
}

}  // namespace fkqkd
