#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fkqkd {

/// Raised when an iterative special-function evaluation runs out of budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A real number constrained to [0, 1].
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value);

  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

/// -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0.
double binary_entropy(double x);

/// binary_entropy(x) on [0, 0.5], and 1 above 0.5.
double clipped_entropy(double x);

/// Regularized incomplete beta function I_x(a, b).
///
/// Evaluated with a modified-Lentz continued fraction, switching to
/// 1 - I_{1-x}(b, a) when x > (a+1)/(a+b+2). The power prefactor
/// x^a (1-x)^b / B(a,b) is assembled from Stirling remainders and
/// log1p(u) - u terms so that large parameters (a, b ~ 1e6) keep full
/// relative accuracy.
double reg_inc_beta(double x, double a, double b);

/// Natural log of x^a (1-x)^b / B(a, b); exposed for tests.
double log_beta_prefactor(double x, double a, double b);

/// Binomial CDF: P[Bin(n, q) <= j].
///
/// For n up to kDirectSumLimit the pmf is summed in the log domain;
/// larger n go through 1 - I_q(j+1, n-j).
double binom_cdf(std::int64_t j, std::int64_t n, double q);

/// P[Bin(n, q) > j] = 1 - binom_cdf(j, n, q), computed without cancellation.
double binom_sf(std::int64_t j, std::int64_t n, double q);

inline constexpr std::int64_t kDirectSumLimit = 10'000;

}  // namespace fkqkd
