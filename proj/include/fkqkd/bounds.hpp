#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "fkqkd/privacy.hpp"

namespace fkqkd {

/// Tolerances shared by every bound.
struct SecurityBudget {
  double eps_sec = 1e-10;
  double eps_cor = 1e-10;
  double fail = 1e-3;  // reconciliation failure probability P_fail

  /// PS tolerance matched to eps_sec: (2 / ln 2) eps_sec^2.
  double delta_sec() const;
  /// Length of the error-verification hash, ceil(log2(fail / eps_cor)).
  std::int64_t verification_bits() const;
  void validate() const;
};

/// Statistical fluctuation of the phase error rate:
/// sqrt((n+k)/(n k) * (k+1)/k * ln(2/eps_sec)).
double mu(std::int64_t n, std::int64_t k, double eps_sec);

/// ceil(1.1 n h2(qber_x)), the leakage used when no reconciliation is run.
std::int64_t approximate_leakage(std::int64_t n, double qber_x);

/// Key length for general secrecy,
/// max(0, floor(n (1 - h2~(q_tol_z + mu)) - leakage - log2(2 fail / (eps_sec^2 eps_cor)))).
std::int64_t secret_len_gs(std::int64_t n, std::int64_t k, double q_tol_z, std::int64_t leakage,
                           const SecurityBudget& budget);

/// I_q(a+1, n-a) * I_{1-q/2}(k(1-q_tol_z), k q_tol_z + 1): the chance that an
/// intercept-resend attack on a fraction q of the qubits learns more than a
/// key bits and still passes the estimation test.
double f_inner(double q, std::int64_t a, std::int64_t n, std::int64_t k, double q_tol_z);

/// n - leakage - verification_bits: bits left after reconciliation and
/// verification for the pragmatic bound.
std::int64_t pragmatic_code_length(std::int64_t n, std::int64_t leakage,
                                   const SecurityBudget& budget);

/// Evaluates the pragmatic key length for one (n, k, q_tol_z).
///
/// attack_bound(a) = max_q f_inner(q, a, ...) is found on a 1025-point grid
/// (q = i/1024) followed by ternary refinement inside the best grid bracket.
/// It is non-increasing in a; the solver checks this on every pair of
/// adjacent values it computes and throws std::logic_error if it fails.
class PragmaticSolver {
 public:
  PragmaticSolver(std::int64_t n, std::int64_t k, double q_tol_z);

  struct AttackMax {
    double value = 0.0;
    double q = 0.0;
  };

  AttackMax attack_max(std::int64_t a);
  double attack_bound(std::int64_t a) { return attack_max(a).value; }

  /// max{b : exists a < code_length - b with
  ///         b attack_bound(a) + 2^-(code_length - b - a) / ln 2 <= delta}, or 0.
  std::int64_t secret_length(std::int64_t code_length, double delta);

  std::size_t evaluations() const { return cache_.size(); }

 private:
  double second_factor(double q) const;
  double objective(double q, std::int64_t a) const;
  void check_monotone(std::int64_t a, double value);

  std::int64_t n_;
  std::int64_t k_;
  double q_tol_z_;
  std::vector<double> second_grid_;
  std::unordered_map<std::int64_t, AttackMax> cache_;
};

/// Pragmatic key length; code_length as from pragmatic_code_length.
std::int64_t secret_len_ps(std::int64_t n, std::int64_t k, double q_tol_z,
                           std::int64_t code_length, double delta_sec);

/// Bound on the abort probability without an eavesdropper:
/// exp(-k (q_tol_z - q_z)^2 / (1 - 2 q_z) ln((1 - q_z)/q_z)).
/// Returns 0 when q_z = 0 < q_tol_z and 1 when q_tol_z <= q_z.
double eps_rob_bound(std::int64_t k, double q_tol_z, double q_z);

/// Expected detections to fill both quotas: n + k + 2 sqrt(n k).
double expected_qubits(std::int64_t n, std::int64_t k);

/// (1 - eps_rob) length / M(n, k).
double key_rate(std::int64_t length, std::int64_t n, std::int64_t k, double eps_rob);

/// max(0, 1 - h2(q_x) - h2(q_z)).
double asymptotic_rate(double q_x, double q_z);

/// Every bound at one parameter point.
struct BoundReport {
  std::int64_t n = 0;
  std::int64_t k = 0;
  double p_z = 0.0;
  double q_tol_z = 0.0;
  double q_max_x = 0.0;
  std::int64_t leakage = 0;
  double mu = 0.0;
  std::int64_t length_gs = 0;
  std::int64_t length_ps = 0;
  double eps_rob = 0.0;
  double qubits = 0.0;
  double rate_gs = 0.0;
  double rate_ps = 0.0;
};

struct BoundInputs {
  std::int64_t n = 0;
  std::int64_t k = 0;
  double q_tol_z = 0.0;
  double q_max_x = 0.0;
  std::int64_t leakage = 0;
  double expected_q_z = 0.0;  // for eps_rob
  SecurityBudget budget{};
  bool with_pragmatic = true;
};

BoundReport evaluate_bounds(const BoundInputs& in);

/// "n,k,p_Z,Q_tol_Z,Q_max_X,L_EC,mu,l_GS,l_PS,eps_rob,M,r_GS,r_PS"
std::string bound_csv_header();
std::string bound_csv_row(const BoundReport& report);

struct RateOptimum {
  double rate = 0.0;
  double p_z = 0.5;
  std::int64_t k = 0;
  double q_tol_z = 0.0;
  double q_max_x = 0.0;
  BoundReport report;
};

/// Search effort for optimize_rate; PS evaluations are costly, so it uses
/// coarser settings by default.
struct RateSearch {
  int p_z_grid = 48;
  int p_z_refine = 30;
  int q_tol_grid = 48;
  int q_tol_refine = 30;

  static RateSearch for_mode(SecrecyMode mode);
};

/// Best rate over Q_tol_Z in (q_z, 0.5) with k fixed, leakage from
/// approximate_leakage(n, q_x) and eps_rob from eps_rob_bound.
RateOptimum optimize_threshold(std::int64_t n, std::int64_t k, double q_x, double q_z,
                               const SecurityBudget& budget, SecrecyMode mode,
                               const RateSearch& search);

/// Best rate over p_Z in (0, 0.5] and Q_tol_Z. Q_max_X is reported from
/// choose_qmax; it does not enter the rate under the leakage approximation.
/// Among p_Z values within 1e-6 of the best rate the smallest wins.
RateOptimum optimize_rate(std::int64_t n, double q_x, double q_z, const SecurityBudget& budget,
                          SecrecyMode mode);
RateOptimum optimize_rate(std::int64_t n, double q_x, double q_z, const SecurityBudget& budget,
                          SecrecyMode mode, const RateSearch& search);

}  // namespace fkqkd
