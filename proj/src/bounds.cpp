#include "fkqkd/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "fkqkd/numerics.hpp"
#include "fkqkd/reconciliation.hpp"
#include "fkqkd/sifting.hpp"

namespace fkqkd {

namespace {

constexpr int kQGrid = 1024;
constexpr int kTernarySteps = 60;
constexpr double kMonotoneSlack = 1e-6;

void require_counts(std::int64_t n, std::int64_t k) {
  if (n < 1 || k < 1) throw std::domain_error("bounds: n and k must be >= 1");
}

struct Sample {
  double x;
  double value;
};

/// Golden-section search for a maximum on [lo, hi]; returns the best point
/// seen, including the endpoints.
Sample golden_max(const std::function<double(double)>& f, double lo, double hi, int steps) {
  constexpr double kInvPhi = std::numbers::phi - 1.0;
  Sample best{lo, f(lo)};
  auto consider = [&](double x, double v) {
    if (v > best.value) best = {x, v};
  };
  consider(hi, f(hi));
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  consider(c, fc);
  consider(d, fd);
  for (int i = 0; i < steps; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
  return best;
}

}  // namespace

double SecurityBudget::delta_sec() const { return 2.0 / std::numbers::ln2 * eps_sec * eps_sec; }

std::int64_t SecurityBudget::verification_bits() const {
  return static_cast<std::int64_t>(verification_hash_length(fail, eps_cor));
}

void SecurityBudget::validate() const {
  for (double v : {eps_sec, eps_cor, fail}) {
    if (!(v > 0.0 && v < 1.0)) throw std::domain_error("SecurityBudget: values must lie in (0, 1)");
  }
}

double mu(std::int64_t n, std::int64_t k, double eps_sec) {
  require_counts(n, k);
  if (!(eps_sec > 0.0 && eps_sec < 1.0)) throw std::domain_error("mu: eps_sec outside (0, 1)");
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  return std::sqrt((dn + dk) / (dn * dk) * (dk + 1.0) / dk * std::log(2.0 / eps_sec));
}

std::int64_t approximate_leakage(std::int64_t n, double qber_x) {
  return static_cast<std::int64_t>(std::ceil(1.1 * static_cast<double>(n) * binary_entropy(qber_x)));
}

std::int64_t secret_len_gs(std::int64_t n, std::int64_t k, double q_tol_z, std::int64_t leakage,
                           const SecurityBudget& budget) {
  budget.validate();
  const double phase = clipped_entropy(q_tol_z + mu(n, k, budget.eps_sec));
  const double penalty = std::log2(2.0 * budget.fail) - 2.0 * std::log2(budget.eps_sec) -
                         std::log2(budget.eps_cor);
  const double length =
      static_cast<double>(n) * (1.0 - phase) - static_cast<double>(leakage) - penalty;
  return length <= 0.0 ? 0 : static_cast<std::int64_t>(std::floor(length));
}

double f_inner(double q, std::int64_t a, std::int64_t n, std::int64_t k, double q_tol_z) {
  require_counts(n, k);
  if (a < 0 || a >= n) throw std::domain_error("f_inner: need 0 <= a < n");
  const double dk = static_cast<double>(k);
  return reg_inc_beta(q, static_cast<double>(a + 1), static_cast<double>(n - a)) *
         reg_inc_beta(1.0 - q / 2.0, dk * (1.0 - q_tol_z), dk * q_tol_z + 1.0);
}

std::int64_t pragmatic_code_length(std::int64_t n, std::int64_t leakage,
                                   const SecurityBudget& budget) {
  return n - leakage - budget.verification_bits();
}

PragmaticSolver::PragmaticSolver(std::int64_t n, std::int64_t k, double q_tol_z)
    : n_(n), k_(k), q_tol_z_(q_tol_z) {
  require_counts(n, k);
  if (!(q_tol_z >= 0.0 && q_tol_z < 1.0)) {
    throw std::domain_error("PragmaticSolver: q_tol_z outside [0, 1)");
  }
  second_grid_.resize(kQGrid + 1);
  for (int i = 0; i <= kQGrid; ++i) second_grid_[i] = second_factor(static_cast<double>(i) / kQGrid);
}

double PragmaticSolver::second_factor(double q) const {
  const double dk = static_cast<double>(k_);
  return reg_inc_beta(1.0 - q / 2.0, dk * (1.0 - q_tol_z_), dk * q_tol_z_ + 1.0);
}

double PragmaticSolver::objective(double q, std::int64_t a) const {
  return reg_inc_beta(q, static_cast<double>(a + 1), static_cast<double>(n_ - a)) *
         second_factor(q);
}

PragmaticSolver::AttackMax PragmaticSolver::attack_max(std::int64_t a) {
  if (a < 0 || a >= n_) throw std::domain_error("PragmaticSolver: need 0 <= a < n");
  if (auto it = cache_.find(a); it != cache_.end()) return it->second;

  // The first factor grows with q and the second shrinks, so walking q down
  // from 1 a grid point can be skipped once the second factor alone is below
  // the incumbent, and the walk can stop once the first factor is.
  AttackMax best;
  int best_index = -1;
  for (int i = kQGrid; i >= 0; --i) {
    const double second = second_grid_[i];
    if (second <= best.value) continue;
    const double q = static_cast<double>(i) / kQGrid;
    const double first = reg_inc_beta(q, static_cast<double>(a + 1), static_cast<double>(n_ - a));
    if (first <= best.value) break;
    if (first * second > best.value) {
      best = {first * second, q};
      best_index = i;
    }
  }
  if (best_index >= 0) {
    double lo = static_cast<double>(std::max(0, best_index - 1)) / kQGrid;
    double hi = static_cast<double>(std::min(kQGrid, best_index + 1)) / kQGrid;
    for (int step = 0; step < kTernarySteps; ++step) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (objective(m1, a) < objective(m2, a)) {
        lo = m1;
      } else {
        hi = m2;
      }
    }
    const double q = (lo + hi) / 2.0;
    const double v = objective(q, a);
    if (v > best.value) best = {v, q};
  }
  check_monotone(a, best.value);
  cache_.emplace(a, best);
  return best;
}

void PragmaticSolver::check_monotone(std::int64_t a, double value) {
  const auto below = cache_.find(a - 1);
  const auto above = cache_.find(a + 1);
  const bool bad_below =
      below != cache_.end() && value > below->second.value * (1.0 + kMonotoneSlack);
  const bool bad_above =
      above != cache_.end() && above->second.value > value * (1.0 + kMonotoneSlack);
  if (bad_below || bad_above) {
    throw std::logic_error("PragmaticSolver: attack bound increased with a at a = " +
                           std::to_string(a));
  }
}

std::int64_t PragmaticSolver::secret_length(std::int64_t code_length, double delta) {
  if (code_length <= 0 || !(delta > 0.0)) return 0;
  const double slack_log = std::log2(delta * std::numbers::ln2);

  // Largest b with b g + 2^(a+b-code_length)/ln2 <= delta, or -1.
  auto best_b = [&](std::int64_t a) -> std::int64_t {
    const double g = attack_bound(a);
    auto fits = [&](std::int64_t b) {
      const double tail =
          std::exp2(static_cast<double>(a + b - code_length)) / std::numbers::ln2;
      return static_cast<double>(b) * g + tail <= delta;
    };
    if (!fits(0)) return -1;
    std::int64_t lo = 0;
    std::int64_t hi = code_length - a - 1;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo + 1) / 2;
      if (fits(mid)) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    return lo;
  };
  // Upper bounds on best_b from each term alone: the first grows with a,
  // the second shrinks.
  auto from_attack = [&](std::int64_t a) -> double {
    const double g = attack_bound(a);
    return g > 0.0 ? std::floor(delta / g) : std::numeric_limits<double>::infinity();
  };
  auto from_tail = [&](std::int64_t a) -> double {
    return std::min(static_cast<double>(code_length - a - 1),
                    std::floor(static_cast<double>(code_length - a) + slack_log));
  };

  const std::int64_t last = std::min(code_length, n_) - 1;
  std::int64_t lo = 0;
  std::int64_t hi = last;
  while (lo < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (from_attack(mid) >= from_tail(mid)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  const std::int64_t crossover = lo;

  std::int64_t best = -1;
  for (std::int64_t a = crossover; a <= last && from_tail(a) > static_cast<double>(best); ++a) {
    best = std::max(best, best_b(a));
  }
  for (std::int64_t a = crossover - 1; a >= 0 && from_attack(a) > static_cast<double>(best); --a) {
    best = std::max(best, best_b(a));
  }
  return std::max<std::int64_t>(best, 0);
}

std::int64_t secret_len_ps(std::int64_t n, std::int64_t k, double q_tol_z,
                           std::int64_t code_length, double delta_sec) {
  if (code_length <= 0) return 0;
  PragmaticSolver solver(n, k, q_tol_z);
  return solver.secret_length(code_length, delta_sec);
}

double eps_rob_bound(std::int64_t k, double q_tol_z, double q_z) {
  if (k < 1) throw std::domain_error("eps_rob_bound: k must be >= 1");
  if (!(q_z >= 0.0 && q_z <= 0.5 && q_tol_z >= 0.0 && q_tol_z <= 0.5)) {
    throw std::domain_error("eps_rob_bound: error rates outside [0, 0.5]");
  }
  if (q_tol_z <= q_z) return 1.0;
  if (q_z == 0.0) return 0.0;
  if (q_z == 0.5) return 1.0;
  const double gap = q_tol_z - q_z;
  return std::exp(-static_cast<double>(k) * gap * gap / (1.0 - 2.0 * q_z) *
                  std::log((1.0 - q_z) / q_z));
}

double expected_qubits(std::int64_t n, std::int64_t k) {
  require_counts(n, k);
  const double dn = static_cast<double>(n);
  const double dk = static_cast<double>(k);
  return dn + dk + 2.0 * std::sqrt(dn * dk);
}

double key_rate(std::int64_t length, std::int64_t n, std::int64_t k, double eps_rob) {
  if (!(eps_rob >= 0.0 && eps_rob <= 1.0)) throw std::domain_error("key_rate: eps_rob outside [0, 1]");
  if (length <= 0) return 0.0;
  return (1.0 - eps_rob) * static_cast<double>(length) / expected_qubits(n, k);
}

double asymptotic_rate(double q_x, double q_z) {
  return std::max(0.0, 1.0 - binary_entropy(q_x) - binary_entropy(q_z));
}

BoundReport evaluate_bounds(const BoundInputs& in) {
  in.budget.validate();
  BoundReport r;
  r.n = in.n;
  r.k = in.k;
  r.p_z = basis_probs_from_quota(in.n, in.k).second;
  r.q_tol_z = in.q_tol_z;
  r.q_max_x = in.q_max_x;
  r.leakage = in.leakage;
  r.mu = mu(in.n, in.k, in.budget.eps_sec);
  r.length_gs = secret_len_gs(in.n, in.k, in.q_tol_z, in.leakage, in.budget);
  if (in.with_pragmatic) {
    r.length_ps = secret_len_ps(in.n, in.k, in.q_tol_z,
                                pragmatic_code_length(in.n, in.leakage, in.budget),
                                in.budget.delta_sec());
  }
  r.eps_rob = eps_rob_bound(in.k, in.q_tol_z, in.expected_q_z);
  r.qubits = expected_qubits(in.n, in.k);
  r.rate_gs = key_rate(r.length_gs, in.n, in.k, r.eps_rob);
  r.rate_ps = key_rate(r.length_ps, in.n, in.k, r.eps_rob);
  return r;
}

std::string bound_csv_header() { return "n,k,p_Z,Q_tol_Z,Q_max_X,L_EC,mu,l_GS,l_PS,eps_rob,M,r_GS,r_PS"; }

std::string bound_csv_row(const BoundReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%.6f,%.6f,%.6f,%lld,%.6g,%lld,%lld,%.6g,%.1f,%.6g,%.6g",
                static_cast<long long>(r.n), static_cast<long long>(r.k), r.p_z, r.q_tol_z,
                r.q_max_x, static_cast<long long>(r.leakage), r.mu,
                static_cast<long long>(r.length_gs), static_cast<long long>(r.length_ps),
                r.eps_rob, r.qubits, r.rate_gs, r.rate_ps);
  return buf;
}

RateSearch RateSearch::for_mode(SecrecyMode mode) {
  if (mode == SecrecyMode::General) return {};
  return {16, 12, 12, 12};
}

RateOptimum optimize_threshold(std::int64_t n, std::int64_t k, double q_x, double q_z,
                               const SecurityBudget& budget, SecrecyMode mode,
                               const RateSearch& search) {
  const std::int64_t leakage = approximate_leakage(n, q_x);
  const double eps_floor = 1e-9;
  auto rate_at = [&](double q_tol) -> double {
    const double rob = eps_rob_bound(k, q_tol, q_z);
    if (rob >= 1.0) return 0.0;
    const std::int64_t len =
        mode == SecrecyMode::General
            ? secret_len_gs(n, k, q_tol, leakage, budget)
            : secret_len_ps(n, k, q_tol, pragmatic_code_length(n, leakage, budget),
                            budget.delta_sec());
    return key_rate(len, n, k, rob);
  };

  const double lo = q_z + eps_floor;
  const double hi = 0.5 - eps_floor;
  const int grid = std::max(2, search.q_tol_grid);
  std::vector<double> xs(grid);
  std::vector<double> vs(grid);
  int best = 0;
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / grid;
    vs[i] = rate_at(xs[i]);
    if (vs[i] > vs[best]) best = i;
  }
  Sample top{xs[best], vs[best]};
  if (vs[best] > 0.0 && search.q_tol_refine > 0) {
    const double a = best > 0 ? xs[best - 1] : lo;
    const double b = best + 1 < grid ? xs[best + 1] : hi;
    const Sample refined = golden_max(rate_at, a, b, search.q_tol_refine);
    if (refined.value > top.value) top = refined;
  }

  RateOptimum out;
  out.k = k;
  out.p_z = basis_probs_from_quota(n, k).second;
  out.q_tol_z = top.x;
  out.q_max_x = choose_qmax(q_x, n, budget.fail).value;
  out.rate = top.value;
  BoundInputs inputs{n, k, out.q_tol_z, out.q_max_x, leakage, q_z, budget,
                     mode == SecrecyMode::Pragmatic};
  out.report = evaluate_bounds(inputs);
  return out;
}

RateOptimum optimize_rate(std::int64_t n, double q_x, double q_z, const SecurityBudget& budget,
                          SecrecyMode mode) {
  return optimize_rate(n, q_x, q_z, budget, mode, RateSearch::for_mode(mode));
}

RateOptimum optimize_rate(std::int64_t n, double q_x, double q_z, const SecurityBudget& budget,
                          SecrecyMode mode, const RateSearch& search) {
  if (n < 1) throw std::domain_error("optimize_rate: n must be >= 1");
  budget.validate();
  // p_Z below 1/(1 + sqrt n) would round k to zero.
  const double log_lo = std::log(1.0 / (1.0 + std::sqrt(static_cast<double>(n))));
  const double log_hi = std::log(0.5);

  auto solve = [&](double log_p) {
    const std::int64_t k = quota_from_basis_probability(n, std::exp(log_p));
    return optimize_threshold(n, k, q_x, q_z, budget, mode, search);
  };

  const int grid = std::max(2, search.p_z_grid);
  std::vector<double> xs(grid);
  std::vector<RateOptimum> results(grid);
  double top = 0.0;
  for (int i = 0; i < grid; ++i) {
    xs[i] = log_lo + (log_hi - log_lo) * i / (grid - 1);
    results[i] = solve(xs[i]);
    top = std::max(top, results[i].rate);
  }
  int pick = 0;
  while (results[pick].rate < top - 1e-6) ++pick;
  RateOptimum best = results[pick];

  if (top > 0.0 && search.p_z_refine > 0) {
    const double a = pick > 0 ? xs[pick - 1] : log_lo;
    const double b = pick + 1 < grid ? xs[pick + 1] : log_hi;
    const Sample refined =
        golden_max([&](double x) { return solve(x).rate; }, a, b, search.p_z_refine);
    if (refined.value > best.rate + 1e-6) best = solve(refined.x);
  }
  return best;
}

}  // namespace fkqkd
