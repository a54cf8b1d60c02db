#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fkqkd/bounds.hpp"
#include "fkqkd/config.hpp"

namespace fkqkd {

/// Thresholds used to run a sweep point: Q_tol_Z maximizes the GS rate at
/// (n, k), or the PS rate when the GS rate is zero for every Q_tol_Z.
/// Q_max_X comes from choose_qmax.
struct OperatingPoint {
  double q_tol_z = 0.0;
  double q_max_x = 0.0;
  bool pragmatic_choice = false;
  BoundReport theory;  // at (q_tol_z, q_max_x) with the approximate leakage
};

OperatingPoint choose_operating_point(std::int64_t n, std::int64_t k, double q_x, double q_z,
                                      const SecurityBudget& budget);

struct SweepRow {
  std::string preset;
  double q_x = 0.0;
  double q_z = 0.0;
  double p_z = 0.0;
  std::int64_t n = 0;
  std::int64_t k = 0;
  SecrecyMode mode = SecrecyMode::General;
  double q_tol_z = 0.0;
  double q_max_x = 0.0;
  int trials = 0;
  int accepted = 0;
  int estimation_aborts = 0;
  int verification_aborts = 0;
  double mean_leakage = 0.0;
  double rate_mean = 0.0;
  double rate_sd = 0.0;
  double rate_theory = 0.0;      // bound at the operating point
  double rate_theory_opt = 0.0;  // bound optimized over p_Z and Q_tol_Z
  double rate_asymptotic = 0.0;
  std::string flag;  // empty, or why the point has no sessions
};

/// For each (preset, p_Z, n): runs config.trials full sessions and emits one
/// row per secrecy mode. The empirical rate of a trial is length / detections
/// for accepted sessions and 0 otherwise. on_row is called as rows complete.
std::vector<SweepRow> sweep_rates(const ExperimentConfig& config,
                                  const std::function<void(const SweepRow&)>& on_row = {});

std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

/// Search grid for min_qubits_for_length.
struct QubitSearch {
  double n_ratio = 1.01;            // geometric step of the n grid
  std::int64_t n_max = 1'000'000'000;
  double q_tol_step = 1e-4;         // Q_tol_Z = Q + q_tol_step
  double eps_rob_cap = 1.0;         // 1 leaves robustness unconstrained
};

struct QubitBudgetRow {
  double q = 0.0;
  std::int64_t target = 0;
  bool feasible = false;
  std::int64_t n = 0;
  std::int64_t k = 0;
  double q_tol_z = 0.0;
  double qubits = 0.0;  // M(n, k)
};

/// Smallest M(n, k) with secret_len_gs >= target when Q_X = Q_Z = q, with
/// leakage approximate_leakage(n, q). For each n on the grid the least
/// sufficient k is found by bisection. target 0 gives n = k = 1.
QubitBudgetRow min_qubits_for_length(std::int64_t target, double q, const SecurityBudget& budget,
                                     const QubitSearch& search = {});

std::string qubit_csv_header();
std::string qubit_csv_row(const QubitBudgetRow& row);

}  // namespace fkqkd
