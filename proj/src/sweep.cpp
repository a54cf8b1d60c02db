#include "fkqkd/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <tuple>

#include "fkqkd/reconciliation.hpp"
#include "fkqkd/session.hpp"
#include "fkqkd/sifting.hpp"

namespace fkqkd {

OperatingPoint choose_operating_point(std::int64_t n, std::int64_t k, double q_x, double q_z,
                                      const SecurityBudget& budget) {
  OperatingPoint op;
  const RateOptimum gs =
      optimize_threshold(n, k, q_x, q_z, budget, SecrecyMode::General, RateSearch{});
  op.q_max_x = gs.q_max_x;
  if (gs.rate > 0.0) {
    op.q_tol_z = gs.q_tol_z;
  } else {
    const RateOptimum ps = optimize_threshold(n, k, q_x, q_z, budget, SecrecyMode::Pragmatic,
                                              RateSearch::for_mode(SecrecyMode::Pragmatic));
    op.q_tol_z = ps.q_tol_z;
    op.pragmatic_choice = true;
  }
  op.theory = evaluate_bounds(
      {n, k, op.q_tol_z, op.q_max_x, approximate_leakage(n, q_x), q_z, budget, true});
  return op;
}

std::vector<SweepRow> sweep_rates(const ExperimentConfig& config,
                                  const std::function<void(const SweepRow&)>& on_row) {
  struct Channel {
    std::string name;
    ChannelModel model;
  };
  std::vector<Channel> channels;
  if (config.channel || config.qber_x) {
    channels.push_back({"custom", primary_channel(config)});
  } else {
    for (const auto& p : config.presets) channels.push_back({p, preset_channel(config, p)});
  }

  std::vector<SweepRow> rows;
  std::map<std::tuple<std::size_t, std::int64_t, SecrecyMode>, double> optimum_cache;
  std::uint64_t point = 0;

  for (std::size_t ci = 0; ci < channels.size(); ++ci) {
    const Qber q = effective_qber(channels[ci].model);
    for (double p_z : config.p_z_values) {
      for (std::int64_t n : config.n_values) {
        ++point;
        const std::int64_t k = quota_from_basis_probability(n, p_z);
        const OperatingPoint op = choose_operating_point(n, k, q.x, q.z, config.budget);

        std::vector<SweepRow> point_rows;
        for (SecrecyMode mode : config.modes) {
          SweepRow row;
          row.preset = channels[ci].name;
          row.q_x = q.x;
          row.q_z = q.z;
          row.p_z = p_z;
          row.n = n;
          row.k = k;
          row.mode = mode;
          row.q_tol_z = op.q_tol_z;
          row.q_max_x = op.q_max_x;
          row.rate_theory = mode == SecrecyMode::General ? op.theory.rate_gs : op.theory.rate_ps;
          row.rate_asymptotic = asymptotic_rate(q.x, q.z);
          if (config.optimize_theory) {
            const auto key = std::make_tuple(ci, n, mode);
            auto it = optimum_cache.find(key);
            if (it == optimum_cache.end()) {
              it = optimum_cache.emplace(key, optimize_rate(n, q.x, q.z, config.budget, mode).rate).first;
            }
            row.rate_theory_opt = it->second;
          }
          point_rows.push_back(row);
        }

        const ProtocolParams params =
            ProtocolParams::from_basis_probability(n, p_z, op.q_tol_z, op.q_max_x);
        SessionPlan plan = make_plan(params, channels[ci].model, config.budget, config.master_seed, 0);
        plan.modes = config.modes;
        plan.pragmatic = std::make_shared<PragmaticSolver>(n, params.k, op.q_tol_z);
        if (!plan.schedule) {
          for (auto& row : point_rows) row.flag = "reconciliation_infeasible";
        } else {
          std::vector<std::vector<double>> rates(config.modes.size());
          double leakage_sum = 0.0;
          int accepted = 0;
          int est_aborts = 0;
          int ver_aborts = 0;
          std::string flag;
          for (int t = 0; t < config.trials; ++t) {
            plan.session = (point << 20) | static_cast<std::uint64_t>(t);
            SessionResult result;
            try {
              result = run_session(plan);
            } catch (const SiftingBudgetExceeded&) {
              flag = "sifting_budget_exceeded";
              break;
            }
            if (result.status == SessionStatus::EstimationAbort) ++est_aborts;
            if (result.status == SessionStatus::VerificationAbort) ++ver_aborts;
            const bool ok = result.status == SessionStatus::Accepted;
            if (ok) {
              ++accepted;
              leakage_sum += static_cast<double>(result.leakage);
            }
            for (std::size_t m = 0; m < config.modes.size(); ++m) {
              const std::int64_t length = config.modes[m] == SecrecyMode::General
                                              ? result.report.length_gs
                                              : result.report.length_ps;
              rates[m].push_back(ok && result.received_count > 0
                                     ? static_cast<double>(length) /
                                           static_cast<double>(result.received_count)
                                     : 0.0);
            }
          }
          for (std::size_t m = 0; m < point_rows.size(); ++m) {
            SweepRow& row = point_rows[m];
            row.flag = flag;
            row.trials = static_cast<int>(rates[m].size());
            row.accepted = accepted;
            row.estimation_aborts = est_aborts;
            row.verification_aborts = ver_aborts;
            row.mean_leakage = accepted > 0 ? leakage_sum / accepted : 0.0;
            if (!rates[m].empty()) {
              double sum = 0.0;
              for (double r : rates[m]) sum += r;
              row.rate_mean = sum / static_cast<double>(rates[m].size());
              double var = 0.0;
              for (double r : rates[m]) var += (r - row.rate_mean) * (r - row.rate_mean);
              row.rate_sd = rates[m].size() > 1
                                ? std::sqrt(var / static_cast<double>(rates[m].size() - 1))
                                : 0.0;
            }
          }
        }
        for (const auto& row : point_rows) {
          if (on_row) on_row(row);
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

std::string sweep_csv_header() {
  return "preset,Q_X,Q_Z,p_Z,n,k,mode,Q_tol_Z,Q_max_X,trials,accepted,estimation_aborts,"
         "verification_aborts,mean_L_EC,r_empirical,r_empirical_sd,r_theory,r_theory_opt,"
         "r_asymptotic,flag";
}

std::string sweep_csv_row(const SweepRow& r) {
  char buf[768];
  std::snprintf(buf, sizeof buf,
                "%s,%.6f,%.6f,%.4f,%lld,%lld,%s,%.6f,%.6f,%d,%d,%d,%d,%.2f,%.6g,%.6g,%.6g,%.6g,%.6g,%s",
                r.preset.c_str(), r.q_x, r.q_z, r.p_z, static_cast<long long>(r.n),
                static_cast<long long>(r.k), to_string(r.mode).c_str(), r.q_tol_z, r.q_max_x,
                r.trials, r.accepted, r.estimation_aborts, r.verification_aborts, r.mean_leakage,
                r.rate_mean, r.rate_sd, r.rate_theory, r.rate_theory_opt, r.rate_asymptotic,
                r.flag.c_str());
  return buf;
}

QubitBudgetRow min_qubits_for_length(std::int64_t target, double q, const SecurityBudget& budget,
                                     const QubitSearch& search) {
  QubitBudgetRow best;
  best.q = q;
  best.target = target;
  best.q_tol_z = q + search.q_tol_step;
  if (target <= 0) {
    best.feasible = true;
    best.n = 1;
    best.k = 1;
    best.qubits = expected_qubits(1, 1);
    return best;
  }
  if (!(q >= 0.0 && q < 0.5)) throw std::domain_error("min_qubits_for_length: Q outside [0, 0.5)");
  const double q_tol = best.q_tol_z;
  constexpr std::int64_t kMaxK = 1'000'000'000'000;

  auto length_ok = [&](std::int64_t n, std::int64_t k) {
    return secret_len_gs(n, k, q_tol, approximate_leakage(n, q), budget) >= target;
  };
  auto robust_ok = [&](std::int64_t k) {
    return search.eps_rob_cap >= 1.0 || eps_rob_bound(k, q_tol, q) <= search.eps_rob_cap;
  };
  // Least k in [1, kMaxK] satisfying a predicate that is monotone in k.
  auto least_k = [&](const std::function<bool(std::int64_t)>& ok) -> std::int64_t {
    if (!ok(kMaxK)) return -1;
    std::int64_t lo = 1;
    std::int64_t hi = kMaxK;
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (ok(mid)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  };

  const std::int64_t k_robust = least_k(robust_ok);
  if (k_robust < 0) return best;

  // The key cannot be longer than n, and M >= n, so the walk over n stops
  // once n alone exceeds the best M found.
  double n_real = static_cast<double>(target);
  std::int64_t last_n = 0;
  while (n_real <= static_cast<double>(search.n_max)) {
    const auto n = static_cast<std::int64_t>(std::ceil(n_real));
    n_real *= search.n_ratio;
    if (n == last_n) continue;
    last_n = n;
    if (best.feasible && static_cast<double>(n) >= best.qubits) break;
    const std::int64_t k_len = least_k([&](std::int64_t k) { return length_ok(n, k); });
    if (k_len < 0) continue;
    const std::int64_t k = std::max(k_len, k_robust);
    const double m = expected_qubits(n, k);
    if (!best.feasible || m < best.qubits) {
      best.feasible = true;
      best.n = n;
      best.k = k;
      best.qubits = m;
    }
  }
  return best;
}

std::string qubit_csv_header() { return "Q,l_target,M,n,k,Q_tol_Z,feasible"; }

std::string qubit_csv_row(const QubitBudgetRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f,%lld,%.1f,%lld,%lld,%.6f,%d", r.q,
                static_cast<long long>(r.target), r.qubits, static_cast<long long>(r.n),
                static_cast<long long>(r.k), r.q_tol_z, r.feasible ? 1 : 0);
  return buf;
}

}  // namespace fkqkd
