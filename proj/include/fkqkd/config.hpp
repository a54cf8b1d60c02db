#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fkqkd/bounds.hpp"
#include "fkqkd/channel.hpp"
#include "fkqkd/privacy.hpp"

namespace fkqkd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings for every CLI verb. Defaults follow the reference experiment.
struct ExperimentConfig {
  // Channel: named presets, or an explicit model that replaces them.
  std::vector<std::string> presets{"a", "b", "c", "d"};
  std::optional<ChannelModel> channel;
  double base_error_x = 0.003;
  double detection = 1.0;

  SecurityBudget budget{};
  std::vector<SecrecyMode> modes{SecrecyMode::General, SecrecyMode::Pragmatic};
  std::uint64_t master_seed = 1;

  // session
  std::int64_t n = 10'000;
  double p_z = 0.49;
  std::optional<double> q_tol_z;  // chosen automatically when absent
  std::optional<double> q_max_x;
  std::uint64_t session = 0;
  std::string transport = "memory";  // memory | socket

  // sweep
  std::vector<std::int64_t> n_values{1'000, 2'000, 5'000, 10'000, 20'000, 50'000, 100'000, 200'000};
  std::vector<double> p_z_values{0.09, 0.16, 0.28, 0.40, 0.49};
  int trials = 20;
  bool optimize_theory = true;

  // budget
  std::int64_t target_length = 1000;
  std::vector<double> q_values{0.0, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
  double eps_rob_cap = 1.0;

  // bounds: single-point calculator inputs (n and p_z shared with session)
  std::optional<double> qber_x;
  std::optional<double> qber_z;
};

/// Flat "key = value" lines; '#' starts a comment; lists are comma separated.
/// Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Channel model for a named preset under the config's base error and
/// detection probability.
ChannelModel preset_channel(const ExperimentConfig& config, const std::string& preset);

/// The channel a single-point verb uses: the explicit model, else the
/// explicit QBER pair, else the first preset.
ChannelModel primary_channel(const ExperimentConfig& config);

}  // namespace fkqkd
