#include "fkqkd/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fkqkd {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a number: '" + value + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  // Accept 1e5-style values as long as they are whole numbers.
  const double d = to_double(key, value);
  const auto i = static_cast<std::int64_t>(d);
  if (static_cast<double>(i) != d) throw ConfigError(key + ": not an integer: '" + value + "'");
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not an unsigned integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true or false");
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::optional<double> background;
  std::optional<double> error_x;
  std::optional<double> error_z;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"preset", [&](auto&, auto& v) { c.presets = {v}; }},
      {"presets", [&](auto&, auto& v) { c.presets = split_list(v); }},
      {"background", [&](auto& k, auto& v) { background = to_double(k, v); }},
      {"error_x", [&](auto& k, auto& v) { error_x = to_double(k, v); }},
      {"error_z", [&](auto& k, auto& v) { error_z = to_double(k, v); }},
      {"qber_x", [&](auto& k, auto& v) { c.qber_x = to_double(k, v); }},
      {"qber_z", [&](auto& k, auto& v) { c.qber_z = to_double(k, v); }},
      {"base_error_x", [&](auto& k, auto& v) { c.base_error_x = to_double(k, v); }},
      {"detection", [&](auto& k, auto& v) { c.detection = to_double(k, v); }},
      {"eps_sec", [&](auto& k, auto& v) { c.budget.eps_sec = to_double(k, v); }},
      {"eps_cor", [&](auto& k, auto& v) { c.budget.eps_cor = to_double(k, v); }},
      {"p_fail", [&](auto& k, auto& v) { c.budget.fail = to_double(k, v); }},
      {"modes",
       [&](auto& k, auto& v) {
         c.modes.clear();
         for (const auto& m : split_list(v)) {
           try {
             c.modes.push_back(parse_secrecy_mode(m));
           } catch (const std::invalid_argument&) {
             throw ConfigError(k + ": unknown mode '" + m + "'");
           }
         }
       }},
      {"seed", [&](auto& k, auto& v) { c.master_seed = to_u64(k, v); }},
      {"n", [&](auto& k, auto& v) { c.n = to_int(k, v); }},
      {"p_z", [&](auto& k, auto& v) { c.p_z = to_double(k, v); }},
      {"q_tol_z", [&](auto& k, auto& v) { c.q_tol_z = to_double(k, v); }},
      {"q_max_x", [&](auto& k, auto& v) { c.q_max_x = to_double(k, v); }},
      {"session", [&](auto& k, auto& v) { c.session = to_u64(k, v); }},
      {"transport",
       [&](auto& k, auto& v) {
         if (v != "memory" && v != "socket") throw ConfigError(k + ": expected memory or socket");
         c.transport = v;
       }},
      {"n_values",
       [&](auto& k, auto& v) {
         c.n_values.clear();
         for (const auto& item : split_list(v)) c.n_values.push_back(to_int(k, item));
       }},
      {"p_z_values",
       [&](auto& k, auto& v) {
         c.p_z_values.clear();
         for (const auto& item : split_list(v)) c.p_z_values.push_back(to_double(k, item));
       }},
      {"trials", [&](auto& k, auto& v) { c.trials = static_cast<int>(to_int(k, v)); }},
      {"optimize_theory", [&](auto& k, auto& v) { c.optimize_theory = to_bool(k, v); }},
      {"target_length", [&](auto& k, auto& v) { c.target_length = to_int(k, v); }},
      {"q_values",
       [&](auto& k, auto& v) {
         c.q_values.clear();
         for (const auto& item : split_list(v)) c.q_values.push_back(to_double(k, item));
       }},
      {"eps_rob_cap", [&](auto& k, auto& v) { c.eps_rob_cap = to_double(k, v); }},
  };

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }

  if (background || error_x || error_z) {
    if (!(background && error_x && error_z)) {
      throw ConfigError("background, error_x and error_z must be given together");
    }
    try {
      c.channel = ChannelModel{Probability(*background), Probability(*error_x),
                               Probability(*error_z), Probability(c.detection)};
    } catch (const std::domain_error& e) {
      throw ConfigError(std::string("channel: ") + e.what());
    }
  }
  if (c.qber_x.has_value() != c.qber_z.has_value()) {
    throw ConfigError("qber_x and qber_z must be given together");
  }
  for (const auto& p : c.presets) {
    try {
      channel_preset(p);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.trials < 1) throw ConfigError("trials must be >= 1");
  try {
    c.budget.validate();
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

ChannelModel preset_channel(const ExperimentConfig& config, const std::string& preset) {
  return ChannelModel::from_qber(channel_preset(preset).qber, config.base_error_x, config.detection);
}

ChannelModel primary_channel(const ExperimentConfig& config) {
  if (config.channel) return *config.channel;
  if (config.qber_x) {
    return ChannelModel::from_qber({*config.qber_x, *config.qber_z}, config.base_error_x,
                                   config.detection);
  }
  if (config.presets.empty()) throw ConfigError("no channel configured");
  return preset_channel(config, config.presets.front());
}

}  // namespace fkqkd
