#include "fkqkd/channel.hpp"

#include <stdexcept>
#include <string>

#include "fkqkd/rng.hpp"

namespace fkqkd {

ChannelModel ChannelModel::from_qber(Qber target, double base_error_x, double detection) {
  if (!(target.x >= 0.0 && target.x <= 0.5 && target.z >= 0.0 && target.z <= 0.5)) {
    throw std::domain_error("ChannelModel::from_qber: QBER outside [0, 0.5]");
  }
  double background = 0.0;
  double error_x = target.x;
  if (target.x > base_error_x) {
    background = (target.x - base_error_x) / (0.5 - base_error_x);
    error_x = base_error_x;
  }
  double error_z = target.z;
  if (background > 0.0) {
    error_z = (target.z - background / 2.0) / (1.0 - background);
    if (error_z < 0.0) {
      throw std::domain_error("ChannelModel::from_qber: Q_Z below the background floor");
    }
  }
  return {Probability(background), Probability(error_x), Probability(error_z),
          Probability(detection)};
}

Qber effective_qber(const ChannelModel& model) {
  const double p = model.background;
  return {(1.0 - p) * model.error_x + p / 2.0, (1.0 - p) * model.error_z + p / 2.0};
}

std::optional<bool> transmit(const ChannelModel& model, bool sent_bit, Basis sent_basis,
                             Basis measure_basis, RngStream& rng) {
  if (!rng.bernoulli(model.detection)) return std::nullopt;
  if (sent_basis != measure_basis) return rng.bit();
  const Qber q = effective_qber(model);
  const double flip_prob = sent_basis == Basis::X ? q.x : q.z;
  return sent_bit != rng.bernoulli(flip_prob);
}

const ChannelPreset& channel_preset(std::string_view name) {
  for (const auto& preset : kChannelPresets) {
    if (preset.name == name) return preset;
  }
  throw std::invalid_argument("unknown channel preset '" + std::string(name) + "'");
}

}  // namespace fkqkd
