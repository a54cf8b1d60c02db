#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "fkqkd/numerics.hpp"

namespace fkqkd {

class RngStream;

enum class Basis : unsigned char { X = 0, Z = 1 };

struct Qber {
  double x = 0.0;
  double z = 0.0;
};

/// Classical reduction of the depolarizing link: a detected photon comes from
/// the unpolarized background with probability P (and then errs with
/// probability 1/2), otherwise it carries the intrinsic per-basis error e_b.
/// Loss is one Bernoulli(detection) draw per slot; dark counts are part of P.
struct ChannelModel {
  Probability background;        // P
  Probability error_x;           // e_X
  Probability error_z;           // e_Z
  Probability detection{1.0};    // eta

  /// Background P chosen so that Q_X is reached from an intrinsic X error of
  /// base_error_x; e_Z then solved so that Q_Z is reached exactly.
  static ChannelModel from_qber(Qber target, double base_error_x = 0.003,
                                double detection = 1.0);
};

/// ((1-P) e_X + P/2, (1-P) e_Z + P/2).
Qber effective_qber(const ChannelModel& model);

/// One slot through the link. std::nullopt when the photon is lost.
///
/// Draw order on rng: one uniform for loss; then, if detected, one uniform
/// for the error (matching bases) or one bit (conjugate bases).
std::optional<bool> transmit(const ChannelModel& model, bool sent_bit, Basis sent_basis,
                             Basis measure_basis, RngStream& rng);

struct ChannelPreset {
  std::string_view name;
  Qber qber;
};

/// The four measured conditions of the reference experiment, labelled a..d.
inline constexpr std::array<ChannelPreset, 4> kChannelPresets{{
    {"a", {0.003, 0.015}},
    {"b", {0.024, 0.039}},
    {"c", {0.049, 0.060}},
    {"d", {0.083, 0.081}},
}};

/// Looks up a preset by name ("a".."d"); throws std::invalid_argument.
const ChannelPreset& channel_preset(std::string_view name);

}  // namespace fkqkd
