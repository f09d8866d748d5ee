// SPDX-License-Identifier: Apache-2.0
//
// Reuse detection on Q or K: windowed standard-error similarity along the
// temporal, x and y axes, OR-combined into a per (token, channel) mask that
// names, for each reusable entry, the token whose partial scores are copied.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "streuse/grid.hpp"
#include "streuse/matrix.hpp"

namespace streuse {

struct AxisThresholds {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  static AxisThresholds uniform(double theta) { return {theta, theta, theta}; }
  double for_axis(Axis axis) const;
};

enum class Granularity {
  channel,  // each (token, channel) entry decided on its own
  token,    // a token is reusable on an axis only if every channel passes
};

enum class ThresholdMode {
  absolute,    // Delta < theta
  channelwise  // Delta_c < theta * mean_c |Delta_c| within the window
};

Granularity parse_granularity(std::string_view name);
std::string_view granularity_name(Granularity g);
ThresholdMode parse_threshold_mode(std::string_view name);
std::string_view threshold_mode_name(ThresholdMode m);

class ReuseMask {
 public:
  ReuseMask() = default;
  // Empty mask: nothing reusable, every entry is its own representative.
  ReuseMask(std::size_t tokens, std::size_t channels, std::size_t window_size = 2);

  std::size_t tokens() const { return tokens_; }
  std::size_t channels() const { return channels_; }
  std::size_t window_size() const { return window_; }

  bool reusable(std::size_t token, std::size_t channel) const {
    return reusable_[token * channels_ + channel] != 0;
  }
  std::size_t representative(std::size_t token, std::size_t channel) const {
    return representative_[token * channels_ + channel];
  }

  void mark(std::size_t token, std::size_t channel, std::size_t rep);
  void clear(std::size_t token, std::size_t channel);

  std::size_t reusable_count() const;
  std::size_t reusable_count(std::size_t channel) const;
  // Fraction of (token, channel) entries marked reusable.
  double ratio() const;

  // Throws std::logic_error when an entry's representative is inconsistent
  // (self-reference on a reusable entry, a reusable representative, or a
  // non-identity representative on a computed entry).
  void check_invariants() const;

  friend bool operator==(const ReuseMask&, const ReuseMask&) = default;

 private:
  std::size_t tokens_ = 0;
  std::size_t channels_ = 0;
  std::size_t window_ = 2;
  std::vector<std::uint8_t> reusable_;
  std::vector<std::size_t> representative_;
};

// Population standard deviation of a window, sqrt(sum (a_i - mean)^2 / K).
double delta(std::span<const double> window);

// Marks, along one axis, every non-first token of each window of K
// consecutive positions whose channel values pass the similarity test. The
// representative is the first token of the window. A trailing partial
// window is never marked.
ReuseMask detect_axis(const TokenGrid& tokens, Axis axis, double theta, std::size_t window,
                      Granularity granularity = Granularity::channel,
                      ThresholdMode mode = ThresholdMode::absolute);

// Logical OR of per-axis masks given in priority order (t, x, y). The
// representative comes from the first axis that marked the entry; when that
// representative is itself reusable, the copy source resolves to its own
// representative, so the result never contains chains.
ReuseMask combine_or(std::span<const ReuseMask> masks);

struct DetectorConfig {
  AxisThresholds thresholds;
  std::size_t window = 2;
  Granularity granularity = Granularity::channel;
  ThresholdMode mode = ThresholdMode::absolute;
};

// detect_axis on each axis whose threshold is non-negative and whose extent
// is at least the window size, then combine_or.
ReuseMask detect(const TokenGrid& tokens, const DetectorConfig& config);
ReuseMask detect(const TokenGrid& tokens, const AxisThresholds& thresholds, std::size_t window);

}  // namespace streuse
