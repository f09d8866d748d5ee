// SPDX-License-Identifier: Apache-2.0

#include "streuse/detector.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace streuse {

double AxisThresholds::for_axis(Axis axis) const {
  switch (axis) {
    case Axis::time: return t;
    case Axis::x: return x;
    case Axis::y: return y;
  }
  return -1.0;
}

Granularity parse_granularity(std::string_view name) {
  if (name == "channel") return Granularity::channel;
  if (name == "token") return Granularity::token;
  throw std::invalid_argument("unknown granularity '" + std::string(name) +
                              "' (expected channel or token)");
}

std::string_view granularity_name(Granularity g) {
  return g == Granularity::channel ? "channel" : "token";
}

ThresholdMode parse_threshold_mode(std::string_view name) {
  if (name == "absolute") return ThresholdMode::absolute;
  if (name == "channelwise") return ThresholdMode::channelwise;
  throw std::invalid_argument("unknown threshold mode '" + std::string(name) +
                              "' (expected absolute or channelwise)");
}

std::string_view threshold_mode_name(ThresholdMode m) {
  return m == ThresholdMode::absolute ? "absolute" : "channelwise";
}

ReuseMask::ReuseMask(std::size_t tokens, std::size_t channels, std::size_t window_size)
    : tokens_(tokens),
      channels_(channels),
      window_(window_size),
      reusable_(tokens * channels, 0),
      representative_(tokens * channels) {
  for (std::size_t t = 0; t < tokens; ++t)
    std::fill_n(representative_.begin() + static_cast<std::ptrdiff_t>(t * channels), channels, t);
}

void ReuseMask::mark(std::size_t token, std::size_t channel, std::size_t rep) {
  if (token >= tokens_ || channel >= channels_ || rep >= tokens_)
    throw std::out_of_range("ReuseMask::mark: index out of range");
  if (rep == token) throw std::invalid_argument("ReuseMask::mark: token cannot represent itself");
  reusable_[token * channels_ + channel] = 1;
  representative_[token * channels_ + channel] = rep;
}

void ReuseMask::clear(std::size_t token, std::size_t channel) {
  reusable_[token * channels_ + channel] = 0;
  representative_[token * channels_ + channel] = token;
}

std::size_t ReuseMask::reusable_count() const {
  return static_cast<std::size_t>(std::count(reusable_.begin(), reusable_.end(), 1));
}

std::size_t ReuseMask::reusable_count(std::size_t channel) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < tokens_; ++t) n += reusable_[t * channels_ + channel];
  return n;
}

double ReuseMask::ratio() const {
  if (reusable_.empty()) return 0.0;
  return static_cast<double>(reusable_count()) / static_cast<double>(reusable_.size());
}

void ReuseMask::check_invariants() const {
  for (std::size_t t = 0; t < tokens_; ++t) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t rep = representative(t, c);
      if (rep >= tokens_) throw std::logic_error("ReuseMask: representative out of range");
      if (!reusable(t, c)) {
        if (rep != t)
          throw std::logic_error("ReuseMask: computed entry (" + std::to_string(t) + ", " +
                                 std::to_string(c) + ") has a foreign representative");
      } else if (rep == t || reusable(rep, c)) {
        throw std::logic_error("ReuseMask: reusable entry (" + std::to_string(t) + ", " +
                               std::to_string(c) + ") points at a non-computed representative");
      }
    }
  }
}

double delta(std::span<const double> window) {
  if (window.size() < 2)
    throw std::invalid_argument("delta: window size must be at least 2, got " +
                                std::to_string(window.size()));
  const double k = static_cast<double>(window.size());
  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / k;
  double ss = 0.0;
  for (double a : window) ss += (a - mean) * (a - mean);
  return std::sqrt(ss / k);
}

ReuseMask detect_axis(const TokenGrid& tokens, Axis axis, double theta, std::size_t window,
                      Granularity granularity, ThresholdMode mode) {
  const GridShape& shape = tokens.shape();
  const Matrix& values = tokens.values();
  const std::size_t d = shape.channels;
  if (window < 2) throw std::invalid_argument("detect_axis: window size must be at least 2");
  if (window > shape.extent(axis))
    throw std::invalid_argument("detect_axis: window size " + std::to_string(window) +
                                " exceeds extent " + std::to_string(shape.extent(axis)) +
                                " of axis " + std::string(axis_name(axis)));

  ReuseMask mask(shape.tokens(), d, window);
  const std::size_t extent = shape.extent(axis);
  std::vector<std::size_t> members(window);
  std::vector<double> buf(window);
  std::vector<double> deltas(d);
  std::vector<std::uint8_t> pass(d);

  // Walk every line along `axis`: the other two coordinates are fixed.
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    const Coords origin = coords_of(n, shape);
    if (origin.along(axis) != 0) continue;
    for (std::size_t start = 0; start + window <= extent; start += window) {
      for (std::size_t k = 0; k < window; ++k) {
        Coords c = origin;
        switch (axis) {
          case Axis::time: c.t = start + k; break;
          case Axis::x: c.w = start + k; break;
          case Axis::y: c.h = start + k; break;
        }
        members[k] = index_of(c, shape);
      }
      for (std::size_t ch = 0; ch < d; ++ch) {
        for (std::size_t k = 0; k < window; ++k) buf[k] = values(members[k], ch);
        deltas[ch] = delta(buf);
      }
      double bound = theta;
      if (mode == ThresholdMode::channelwise) {
        double mean_abs = 0.0;
        for (double v : deltas) mean_abs += std::abs(v);
        bound = theta * (mean_abs / static_cast<double>(d));
        if (theta < 0.0) bound = -1.0;
      }
      bool all_pass = true;
      for (std::size_t ch = 0; ch < d; ++ch) {
        // Delta == 0 passes at theta == 0: bit-identical windows are lossless.
        pass[ch] = bound >= 0.0 && (deltas[ch] < bound || deltas[ch] == 0.0);
        all_pass = all_pass && pass[ch];
      }
      for (std::size_t ch = 0; ch < d; ++ch) {
        const bool ok = granularity == Granularity::token ? all_pass : pass[ch] != 0;
        if (!ok) continue;
        for (std::size_t k = 1; k < window; ++k) mask.mark(members[k], ch, members[0]);
      }
    }
  }
  return mask;
}

ReuseMask combine_or(std::span<const ReuseMask> masks) {
  if (masks.empty()) throw std::invalid_argument("combine_or: no masks given");
  const std::size_t tokens = masks.front().tokens();
  const std::size_t channels = masks.front().channels();
  for (const auto& m : masks)
    if (m.tokens() != tokens || m.channels() != channels)
      throw std::invalid_argument("combine_or: mask dimensions differ");

  ReuseMask out(tokens, channels, masks.front().window_size());
  for (std::size_t c = 0; c < channels; ++c) {
    // Ascending token order: a representative always precedes the tokens that
    // copy from it, so its own entry is final when we get to them.
    for (std::size_t t = 0; t < tokens; ++t) {
      for (const auto& m : masks) {
        if (!m.reusable(t, c)) continue;
        std::size_t rep = m.representative(t, c);
        if (rep >= t)
          throw std::invalid_argument("combine_or: representative must precede the token");
        if (out.reusable(rep, c)) rep = out.representative(rep, c);
        out.mark(t, c, rep);
        break;
      }
    }
  }
  return out;
}

ReuseMask detect(const TokenGrid& tokens, const DetectorConfig& config) {
  const GridShape& shape = tokens.shape();
  if (config.window < 2) throw std::invalid_argument("detect: window size must be at least 2");
  std::array<ReuseMask, 3> per_axis;
  for (std::size_t a = 0; a < kAxes.size(); ++a) {
    const Axis axis = kAxes[a];
    const double theta = config.thresholds.for_axis(axis);
    if (theta < 0.0 || shape.extent(axis) < config.window) {
      per_axis[a] = ReuseMask(shape.tokens(), shape.channels, config.window);
    } else {
      per_axis[a] =
          detect_axis(tokens, axis, theta, config.window, config.granularity, config.mode);
    }
  }
  return combine_or(per_axis);
}

ReuseMask detect(const TokenGrid& tokens, const AxisThresholds& thresholds, std::size_t window) {
  DetectorConfig config;
  config.thresholds = thresholds;
  config.window = window;
  return detect(tokens, config);
}

}  // namespace streuse
