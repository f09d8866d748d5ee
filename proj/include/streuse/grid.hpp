// SPDX-License-Identifier: Apache-2.0
//
// Token grid geometry: a video latent is T frames of H x W tokens, each with
// d channels. Tokens are stored t-major, then h, then w. Channels are split
// into three contiguous RoPE groups: temporal, x-direction, y-direction.

#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>

#include "streuse/matrix.hpp"

namespace streuse {

enum class Axis { time = 0, x = 1, y = 2 };

inline constexpr std::array<Axis, 3> kAxes = {Axis::time, Axis::x, Axis::y};

std::string_view axis_name(Axis axis);

struct GridShape {
  std::size_t frames = 1;    // T
  std::size_t height = 1;    // H, tokens per column
  std::size_t width = 1;     // W, tokens per row
  std::size_t channels = 2;  // d

  std::size_t tokens() const { return frames * height * width; }
  // Extent along an axis: time -> T, x -> W, y -> H.
  std::size_t extent(Axis axis) const;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Throws std::invalid_argument unless N > 0 and d is even.
void validate(const GridShape& shape);

struct ChannelPartition {
  std::size_t temporal = 0;
  std::size_t x = 0;
  std::size_t y = 0;

  std::size_t total() const { return temporal + x + y; }
  // [begin, end) channel range of a group.
  std::pair<std::size_t, std::size_t> range(Axis axis) const;
  // Group a channel belongs to.
  Axis axis_of(std::size_t channel) const;

  // Roughly a quarter temporal, the rest split between x and y; d = 16 gives
  // 4/6/6, d = 128 gives 32/48/48.
  static ChannelPartition default_for(std::size_t channels);

  friend bool operator==(const ChannelPartition&, const ChannelPartition&) = default;
};

void validate(const ChannelPartition& partition, std::size_t channels);

struct Coords {
  std::size_t t = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t along(Axis axis) const;
  friend bool operator==(const Coords&, const Coords&) = default;
};

Coords coords_of(std::size_t index, const GridShape& shape);
std::size_t index_of(const Coords& coords, const GridShape& shape);

class TokenGrid {
 public:
  TokenGrid(GridShape shape, ChannelPartition partition, Matrix values);
  TokenGrid(GridShape shape, Matrix values);

  const GridShape& shape() const { return shape_; }
  const ChannelPartition& partition() const { return partition_; }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  double at(const Coords& c, std::size_t channel) const {
    return values_(index_of(c, shape_), channel);
  }

 private:
  GridShape shape_;
  ChannelPartition partition_;
  Matrix values_;
};

inline constexpr double kRopeBase = 10000.0;

// Angle for pair `pair` of a group with `group_dim` channels at position p:
// p / base^(2 * pair / group_dim).
double rope_angle(std::size_t position, std::size_t pair, std::size_t group_dim, double base);

std::pair<double, double> rotate_pair(double x, double y, double angle);

// Rotates each channel pair of each group by the token's coordinate along
// that group's axis (temporal by t, x-group by w, y-group by h).
TokenGrid rope_encode(const TokenGrid& tokens, double base = kRopeBase);

}  // namespace streuse
