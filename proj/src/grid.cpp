// SPDX-License-Identifier: Apache-2.0

#include "streuse/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace streuse {

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::time: return "t";
    case Axis::x: return "x";
    case Axis::y: return "y";
  }
  return "?";
}

std::size_t GridShape::extent(Axis axis) const {
  switch (axis) {
    case Axis::time: return frames;
    case Axis::x: return width;
    case Axis::y: return height;
  }
  return 0;
}

void validate(const GridShape& shape) {
  if (shape.tokens() == 0) throw std::invalid_argument("GridShape: T*H*W must be positive");
  if (shape.channels == 0 || shape.channels % 2 != 0)
    throw std::invalid_argument("GridShape: channel count must be positive and even, got " +
                                std::to_string(shape.channels));
}

std::pair<std::size_t, std::size_t> ChannelPartition::range(Axis axis) const {
  switch (axis) {
    case Axis::time: return {0, temporal};
    case Axis::x: return {temporal, temporal + x};
    case Axis::y: return {temporal + x, temporal + x + y};
  }
  return {0, 0};
}

Axis ChannelPartition::axis_of(std::size_t channel) const {
  if (channel < temporal) return Axis::time;
  if (channel < temporal + x) return Axis::x;
  if (channel < total()) return Axis::y;
  throw std::invalid_argument("ChannelPartition: channel " + std::to_string(channel) +
                              " outside partition of " + std::to_string(total()));
}

ChannelPartition ChannelPartition::default_for(std::size_t channels) {
  if (channels == 0 || channels % 2 != 0)
    throw std::invalid_argument("ChannelPartition: channel count must be positive and even");
  const std::size_t pairs = channels / 2;
  std::size_t temporal_pairs = std::max<std::size_t>(1, pairs / 4);
  const std::size_t spatial_pairs = pairs - temporal_pairs;
  const std::size_t y_pairs = spatial_pairs / 2;
  const std::size_t x_pairs = spatial_pairs - y_pairs;
  return {2 * temporal_pairs, 2 * x_pairs, 2 * y_pairs};
}

void validate(const ChannelPartition& partition, std::size_t channels) {
  if (partition.total() != channels)
    throw std::invalid_argument("ChannelPartition: groups sum to " +
                                std::to_string(partition.total()) + ", expected " +
                                std::to_string(channels));
  if (partition.temporal % 2 || partition.x % 2 || partition.y % 2)
    throw std::invalid_argument("ChannelPartition: every group size must be even");
}

std::size_t Coords::along(Axis axis) const {
  switch (axis) {
    case Axis::time: return t;
    case Axis::x: return w;
    case Axis::y: return h;
  }
  return 0;
}

Coords coords_of(std::size_t index, const GridShape& shape) {
  if (index >= shape.tokens())
    throw std::invalid_argument("coords_of: index " + std::to_string(index) +
                                " out of range for " + std::to_string(shape.tokens()) + " tokens");
  const std::size_t plane = shape.height * shape.width;
  return {index / plane, (index % plane) / shape.width, index % shape.width};
}

std::size_t index_of(const Coords& c, const GridShape& shape) {
  if (c.t >= shape.frames || c.h >= shape.height || c.w >= shape.width)
    throw std::invalid_argument("index_of: coordinates out of range");
  return (c.t * shape.height + c.h) * shape.width + c.w;
}

TokenGrid::TokenGrid(GridShape shape, ChannelPartition partition, Matrix values)
    : shape_(shape), partition_(partition), values_(std::move(values)) {
  validate(shape_);
  validate(partition_, shape_.channels);
  if (values_.rows() != shape_.tokens() || values_.cols() != shape_.channels)
    throw std::invalid_argument("TokenGrid: values are " + std::to_string(values_.rows()) + "x" +
                                std::to_string(values_.cols()) + ", shape needs " +
                                std::to_string(shape_.tokens()) + "x" +
                                std::to_string(shape_.channels));
}

TokenGrid::TokenGrid(GridShape shape, Matrix values)
    : TokenGrid(shape, ChannelPartition::default_for(shape.channels), std::move(values)) {}

double rope_angle(std::size_t position, std::size_t pair, std::size_t group_dim, double base) {
  const double exponent = 2.0 * static_cast<double>(pair) / static_cast<double>(group_dim);
  return static_cast<double>(position) / std::pow(base, exponent);
}

std::pair<double, double> rotate_pair(double x, double y, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * x - s * y, s * x + c * y};
}

TokenGrid rope_encode(const TokenGrid& tokens, double base) {
  if (!(base > 0.0)) throw std::invalid_argument("rope_encode: frequency base must be positive");
  const auto& shape = tokens.shape();
  const auto& part = tokens.partition();
  validate(part, shape.channels);

  Matrix out = tokens.values();
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    const Coords c = coords_of(n, shape);
    auto row = out.row(n);
    for (Axis axis : kAxes) {
      const auto [begin, end] = part.range(axis);
      const std::size_t group_dim = end - begin;
      const std::size_t p = c.along(axis);
      for (std::size_t pair = 0; 2 * pair < group_dim; ++pair) {
        const std::size_t ch = begin + 2 * pair;
        const auto [a, b] = rotate_pair(row[ch], row[ch + 1], rope_angle(p, pair, group_dim, base));
        row[ch] = a;
        row[ch + 1] = b;
      }
    }
  }
  return TokenGrid(shape, part, std::move(out));
}

}  // namespace streuse
