// SPDX-License-Identifier: Apache-2.0

#include "streuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace streuse {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ULL));
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return splitmix64(key_ + counter * 0x9E3779B97F4A7C15ULL);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  const std::uint64_t base = 2 * (index / 2);
  // u1 in (0, 1] keeps the log finite.
  const double u1 = (static_cast<double>(bits(base) >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform(base + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return index % 2 == 0 ? r * std::cos(a) : r * std::sin(a);
}

std::size_t RngStream::below(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below: bound must be positive");
  return static_cast<std::size_t>(next_u64() % bound);
}

TokenGrid gen_random(const GridShape& shape, std::uint64_t seed) {
  validate(shape);
  return gen_random(shape, ChannelPartition::default_for(shape.channels), seed);
}

TokenGrid gen_random(const GridShape& shape, const ChannelPartition& partition,
                     std::uint64_t seed) {
  validate(shape);
  const CounterRng rng(seed);
  Matrix values(shape.tokens(), shape.channels);
  auto data = values.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = rng.normal(i);
  return TokenGrid(shape, partition, std::move(values));
}

namespace {

void check_rho(double rho, const char* name) {
  if (!(rho >= 0.0 && rho <= 1.0))
    throw std::invalid_argument(std::string("gen_correlated: ") + name + " = " +
                                std::to_string(rho) + " outside [0, 1]");
}

void smooth_along(Matrix& values, const GridShape& shape, Axis axis, double rho) {
  if (rho == 0.0) return;
  const double innovation = std::sqrt(1.0 - rho * rho);
  const std::size_t d = shape.channels;
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    Coords c = coords_of(n, shape);
    if (c.along(axis) == 0) continue;
    Coords prev = c;
    switch (axis) {
      case Axis::time: --prev.t; break;
      case Axis::x: --prev.w; break;
      case Axis::y: --prev.h; break;
    }
    // Positions are visited in ascending index order, so `prev` is already
    // smoothed.
    const std::size_t p = index_of(prev, shape);
    for (std::size_t ch = 0; ch < d; ++ch)
      values(n, ch) = rho * values(p, ch) + innovation * values(n, ch);
  }
}

}  // namespace

TokenGrid gen_correlated(const GridShape& shape, double rho_t, double rho_x, double rho_y,
                         std::uint64_t seed) {
  validate(shape);
  return gen_correlated(shape, ChannelPartition::default_for(shape.channels), rho_t, rho_x,
                        rho_y, seed);
}

TokenGrid gen_correlated(const GridShape& shape, const ChannelPartition& partition,
                         double rho_t, double rho_x, double rho_y, std::uint64_t seed) {
  check_rho(rho_t, "rho_t");
  check_rho(rho_x, "rho_x");
  check_rho(rho_y, "rho_y");
  TokenGrid grid = gen_random(shape, partition, seed);
  smooth_along(grid.values(), shape, Axis::time, rho_t);
  smooth_along(grid.values(), shape, Axis::x, rho_x);
  smooth_along(grid.values(), shape, Axis::y, rho_y);
  return grid;
}

Regime parse_regime(std::string_view name) {
  if (name == "spatial") return Regime::spatial;
  if (name == "temporal") return Regime::temporal;
  if (name == "mixed") return Regime::mixed;
  throw std::invalid_argument("unknown regime '" + std::string(name) +
                              "' (expected spatial, temporal or mixed)");
}

std::string_view regime_name(Regime regime) {
  switch (regime) {
    case Regime::spatial: return "spatial";
    case Regime::temporal: return "temporal";
    case Regime::mixed: return "mixed";
  }
  return "?";
}

namespace {

TokenGrid regime_grid(const GridShape& shape, const ChannelPartition& part, Regime regime,
                      std::uint64_t seed, double noise) {
  const std::size_t d = shape.channels;
  const CounterRng pattern_rng(derive_seed(seed, 1));  // plane x d spatial pattern
  const CounterRng frame_rng(derive_seed(seed, 2));    // T x d per-frame values
  const CounterRng noise_rng(derive_seed(seed, 3));

  Matrix values(shape.tokens(), d);
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    const Coords c = coords_of(n, shape);
    const std::size_t pos = c.h * shape.width + c.w;
    for (std::size_t ch = 0; ch < d; ++ch) {
      Regime r = regime;
      if (regime == Regime::mixed)
        r = part.axis_of(ch) == Axis::time ? Regime::temporal : Regime::spatial;
      double v = r == Regime::spatial ? pattern_rng.normal(pos * d + ch)
                                      : frame_rng.normal(c.t * d + ch);
      if (noise != 0.0) v += noise * noise_rng.normal(n * d + ch);
      values(n, ch) = v;
    }
  }
  return TokenGrid(shape, part, std::move(values));
}

}  // namespace

QkPair gen_paired_qk(const GridShape& shape, Regime regime, std::uint64_t seed, double noise) {
  validate(shape);
  const auto part = ChannelPartition::default_for(shape.channels);
  return {regime_grid(shape, part, regime, derive_seed(seed, 'Q'), noise),
          regime_grid(shape, part, regime, derive_seed(seed, 'K'), noise)};
}

AttentionInputs gen_correlated_qkv(const GridShape& shape, const ChannelPartition& partition,
                                   const CorrelationParams& rho, std::uint64_t seed, bool rope) {
  TokenGrid q = gen_correlated(shape, partition, rho.rho_t, rho.rho_x, rho.rho_y,
                               derive_seed(seed, 'Q'));
  TokenGrid k = gen_correlated(shape, partition, rho.rho_t, rho.rho_x, rho.rho_y,
                               derive_seed(seed, 'K'));
  Matrix v = gen_random(shape, partition, derive_seed(seed, 'V')).values();
  if (rope) return {rope_encode(q), rope_encode(k), std::move(v)};
  return {std::move(q), std::move(k), std::move(v)};
}

std::vector<AttentionInputs> gen_trajectory(const GridShape& shape,
                                            const ChannelPartition& partition,
                                            const CorrelationParams& rho, std::size_t steps,
                                            std::uint64_t seed, bool rope) {
  const AttentionInputs clean = gen_correlated_qkv(shape, partition, rho, seed, false);
  std::vector<AttentionInputs> out;
  out.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double s = static_cast<double>(i + 1) / static_cast<double>(steps);
    const double w = std::sqrt(std::max(0.0, 1.0 - s * s));
    auto mix = [&](const TokenGrid& base, std::uint64_t stream) {
      const TokenGrid noise = gen_random(shape, partition, derive_seed(seed, stream + 16 * i));
      Matrix m = add(scale(base.values(), s), scale(noise.values(), w));
      TokenGrid g(shape, partition, std::move(m));
      return rope ? rope_encode(g) : g;
    };
    out.push_back({mix(clean.q, 1000), mix(clean.k, 2000), clean.v});
  }
  return out;
}

}  // namespace streuse
