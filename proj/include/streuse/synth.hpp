// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic token grids standing in for video latents. All randomness
// comes from a counter-based SplitMix64 stream keyed by an explicit seed, so
// a grid is a pure function of (shape, parameters, seed).

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "streuse/grid.hpp"
#include "streuse/matrix.hpp"

namespace streuse {

std::uint64_t splitmix64(std::uint64_t x);

// Independent sub-seed for a named stream (e.g. Q, K, V of one instance).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Random access counter-based generator: draw i depends only on (seed, i).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(splitmix64(seed)) {}

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const;
  // Standard normal via Box-Muller on counters (2*(i/2), 2*(i/2)+1).
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t key_;
};

// Sequential view over a CounterRng.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next_u64() { return rng_.bits(counter_++); }
  double uniform() { return rng_.uniform(counter_++); }
  double normal() { return rng_.normal(normal_counter_++); }
  // Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
  std::uint64_t normal_counter_ = std::uint64_t{1} << 62;
};

// i.i.d. standard normal entries; entry (n, c) uses draw n * d + c.
TokenGrid gen_random(const GridShape& shape, std::uint64_t seed);
TokenGrid gen_random(const GridShape& shape, const ChannelPartition& partition,
                     std::uint64_t seed);

// gen_random followed by stationary AR(1) smoothing along t, then x (w),
// then y (h): x_p = rho * x_{p-1} + sqrt(1 - rho^2) * e_p. Unit marginal
// variance is preserved; rho = 1 makes values constant along the axis.
TokenGrid gen_correlated(const GridShape& shape, double rho_t, double rho_x, double rho_y,
                         std::uint64_t seed);
TokenGrid gen_correlated(const GridShape& shape, const ChannelPartition& partition,
                         double rho_t, double rho_x, double rho_y, std::uint64_t seed);

enum class Regime {
  spatial,   // one H x W pattern repeated in every frame
  temporal,  // one vector per frame, constant within the frame
  mixed      // temporal channels follow the temporal regime, x/y channels the spatial one
};

Regime parse_regime(std::string_view name);
std::string_view regime_name(Regime regime);

struct QkPair {
  TokenGrid q;
  TokenGrid k;
};

// Q and K exhibiting one attention regime. `noise` adds i.i.d. N(0, noise^2).
QkPair gen_paired_qk(const GridShape& shape, Regime regime, std::uint64_t seed,
                     double noise = 0.0);

struct AttentionInputs {
  TokenGrid q;
  TokenGrid k;
  Matrix v;
};

struct CorrelationParams {
  double rho_t = 0.0;
  double rho_x = 0.0;
  double rho_y = 0.0;
};

// Independent correlated Q and K (RoPE applied when `rope` is set) and a
// random V.
AttentionInputs gen_correlated_qkv(const GridShape& shape, const ChannelPartition& partition,
                                   const CorrelationParams& rho, std::uint64_t seed,
                                   bool rope = true);

// Denoising-like sequence: step i mixes a fixed correlated latent with fresh
// noise, signal weight s_i = (i + 1) / steps and noise weight
// sqrt(1 - s_i^2), so later steps are more structured.
std::vector<AttentionInputs> gen_trajectory(const GridShape& shape,
                                            const ChannelPartition& partition,
                                            const CorrelationParams& rho, std::size_t steps,
                                            std::uint64_t seed, bool rope = true);

}  // namespace streuse
