// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "streuse/attention.hpp"
#include "streuse/detector.hpp"
#include "streuse/synth.hpp"

using namespace streuse;

TEST_CASE("splitmix64 reference values") {
  // First outputs of the reference SplitMix64 stream seeded with 0, i.e.
  // splitmix64 applied to 0, 1*gamma, 2*gamma.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);
  CHECK(splitmix64(0x3C6EF372FE94F82AULL) == 0x06C45D188009454FULL);
}

TEST_CASE("gen_random is deterministic and seed-sensitive") {
  const GridShape shape{2, 3, 4, 6};
  CHECK(gen_random(shape, 42).values() == gen_random(shape, 42).values());
  CHECK_FALSE(gen_random(shape, 42).values() == gen_random(shape, 43).values());
}

TEST_CASE("gen_random sample statistics") {
  const GridShape shape{10, 10, 10, 10};  // 10^4 entries
  const auto g = gen_random(shape, 7);
  double sum = 0.0, sq = 0.0;
  for (double v : g.values().data()) {
    sum += v;
    sq += v * v;
  }
  const double n = 1e4;
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 0.1);
}

TEST_CASE("gen_correlated limits") {
  const GridShape shape{4, 3, 5, 4};
  CHECK(gen_correlated(shape, 0.0, 0.0, 0.0, 9).values() == gen_random(shape, 9).values());

  const auto g = gen_correlated(shape, 1.0, 0.0, 0.0, 9);
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    Coords c = coords_of(n, shape);
    c.t = 0;
    for (std::size_t ch = 0; ch < 4; ++ch) CHECK(g.values()(n, ch) == g.at(c, ch));
  }
  const auto m = detect(g, AxisThresholds{1e-9, -1, -1}, 2);
  CHECK(m.reusable_count() == shape.tokens() * 4 / 2);

  CHECK_THROWS_AS(gen_correlated(shape, 1.2, 0, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_correlated(shape, 0, -0.1, 0, 1), std::invalid_argument);
}

TEST_CASE("gen_correlated lag-1 autocorrelation along t") {
  const GridShape shape{64, 4, 4, 8};
  const auto g = gen_correlated(shape, 0.9, 0.0, 0.0, 21);
  double num = 0.0, den = 0.0, mean = 0.0;
  for (double v : g.values().data()) mean += v;
  mean /= static_cast<double>(g.values().size());
  for (std::size_t n = 0; n < shape.tokens(); ++n) {
    const Coords c = coords_of(n, shape);
    for (std::size_t ch = 0; ch < 8; ++ch) {
      const double x = g.values()(n, ch) - mean;
      den += x * x;
      if (c.t + 1 < shape.frames) {
        const double y = g.values()(index_of({c.t + 1, c.h, c.w}, shape), ch) - mean;
        num += x * y;
      }
    }
  }
  CHECK(std::abs(num / den - 0.9) < 0.1);
}

TEST_CASE("gen_paired_qk spatial regime repeats frame blocks") {
  const GridShape shape{3, 3, 4, 8};
  const auto qk = gen_paired_qk(shape, Regime::spatial, 5);
  const Matrix logits = attention_logits(qk.q.values(), qk.k.values());
  const std::size_t plane = 12;
  double worst = 0.0;
  for (std::size_t i = 0; i < shape.tokens(); ++i)
    for (std::size_t j = 0; j < shape.tokens(); ++j)
      worst = std::max(worst, std::abs(logits(i, j) - logits(i % plane, j % plane)));
  CHECK(worst < 1e-6);
}

TEST_CASE("gen_paired_qk temporal regime is constant inside frame blocks") {
  const GridShape shape{3, 3, 4, 8};
  const auto qk = gen_paired_qk(shape, Regime::temporal, 5);
  const Matrix logits = attention_logits(qk.q.values(), qk.k.values());
  const std::size_t plane = 12;
  double worst = 0.0;
  for (std::size_t i = 0; i < shape.tokens(); ++i)
    for (std::size_t j = 0; j < shape.tokens(); ++j)
      worst = std::max(worst, std::abs(logits(i, j) - logits(i / plane * plane, j / plane * plane)));
  CHECK(worst < 1e-6);
}

TEST_CASE("noise-free regimes are reusable along their axis") {
  const GridShape shape{4, 4, 4, 8};
  const auto spatial = gen_paired_qk(shape, Regime::spatial, 1);
  CHECK(detect_axis(spatial.q, Axis::time, 1e-6, 2).ratio() >= 0.5);
  CHECK(detect_axis(spatial.k, Axis::time, 1e-6, 2).ratio() >= 0.5);
  const auto temporal = gen_paired_qk(shape, Regime::temporal, 1);
  CHECK(detect_axis(temporal.q, Axis::x, 1e-6, 2).ratio() >= 0.5);
  CHECK(detect_axis(temporal.q, Axis::y, 1e-6, 2).ratio() >= 0.5);
  const auto mixed = gen_paired_qk(shape, Regime::mixed, 1);
  // Temporal channels are frame-constant, x/y channels repeat over frames.
  const auto part = mixed.q.partition();
  const auto mt = detect_axis(mixed.q, Axis::time, 1e-6, 2);
  const auto mx = detect_axis(mixed.q, Axis::x, 1e-6, 2);
  for (std::size_t c = 0; c < 8; ++c) {
    if (part.axis_of(c) == Axis::time)
      CHECK(mx.reusable_count(c) == shape.tokens() / 2);
    else
      CHECK(mt.reusable_count(c) == shape.tokens() / 2);
  }
  CHECK(gen_paired_qk(shape, Regime::spatial, 1, 0.1).q.values() != spatial.q.values());
  CHECK_THROWS_AS(parse_regime("diagonal"), std::invalid_argument);
}

TEST_CASE("gen_trajectory gets more structured over steps") {
  const GridShape shape{4, 4, 4, 8};
  const auto part = ChannelPartition::default_for(8);
  const auto steps = gen_trajectory(shape, part, {0.95, 0.95, 0.95}, 8, 3, false);
  REQUIRE(steps.size() == 8);
  const auto early = detect(steps[0].q, AxisThresholds::uniform(0.1), 2).ratio();
  const auto late = detect(steps[7].q, AxisThresholds::uniform(0.1), 2).ratio();
  CHECK(late > early);
  CHECK(steps[0].v == steps[7].v);
}
