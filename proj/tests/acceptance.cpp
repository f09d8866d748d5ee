// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "streuse/attention.hpp"
#include "streuse/bench.hpp"
#include "streuse/engine.hpp"
#include "streuse/metrics.hpp"
#include "streuse/schedule.hpp"
#include "streuse/synth.hpp"
#include "test_support.hpp"

using namespace streuse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_s > 0 && secs >= limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const GridShape kCorpusShape{4, 8, 8, 16};
constexpr std::size_t kCorpusSize = 20;

std::vector<AttentionInputs> corpus(CorrelationParams rho) {
  std::vector<AttentionInputs> out;
  for (std::uint64_t s = 0; s < kCorpusSize; ++s)
    out.push_back(gen_correlated_qkv(kCorpusShape, ChannelPartition::default_for(16), rho, 1000 + s));
  return out;
}

Outcome substitution_oracle() {
  RngStream rng(20240601);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng.below(64);
    const std::size_t d = 1 + rng.below(16);
    const double p = rng.uniform();
    const std::uint64_t seed = rng.next_u64();
    const Matrix q = testing::random_matrix(n, d, derive_seed(seed, 1));
    const Matrix k = testing::random_matrix(n, d, derive_seed(seed, 2));
    const Matrix v = testing::random_matrix(n, d, derive_seed(seed, 3));
    const auto mq = testing::random_valid_mask(n, d, p, derive_seed(seed, 4));
    const auto mk = testing::random_valid_mask(n, d, p, derive_seed(seed, 5));
    const auto reuse = reuse_attention(q, k, v, mq, mk);
    const auto oracle = testing::scalar_attention(substitute(q, mq), substitute(k, mk), v);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c)
        worst = std::max(worst, std::abs(reuse.output(i, c) - oracle.out[i][c]));
  }
  return {worst <= 1e-12, fmt("200 instances, max |reuse - oracle| = %.3g (tol 1e-12)", worst)};
}

// Copies the representative token's channels onto its window partners for a
// random subset of windows along each axis, so those windows are exact
// duplicates and every other window differs.
TokenGrid duplicate_grid(const GridShape& shape, std::size_t window, std::uint64_t seed) {
  TokenGrid g = gen_random(shape, seed);
  RngStream rng(derive_seed(seed, 9));
  for (Axis axis : kAxes) {
    const std::size_t ext = shape.extent(axis);
    for (std::size_t n = 0; n < shape.tokens(); ++n) {
      const Coords c = coords_of(n, shape);
      const std::size_t pos = c.along(axis);
      if (pos % window != 0 || pos + window > ext || rng.uniform() < 0.4) continue;
      for (std::size_t off = 1; off < window; ++off) {
        Coords o = c;
        if (axis == Axis::time) o.t += off;
        if (axis == Axis::x) o.w += off;
        if (axis == Axis::y) o.h += off;
        const std::size_t m = index_of(o, shape);
        for (std::size_t ch = 0; ch < shape.channels; ++ch) g.values()(m, ch) = g.values()(n, ch);
      }
    }
  }
  return g;
}

Outcome lossless_boundary() {
  std::size_t grids = 0, total_reused = 0;
  for (std::uint64_t s = 0; s < 24; ++s) {
    const std::size_t window = 2 + s % 2 * 2;  // 2 or 4
    const GridShape shape{4 + s % 3 * 4, 4, 8, 8};
    const auto q = duplicate_grid(shape, window, 10 * s + 1);
    const auto k = duplicate_grid(shape, window, 10 * s + 2);
    const Matrix v = testing::random_matrix(shape.tokens(), 8, 10 * s + 3);
    DetectorConfig cfg;
    cfg.thresholds = AxisThresholds::uniform(0.0);
    cfg.window = window;
    for (Granularity g : {Granularity::channel, Granularity::token}) {
      cfg.granularity = g;
      const auto mq = detect(q, cfg);
      const auto mk = detect(k, cfg);
      const auto reuse = reuse_attention(q.values(), k.values(), v, mq, mk);
      const auto dense = dense_attention(q.values(), k.values(), v);
      const std::uint64_t n = shape.tokens();
      if (!(reuse.output == dense.output) || !(reuse.attn_map == dense.attn_map))
        return {false, "output differs from dense at seed " + std::to_string(s)};
      if (reuse.stats.computed_entries + reuse.stats.copied_entries != n * n * 8 ||
          reuse.stats.skipped_entries != 0)
        return {false, "entry accounting mismatch at seed " + std::to_string(s)};
      if (mq.reusable_count() == 0 || mk.reusable_count() == 0)
        return {false, "duplicate grid produced no reuse at seed " + std::to_string(s)};
      total_reused += reuse.stats.copied_entries;
      ++grids;
    }
  }
  return {true, std::to_string(grids) + " grid pairs bit-identical, computed+copied = N^2 d, " +
                    std::to_string(total_reused) + " entries copied"};
}

struct ErrorSummary {
  double mse_reuse = 0, mse_skip = 0, mse_mag = 0;
  double worst_saving_gap = 0, mean_saving = 0;
};

ErrorSummary error_summary(const std::vector<AttentionInputs>& grids, double theta) {
  ErrorSummary s;
  MethodOptions opt;
  opt.theta = theta;
  for (const auto& in : grids) {
    const auto dense = dense_attention(in.q.values(), in.k.values(), in.v);
    const auto reuse = run_method(in, Method::reuse, opt, dense);
    const auto skip = run_method(in, Method::mask_skip, opt, dense);
    const auto mag = run_method(in, Method::mask_mag, opt, dense);
    s.mse_reuse += reuse.mse_vs_dense;
    s.mse_skip += skip.mse_vs_dense;
    s.mse_mag += mag.mse_vs_dense;
    s.mean_saving += reuse.stats.entry_reuse_ratio;
    s.worst_saving_gap = std::max(
        {s.worst_saving_gap,
         std::abs(skip.stats.entry_reuse_ratio - reuse.stats.entry_reuse_ratio),
         std::abs(mag.stats.entry_reuse_ratio - reuse.stats.entry_reuse_ratio)});
  }
  const double n = static_cast<double>(grids.size());
  s.mse_reuse /= n;
  s.mse_skip /= n;
  s.mse_mag /= n;
  s.mean_saving /= n;
  return s;
}

Outcome error_vs_baselines() {
  const auto s = error_summary(corpus({0.95, 0.95, 0.95}), 0.05);
  const double r_skip = s.mse_reuse / s.mse_skip;
  const double r_mag = s.mse_reuse / s.mse_mag;
  std::ostringstream d;
  d << "saving " << fmt("%.3f", s.mean_saving) << ", worst saving gap "
    << fmt("%.4f", s.worst_saving_gap) << " (tol 0.02), MSE reuse/skip " << fmt("%.4f", r_skip)
    << ", reuse/magnitude " << fmt("%.4f", r_mag) << " (tol 0.1)";
  return {s.worst_saving_gap <= 0.02 && r_skip <= 0.1 && r_mag <= 0.1, d.str()};
}

void temporal_only_note() {
  const auto s = error_summary(corpus({0.95, 0.0, 0.0}), 0.05);
  std::printf("[INFO] rho_t=0.95, rho_x=rho_y=0 corpus at theta 0.05: saving %.3f, MSE "
              "reuse/skip %.4f, reuse/magnitude %.4f\n",
              s.mean_saving, s.mse_reuse / s.mse_skip, s.mse_reuse / s.mse_mag);
}

Outcome monotonicity() {
  const auto grids = corpus({0.95, 0.95, 0.95});
  std::vector<double> thetas;
  for (int i = 0; i < 20; ++i) thetas.push_back(i / 19.0);
  struct Variant {
    Granularity g;
    ThresholdMode m;
  };
  const Variant variants[] = {{Granularity::channel, ThresholdMode::absolute},
                              {Granularity::token, ThresholdMode::absolute},
                              {Granularity::channel, ThresholdMode::channelwise}};
  std::size_t violations = 0, checks = 0;
  for (const auto& in : grids)
    for (const auto& var : variants) {
      double prev_q = -1, prev_k = -1, prev_e = -1;
      for (double th : thetas) {
        DetectorConfig cfg;
        cfg.thresholds = AxisThresholds::uniform(th);
        cfg.granularity = var.g;
        cfg.mode = var.m;
        const auto mq = detect(in.q, cfg);
        const auto mk = detect(in.k, cfg);
        const double rq = mq.ratio(), rk = mk.ratio(), re = entry_saving_ratio(mq, mk);
        violations += (rq < prev_q) + (rk < prev_k) + (re < prev_e);
        checks += 3;
        prev_q = rq;
        prev_k = rk;
        prev_e = re;
      }
    }
  return {violations == 0, std::to_string(violations) + " violations in " +
                               std::to_string(checks) + " comparisons (20 thetas, 20 grids)"};
}

Outcome schedule_presets_check() {
  struct Row {
    const char* name;
    double start, end;
    std::size_t i_min, i_max;
  };
  const Row table[] = {{"hunyuan", 0.2, 0.5, 10, 20},
                       {"wan21", 0.4, 0.6, 10, 48},
                       {"cogvideox", 0.2, 0.5, 10, 28},
                       {"opensoraplan", 0.4, 0.8, 20, 48}};
  for (const auto& r : table) {
    const auto& s = find_preset(r.name).schedule;
    if (s.i_min != r.i_min || s.i_max != r.i_max)
      return {false, std::string(r.name) + ": step bounds differ"};
    if (threshold_at(s, r.i_min) != r.start || threshold_at(s, r.i_max) != r.end)
      return {false, std::string(r.name) + ": endpoint thresholds differ"};
  }
  const auto& h = find_preset("hunyuan").schedule;
  if (h.total_steps != 50) return {false, "hunyuan does not have 50 steps"};
  std::vector<std::size_t> untouched;
  for (std::size_t i = 0; i < h.total_steps; ++i)
    if (is_untouched(h, i)) untouched.push_back(i);
  std::vector<std::size_t> expected{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 49};
  if (untouched != expected) return {false, "hunyuan untouched steps differ"};
  return {true, "4 presets exact at both endpoints; hunyuan untouched steps 0-9 and 49 of 50"};
}

Outcome speedup_accounting() {
  double worst = 0.0;
  const auto grids = corpus({0.95, 0.95, 0.95});
  for (std::size_t g = 0; g < 5; ++g)
    for (double th : {0.0, 0.02, 0.05, 0.1, 0.3, 1.0}) {
      MethodOptions opt;
      opt.theta = th;
      const auto rec = run_method(grids[g], Method::reuse, opt);
      const double s = theoretical_speedup(rec.stats, 1.0);
      worst = std::max(worst, std::abs(s - 1.0 / (1.0 - rec.stats.entry_reuse_ratio)));
    }
  RunStats st;
  st.computed_entries = 3;
  st.copied_entries = 17;
  st.qk_flops_dense = 40;
  st.qk_flops_actual = 6;
  st.entry_reuse_ratio = 0.85;
  const double f = kDefaultAttentionFraction;
  const double got = theoretical_speedup(st, f);
  const double closed = 1.0 / ((1.0 - f) + f * (1.0 - 0.85));
  const double gap = std::abs(got - closed);
  return {worst <= 1e-12 && gap <= 1e-9,
          fmt("f=1 max gap %.3g (tol 1e-12); ", worst) +
              fmt("f=0.78, r=0.85 gives %.4fx, ", got) + fmt("gap %.3g (tol 1e-9)", gap)};
}

Outcome determinism() {
  const auto grids = corpus({0.95, 0.95, 0.95});
  SweepOptions opt;
  opt.thetas = parse_theta_list("0:0.5:11");
  opt.methods = {Method::dense, Method::reuse, Method::mask_mag, Method::mask_skip};
  std::ostringstream a, b;
  cmd_sweep(grids[0], opt, a);
  opt.base.engine.threads = 4;
  cmd_sweep(grids[0], opt, b);
  if (a.str() != b.str()) return {false, "sweep CSV differs between runs"};

  std::size_t compared = 0;
  for (std::size_t g = 0; g < 5; ++g) {
    const auto mq = detect(grids[g].q, AxisThresholds::uniform(0.1), 2);
    const auto mk = detect(grids[g].k, AxisThresholds::uniform(0.1), 2);
    const auto& q = grids[g].q.values();
    const auto& k = grids[g].k.values();
    const auto base = reuse_attention(q, k, grids[g].v, mq, mk, {1});
    const auto base_skip = masking_baseline_skip(q, k, grids[g].v, mq, mk, {1});
    for (std::size_t t : {2, 3, 4, 7, 16}) {
      const auto r = reuse_attention(q, k, grids[g].v, mq, mk, {t});
      const auto sk = masking_baseline_skip(q, k, grids[g].v, mq, mk, {t});
      if (!(r.output == base.output) || !(r.attn_map == base.attn_map) ||
          r.stats.computed_entries != base.stats.computed_entries ||
          !(sk.output == base_skip.output))
        return {false, "results depend on thread count (" + std::to_string(t) + " threads)"};
      ++compared;
    }
  }
  return {true, "sweep CSV byte-identical (" + std::to_string(a.str().size()) +
                    " bytes); " + std::to_string(compared) +
                    " thread-count comparisons bit-identical"};
}

}  // namespace

int main() {
  report(1, "substitution-oracle equivalence", 30, substitution_oracle);
  report(2, "lossless boundary", 5, lossless_boundary);
  report(3, "error vs masking baselines at matched saving", 120, error_vs_baselines);
  temporal_only_note();
  report(4, "detector monotonicity", 0, monotonicity);
  report(5, "schedule presets", 0, schedule_presets_check);
  report(6, "speedup accounting", 0, speedup_accounting);
  report(7, "determinism", 0, determinism);
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
