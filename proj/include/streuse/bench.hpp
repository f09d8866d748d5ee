// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver behind the streuse_bench CLI: grid generation, single
// runs, threshold sweeps and schedule simulation. Output schemas:
//
//   run       one JSON object per line with fields method, theta, window,
//             reuse_ratio_q, reuse_ratio_k, entry_reuse_ratio, mse_vs_dense,
//             psnr_vs_dense, qk_flops_dense, qk_flops_actual, wall_ms
//             (plus granularity and theoretical_speedup)
//   sweep     CSV theta,method,entry_reuse_ratio,mse,psnr,qk_flops_actual
//   schedule  CSV step,theta,entry_reuse_ratio,mse,psnr

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streuse/attention.hpp"
#include "streuse/detector.hpp"
#include "streuse/engine.hpp"
#include "streuse/metrics.hpp"
#include "streuse/schedule.hpp"
#include "streuse/synth.hpp"

namespace streuse {

// Shortest round-trip decimal; "inf"/"-inf"/"nan" for non-finite values.
std::string format_double(double v);

enum class Method { dense, reuse, mask_mag, mask_skip };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);

struct GenOptions {
  GridShape shape{2, 2, 2, 4};
  std::optional<ChannelPartition> partition;
  std::uint64_t seed = 0;
  std::string kind = "correlated";  // random | correlated | spatial | temporal | mixed
  CorrelationParams rho;
  std::string role = "q";  // q | k, picks one side of a paired regime
  double noise = 0.0;
  bool rope = false;
};

TokenGrid generate_grid(const GenOptions& options);
// Writes the grid and a "<out>.json" sidecar.
void cmd_gen(const GenOptions& options, const std::filesystem::path& out);

struct MethodOptions {
  double theta = 0.0;
  std::size_t window = 2;
  Granularity granularity = Granularity::channel;
  ThresholdMode mode = ThresholdMode::absolute;
  // mask-mag only; when unset the ratio matches reuse's saving at theta.
  std::optional<double> save_ratio;
  EngineOptions engine;
  double attention_fraction = kDefaultAttentionFraction;
};

struct RunRecord {
  Method method = Method::dense;
  double theta = 0.0;
  std::size_t window = 2;
  Granularity granularity = Granularity::channel;
  RunStats stats;
  double mse_vs_dense = 0.0;
  double psnr_vs_dense = 0.0;
  double theoretical_speedup = 1.0;
  double wall_ms = 0.0;
};

RunRecord run_method(const AttentionInputs& inputs, Method method, const MethodOptions& options,
                     const AttentionOutput& dense);
RunRecord run_method(const AttentionInputs& inputs, Method method, const MethodOptions& options);

std::string format_record(const RunRecord& record);

AttentionInputs load_inputs(const std::filesystem::path& q, const std::filesystem::path& k,
                            const std::filesystem::path& v);

struct SweepOptions {
  std::vector<double> thetas;
  std::vector<Method> methods;
  MethodOptions base;
};

void cmd_sweep(const AttentionInputs& inputs, const SweepOptions& options, std::ostream& csv);

void cmd_schedule(std::span<const AttentionInputs> steps, const ThresholdSchedule& schedule,
                  const DetectorConfig& detector, const EngineOptions& engine, std::ostream& csv);

// "a,b,c" list or "start:stop:count" inclusive range.
std::vector<double> parse_theta_list(std::string_view text);

}  // namespace streuse
