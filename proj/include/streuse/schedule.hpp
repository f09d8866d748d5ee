// SPDX-License-Identifier: Apache-2.0
//
// Per-denoising-step thresholds. Steps before i_min and the final step run
// without reuse; between i_min and i_max the threshold moves linearly from
// theta_start to theta_end, and stays at theta_end afterwards.

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streuse/detector.hpp"
#include "streuse/engine.hpp"
#include "streuse/synth.hpp"

namespace streuse {

struct ThresholdSchedule {
  double theta_start = 0.0;
  double theta_end = 0.0;
  std::size_t i_min = 0;
  std::size_t i_max = 0;
  std::size_t total_steps = 1;

  friend bool operator==(const ThresholdSchedule&, const ThresholdSchedule&) = default;
};

void validate(const ThresholdSchedule& schedule);

// Returned for untouched steps; any negative threshold disables detection.
inline constexpr double kNoReuse = -std::numeric_limits<double>::infinity();

double threshold_at(const ThresholdSchedule& schedule, std::size_t step);
bool is_untouched(const ThresholdSchedule& schedule, std::size_t step);

struct SchedulePreset {
  std::string_view name;
  std::string_view model;
  ThresholdSchedule schedule;
};

// Per-model settings: hunyuan, wan21, cogvideox, opensoraplan (50 steps each).
std::span<const SchedulePreset> schedule_presets();
// Throws std::invalid_argument listing the valid names.
const SchedulePreset& find_preset(std::string_view name);
std::string preset_names();

// tau = alpha * mean |delta_i|, one value repeated for every channel.
std::vector<double> channelwise_threshold(double alpha, std::span<const double> channel_deltas);

struct StepRecord {
  std::size_t step = 0;
  double theta = kNoReuse;
  RunStats stats;
  double mse = 0.0;
  double psnr = 0.0;
};

// Runs detection and reuse attention at every step with threshold_at(step)
// on all three axes, scoring each step against dense attention.
std::vector<StepRecord> simulate_trajectory(std::span<const AttentionInputs> steps,
                                            const ThresholdSchedule& schedule,
                                            const DetectorConfig& detector,
                                            const EngineOptions& options = {});

}  // namespace streuse
