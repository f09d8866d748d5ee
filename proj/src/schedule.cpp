// SPDX-License-Identifier: Apache-2.0

#include "streuse/schedule.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "streuse/attention.hpp"
#include "streuse/metrics.hpp"

namespace streuse {

namespace {

// Table columns are (start, end, i_min, i_max).
constexpr std::array<SchedulePreset, 4> kPresets = {{
    {"hunyuan", "HunyuanVideo", {0.2, 0.5, 10, 20, 50}},
    {"wan21", "Wan2.1", {0.4, 0.6, 10, 48, 50}},
    {"cogvideox", "CogVideoX", {0.2, 0.5, 10, 28, 50}},
    {"opensoraplan", "Open-Sora-Plan", {0.4, 0.8, 20, 48, 50}},
}};

}  // namespace

void validate(const ThresholdSchedule& s) {
  if (s.total_steps == 0) throw std::invalid_argument("schedule: total_steps must be positive");
  if (s.i_min > s.i_max || s.i_max >= s.total_steps)
    throw std::invalid_argument("schedule: need i_min <= i_max < total_steps");
  if (!(s.theta_start >= 0.0) || !(s.theta_end >= 0.0))
    throw std::invalid_argument("schedule: thresholds must be non-negative");
}

bool is_untouched(const ThresholdSchedule& s, std::size_t step) {
  return step < s.i_min || step + 1 == s.total_steps;
}

double threshold_at(const ThresholdSchedule& s, std::size_t step) {
  validate(s);
  if (step >= s.total_steps)
    throw std::invalid_argument("threshold_at: step " + std::to_string(step) + " out of range [0, " +
                                std::to_string(s.total_steps) + ")");
  if (is_untouched(s, step)) return kNoReuse;
  if (step >= s.i_max) return s.theta_end;
  const double span = static_cast<double>(s.i_max - s.i_min);
  return s.theta_start + static_cast<double>(step - s.i_min) * (s.theta_end - s.theta_start) / span;
}

std::span<const SchedulePreset> schedule_presets() { return kPresets; }

std::string preset_names() {
  std::string out;
  for (const auto& p : kPresets) {
    if (!out.empty()) out += ", ";
    out += p.name;
  }
  return out;
}

const SchedulePreset& find_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return p;
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "'; valid presets: " + preset_names());
}

std::vector<double> channelwise_threshold(double alpha, std::span<const double> channel_deltas) {
  if (channel_deltas.empty())
    throw std::invalid_argument("channelwise_threshold: empty delta list");
  if (!(alpha >= 0.0)) throw std::invalid_argument("channelwise_threshold: alpha must be >= 0");
  double sum = 0.0;
  for (double v : channel_deltas) {
    if (!std::isfinite(v)) throw std::invalid_argument("channelwise_threshold: non-finite delta");
    sum += std::abs(v);
  }
  const double tau = alpha * (sum / static_cast<double>(channel_deltas.size()));
  return std::vector<double>(channel_deltas.size(), tau);
}

std::vector<StepRecord> simulate_trajectory(std::span<const AttentionInputs> steps,
                                            const ThresholdSchedule& schedule,
                                            const DetectorConfig& detector,
                                            const EngineOptions& options) {
  validate(schedule);
  if (steps.size() != schedule.total_steps)
    throw std::invalid_argument("simulate_trajectory: " + std::to_string(steps.size()) +
                                " step inputs for a " + std::to_string(schedule.total_steps) +
                                "-step schedule");
  std::vector<StepRecord> records;
  records.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const AttentionInputs& in = steps[i];
    StepRecord rec;
    rec.step = i;
    rec.theta = threshold_at(schedule, i);

    DetectorConfig cfg = detector;
    cfg.thresholds = AxisThresholds::uniform(rec.theta);
    const ReuseMask mq = detect(in.q, cfg);
    const ReuseMask mk = detect(in.k, cfg);

    const auto dense = dense_attention(in.q.values(), in.k.values(), in.v);
    const auto approx = reuse_attention(in.q.values(), in.k.values(), in.v, mq, mk, options);
    rec.stats = approx.stats;
    rec.mse = mse(approx.output, dense.output);
    const double peak = peak_abs(dense.output);
    rec.psnr = peak > 0.0 ? psnr_from_mse(rec.mse, peak) : 0.0;
    records.push_back(rec);
  }
  return records;
}

}  // namespace streuse
