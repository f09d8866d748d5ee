// SPDX-License-Identifier: Apache-2.0

#include "streuse/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "streuse/grid_io.hpp"

namespace streuse {

using json = nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Method parse_method(std::string_view name) {
  if (name == "dense") return Method::dense;
  if (name == "reuse") return Method::reuse;
  if (name == "mask-mag") return Method::mask_mag;
  if (name == "mask-skip") return Method::mask_skip;
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected dense, reuse, mask-mag or mask-skip)");
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::dense: return "dense";
    case Method::reuse: return "reuse";
    case Method::mask_mag: return "mask-mag";
    case Method::mask_skip: return "mask-skip";
  }
  return "?";
}

TokenGrid generate_grid(const GenOptions& o) {
  validate(o.shape);
  const ChannelPartition part =
      o.partition.value_or(ChannelPartition::default_for(o.shape.channels));
  validate(part, o.shape.channels);

  auto finish = [&](TokenGrid g) {
    g = TokenGrid(o.shape, part, std::move(g.values()));
    return o.rope ? rope_encode(g) : g;
  };
  if (o.kind == "random") return finish(gen_random(o.shape, part, o.seed));
  if (o.kind == "correlated")
    return finish(gen_correlated(o.shape, part, o.rho.rho_t, o.rho.rho_x, o.rho.rho_y, o.seed));
  const Regime regime = parse_regime(o.kind);
  if (o.role != "q" && o.role != "k")
    throw std::invalid_argument("role must be q or k, got '" + o.role + "'");
  auto pair = gen_paired_qk(o.shape, regime, o.seed, o.noise);
  return finish(o.role == "q" ? std::move(pair.q) : std::move(pair.k));
}

void cmd_gen(const GenOptions& o, const std::filesystem::path& out) {
  const TokenGrid grid = generate_grid(o);
  write_grid_file(out, grid);

  const auto& p = grid.partition();
  json meta = {
      {"format", "RIPL"},
      {"version", kGridVersion},
      {"shape", {{"T", o.shape.frames}, {"H", o.shape.height}, {"W", o.shape.width},
                 {"d", o.shape.channels}}},
      {"partition", {{"temporal", p.temporal}, {"x", p.x}, {"y", p.y}}},
      {"generator", "splitmix64-counter"},
      {"kind", o.kind},
      {"seed", o.seed},
      {"rho_t", o.rho.rho_t},
      {"rho_x", o.rho.rho_x},
      {"rho_y", o.rho.rho_y},
      {"role", o.role},
      {"noise", o.noise},
      {"rope", o.rope},
  };
  std::filesystem::path sidecar = out;
  sidecar += ".json";
  std::ofstream side(sidecar);
  if (!side) throw std::runtime_error("cannot open '" + sidecar.string() + "' for writing");
  side << meta.dump(2) << '\n';
}

namespace {

DetectorConfig detector_config(const MethodOptions& o) {
  DetectorConfig cfg;
  cfg.thresholds = AxisThresholds::uniform(o.theta);
  cfg.window = o.window;
  cfg.granularity = o.granularity;
  cfg.mode = o.mode;
  return cfg;
}

}  // namespace

RunRecord run_method(const AttentionInputs& in, Method method, const MethodOptions& o,
                     const AttentionOutput& dense) {
  const Matrix& q = in.q.values();
  const Matrix& k = in.k.values();
  if (in.q.shape() != in.k.shape() || in.v.rows() != q.rows() || in.v.cols() != q.cols())
    throw std::invalid_argument("Q, K and V grids must share a shape");

  RunRecord rec;
  rec.method = method;
  rec.theta = o.theta;
  rec.window = o.window;
  rec.granularity = o.granularity;

  const auto t0 = std::chrono::steady_clock::now();
  Matrix output;
  switch (method) {
    case Method::dense: {
      const ReuseMask empty(q.rows(), q.cols(), o.window);
      auto r = reuse_attention(q, k, in.v, empty, empty, o.engine);
      output = std::move(r.output);
      rec.stats = r.stats;
      break;
    }
    case Method::reuse:
    case Method::mask_skip: {
      const auto cfg = detector_config(o);
      const ReuseMask mq = detect(in.q, cfg);
      const ReuseMask mk = detect(in.k, cfg);
      auto r = method == Method::reuse ? reuse_attention(q, k, in.v, mq, mk, o.engine)
                                       : masking_baseline_skip(q, k, in.v, mq, mk, o.engine);
      output = std::move(r.output);
      rec.stats = r.stats;
      break;
    }
    case Method::mask_mag: {
      std::size_t zeroed = 0;
      if (o.save_ratio) {
        if (!(*o.save_ratio >= 0.0 && *o.save_ratio <= 1.0))
          throw std::invalid_argument("save_ratio must lie in [0, 1]");
        zeroed = static_cast<std::size_t>(
            std::llround(*o.save_ratio * static_cast<double>(q.size() + k.size())));
      } else {
        const auto cfg = detector_config(o);
        const double target = entry_saving_ratio(detect(in.q, cfg), detect(in.k, cfg));
        zeroed = magnitude_count_for_saving(q, k, target);
      }
      auto r = masking_baseline_magnitude_count(q, k, in.v, zeroed);
      output = std::move(r.output);
      rec.stats = r.stats;
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  rec.mse_vs_dense = mse(output, dense.output);
  const double peak = peak_abs(dense.output);
  rec.psnr_vs_dense = peak > 0.0 ? psnr_from_mse(rec.mse_vs_dense, peak) : 0.0;
  rec.theoretical_speedup = theoretical_speedup(rec.stats, o.attention_fraction);
  return rec;
}

RunRecord run_method(const AttentionInputs& in, Method method, const MethodOptions& o) {
  return run_method(in, method, o, dense_attention(in.q.values(), in.k.values(), in.v));
}

std::string format_record(const RunRecord& r) {
  // Non-finite PSNR is not representable in JSON numbers; emit a string.
  json psnr = std::isfinite(r.psnr_vs_dense) ? json(r.psnr_vs_dense)
                                             : json(format_double(r.psnr_vs_dense));
  json j = {
      {"method", method_name(r.method)},
      {"theta", r.theta},
      {"window", r.window},
      {"granularity", granularity_name(r.granularity)},
      {"reuse_ratio_q", r.stats.reuse_ratio_q},
      {"reuse_ratio_k", r.stats.reuse_ratio_k},
      {"entry_reuse_ratio", r.stats.entry_reuse_ratio},
      {"mse_vs_dense", r.mse_vs_dense},
      {"psnr_vs_dense", psnr},
      {"qk_flops_dense", r.stats.qk_flops_dense},
      {"qk_flops_actual", r.stats.qk_flops_actual},
      {"theoretical_speedup", r.theoretical_speedup},
      {"wall_ms", r.wall_ms},
  };
  return j.dump();
}

AttentionInputs load_inputs(const std::filesystem::path& q, const std::filesystem::path& k,
                            const std::filesystem::path& v) {
  TokenGrid gq = read_grid_file(q);
  TokenGrid gk = read_grid_file(k);
  TokenGrid gv = read_grid_file(v);
  if (gq.shape() != gk.shape() || gq.shape() != gv.shape())
    throw std::invalid_argument("Q, K and V grids must share a shape");
  return {std::move(gq), std::move(gk), std::move(gv.values())};
}

void cmd_sweep(const AttentionInputs& in, const SweepOptions& o, std::ostream& csv) {
  if (o.thetas.empty()) throw std::invalid_argument("sweep: theta list is empty");
  if (o.methods.empty()) throw std::invalid_argument("sweep: method list is empty");
  std::vector<double> thetas = o.thetas;
  std::sort(thetas.begin(), thetas.end());
  std::vector<Method> methods = o.methods;
  std::sort(methods.begin(), methods.end(),
            [](Method a, Method b) { return method_name(a) < method_name(b); });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  const auto dense = dense_attention(in.q.values(), in.k.values(), in.v);
  csv << "theta,method,entry_reuse_ratio,mse,psnr,qk_flops_actual\n";
  for (double theta : thetas) {
    MethodOptions mo = o.base;
    mo.theta = theta;
    for (Method m : methods) {
      const RunRecord r = run_method(in, m, mo, dense);
      csv << format_double(theta) << ',' << method_name(m) << ','
          << format_double(r.stats.entry_reuse_ratio) << ',' << format_double(r.mse_vs_dense)
          << ',' << format_double(r.psnr_vs_dense) << ',' << r.stats.qk_flops_actual << '\n';
    }
  }
}

void cmd_schedule(std::span<const AttentionInputs> steps, const ThresholdSchedule& schedule,
                  const DetectorConfig& detector, const EngineOptions& engine, std::ostream& csv) {
  const auto records = simulate_trajectory(steps, schedule, detector, engine);
  csv << "step,theta,entry_reuse_ratio,mse,psnr\n";
  for (const auto& r : records) {
    csv << r.step << ',' << (is_untouched(schedule, r.step) ? "" : format_double(r.theta)) << ','
        << format_double(r.stats.entry_reuse_ratio) << ',' << format_double(r.mse) << ','
        << format_double(r.psnr) << '\n';
  }
}

std::vector<double> parse_theta_list(std::string_view text) {
  auto parse_one = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw std::invalid_argument("cannot parse number '" + std::string(s) + "'");
    return v;
  };
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos)
      throw std::invalid_argument("theta range must be start:stop:count");
    const double start = parse_one(text.substr(0, a));
    const double stop = parse_one(text.substr(a + 1, b - a - 1));
    const double count_d = parse_one(text.substr(b + 1));
    if (count_d < 1 || count_d != std::floor(count_d))
      throw std::invalid_argument("theta range count must be a positive integer");
    const auto count = static_cast<std::size_t>(count_d);
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(count == 1 ? start
                               : start + (stop - start) * static_cast<double>(i) /
                                             static_cast<double>(count - 1));
    return out;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_one(text.substr(pos, end - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace streuse
