// SPDX-License-Identifier: Apache-2.0

#include "streuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace streuse {

double mse(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mse: shape mismatch");
  if (a.size() == 0) return 0.0;
  const auto x = a.data();
  const auto y = b.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return acc / static_cast<double>(x.size());
}

double psnr_from_mse(double mse_value, double peak) {
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  if (mse_value < 0.0) throw std::invalid_argument("psnr: negative mse");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

double psnr(const Matrix& a, const Matrix& b, double peak) {
  return psnr_from_mse(mse(a, b), peak);
}

double peak_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double theoretical_speedup(const RunStats& stats, double attention_fraction) {
  if (!(attention_fraction > 0.0 && attention_fraction <= 1.0))
    throw std::invalid_argument("theoretical_speedup: attention fraction must lie in (0, 1]");
  if (stats.qk_flops_dense == 0)
    throw std::invalid_argument("theoretical_speedup: dense flop count is zero");
  const double kept = static_cast<double>(stats.qk_flops_actual) /
                      static_cast<double>(stats.qk_flops_dense);
  return 1.0 / ((1.0 - attention_fraction) + attention_fraction * kept);
}

}  // namespace streuse
