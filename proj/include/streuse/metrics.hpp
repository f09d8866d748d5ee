// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "streuse/engine.hpp"
#include "streuse/matrix.hpp"

namespace streuse {

double mse(const Matrix& a, const Matrix& b);

// 10 log10(peak^2 / mse); +infinity when the inputs are identical.
double psnr(const Matrix& a, const Matrix& b, double peak);
double psnr_from_mse(double mse_value, double peak);

// Largest |entry|, the default PSNR peak for attention outputs.
double peak_abs(const Matrix& a);

// Amdahl estimate: only the attention fraction f of end-to-end time shrinks,
// in proportion to the QK^T flops actually spent.
double theoretical_speedup(const RunStats& stats, double attention_fraction);

inline constexpr double kDefaultAttentionFraction = 0.78;

}  // namespace streuse
