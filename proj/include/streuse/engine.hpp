// SPDX-License-Identifier: Apache-2.0
//
// Sparse partial-score attention. For every channel, entries whose query and
// key tokens are both computed are evaluated; entries touching a reusable
// token are copied from the representative entry. The channel partials are
// summed into logits and the usual softmax(.) V follows. The two masking
// baselines share the entry bookkeeping.

#pragma once

#include <cstddef>
#include <cstdint>

#include "streuse/attention.hpp"
#include "streuse/detector.hpp"
#include "streuse/matrix.hpp"

namespace streuse {

struct RunStats {
  std::uint64_t computed_entries = 0;
  std::uint64_t copied_entries = 0;
  // Entries dropped by a masking baseline; always 0 for reuse.
  std::uint64_t skipped_entries = 0;
  std::uint64_t qk_flops_dense = 0;
  std::uint64_t qk_flops_actual = 0;
  double reuse_ratio_q = 0.0;
  double reuse_ratio_k = 0.0;
  // (copied + skipped) / (N^2 d): fraction of partial scores not computed.
  double entry_reuse_ratio = 0.0;

  std::uint64_t total_entries() const {
    return computed_entries + copied_entries + skipped_entries;
  }
};

// Two flops (multiply + add) per computed partial score; copies are free.
inline constexpr std::uint64_t kFlopsPerEntry = 2;

struct ApproxAttention {
  Matrix output;
  Matrix attn_map;
  RunStats stats;
};

struct EngineOptions {
  // Worker threads for the per-channel loop; results do not depend on it.
  std::size_t threads = 1;
};

ApproxAttention reuse_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                const ReuseMask& mask_q, const ReuseMask& mask_k,
                                const EngineOptions& options = {});

// X'[t, c] = X[representative(t, c), c]. Dense attention on substituted Q and
// K is what reuse_attention computes.
Matrix substitute(const Matrix& x, const ReuseMask& mask);

// Same entry selection as reuse_attention, but non-computed entries
// contribute zero to the logits.
ApproxAttention masking_baseline_skip(const Matrix& q, const Matrix& k, const Matrix& v,
                                      const ReuseMask& mask_q, const ReuseMask& mask_k,
                                      const EngineOptions& options = {});

// Zeroes the save_ratio fraction of Q and K entries with the smallest
// magnitude (one ranking over both matrices, ties by position, Q first),
// then runs dense attention.
ApproxAttention masking_baseline_magnitude(const Matrix& q, const Matrix& k, const Matrix& v,
                                           double save_ratio);
// Same, with an exact count of zeroed entries out of 2 N d.
ApproxAttention masking_baseline_magnitude_count(const Matrix& q, const Matrix& k,
                                                 const Matrix& v, std::size_t zeroed);

// Fraction of partial-score entries a pair of masks avoids computing.
double entry_saving_ratio(const ReuseMask& mask_q, const ReuseMask& mask_k);

// Number of zeroed entries for masking_baseline_magnitude_count whose
// entry-saving ratio is closest to `target`.
std::size_t magnitude_count_for_saving(const Matrix& q, const Matrix& k, double target);

}  // namespace streuse
