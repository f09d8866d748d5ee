// SPDX-License-Identifier: Apache-2.0
//
// Dense single-head self-attention, used as the correctness oracle for the
// reuse engine, and its per-channel decomposition.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "streuse/matrix.hpp"

namespace streuse {

struct AttentionOutput {
  Matrix output;    // N x d
  Matrix attn_map;  // N x N, post-softmax
};

// Single-channel contribution to a logit. Both the dense path and the reuse
// engine go through this expression so their channel sums agree bit-for-bit.
inline double partial_score(double q, double k, double scale) { return q * k * scale; }

inline double attention_scale(std::size_t channels) {
  return 1.0 / std::sqrt(static_cast<double>(channels));
}

// Logits QK^T / sqrt(d), accumulated channel by channel in ascending order.
Matrix attention_logits(const Matrix& q, const Matrix& k);

// softmax(QK^T / sqrt(d)) V.
AttentionOutput dense_attention(const Matrix& q, const Matrix& k, const Matrix& v);

// Finishes attention from precomputed logits: softmax, then times V.
AttentionOutput attention_from_logits(const Matrix& logits, const Matrix& v);

// A_c[i, j] = Q[i, c] * K[j, c] / sqrt(d).
Matrix partial_scores(const Matrix& q, const Matrix& k, std::size_t channel);

struct ChannelContribution {
  std::size_t channel = 0;
  double score = 0.0;  // Frobenius norm of A_c
};

// Channels by descending ||A_c||_F, ties broken by lower channel index.
std::vector<ChannelContribution> channel_contribution_ranking(const Matrix& q, const Matrix& k);

}  // namespace streuse
