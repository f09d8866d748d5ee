// SPDX-License-Identifier: Apache-2.0

#include "streuse/attention.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace streuse {

namespace {

void require_qk(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols() || q.cols() == 0)
    throw std::invalid_argument("attention: Q and K must have the same nonzero channel count");
}

}  // namespace

Matrix attention_logits(const Matrix& q, const Matrix& k) {
  require_qk(q, k);
  const std::size_t d = q.cols();
  const double s = attention_scale(d);
  Matrix logits(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = q.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      const auto kj = k.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += partial_score(qi[c], kj[c], s);
      logits(i, j) = acc;
    }
  }
  return logits;
}

AttentionOutput attention_from_logits(const Matrix& logits, const Matrix& v) {
  if (logits.cols() != v.rows())
    throw std::invalid_argument("attention: V has " + std::to_string(v.rows()) +
                                " rows, logits have " + std::to_string(logits.cols()) + " columns");
  Matrix attn = row_softmax(logits);
  Matrix out = matmul(attn, v);
  return {std::move(out), std::move(attn)};
}

AttentionOutput dense_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() ||
      q.cols() != v.cols())
    throw std::invalid_argument("dense_attention: Q, K, V must share dimensions");
  return attention_from_logits(attention_logits(q, k), v);
}

Matrix partial_scores(const Matrix& q, const Matrix& k, std::size_t channel) {
  require_qk(q, k);
  if (channel >= q.cols())
    throw std::invalid_argument("partial_scores: channel " + std::to_string(channel) +
                                " out of range for d = " + std::to_string(q.cols()));
  const double s = attention_scale(q.cols());
  Matrix a(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < k.rows(); ++j) a(i, j) = partial_score(q(i, channel), k(j, channel), s);
  return a;
}

std::vector<ChannelContribution> channel_contribution_ranking(const Matrix& q, const Matrix& k) {
  require_qk(q, k);
  const double s = attention_scale(q.cols());
  std::vector<ChannelContribution> ranking;
  ranking.reserve(q.cols());
  for (std::size_t c = 0; c < q.cols(); ++c) {
    // ||A_c||_F = s * ||Q[:, c]|| * ||K[:, c]|| since A_c is an outer product.
    double qq = 0.0, kk = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) qq += q(i, c) * q(i, c);
    for (std::size_t j = 0; j < k.rows(); ++j) kk += k(j, c) * k(j, c);
    ranking.push_back({c, s * std::sqrt(qq) * std::sqrt(kk)});
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return ranking;
}

}  // namespace streuse
