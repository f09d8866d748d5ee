// SPDX-License-Identifier: Apache-2.0

#include "streuse/engine.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace streuse {

namespace {

enum class Fill { copy, skip };

void require_inputs(const Matrix& q, const Matrix& k, const Matrix& v, const ReuseMask& mq,
                    const ReuseMask& mk) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() ||
      q.cols() != v.cols() || q.cols() == 0)
    throw std::invalid_argument("reuse_attention: Q, K, V must share dimensions");
  if (mq.tokens() != q.rows() || mq.channels() != q.cols())
    throw std::invalid_argument("reuse_attention: query mask is " + std::to_string(mq.tokens()) +
                                "x" + std::to_string(mq.channels()) + ", Q is " +
                                std::to_string(q.rows()) + "x" + std::to_string(q.cols()));
  if (mk.tokens() != k.rows() || mk.channels() != k.cols())
    throw std::invalid_argument("reuse_attention: key mask is " + std::to_string(mk.tokens()) +
                                "x" + std::to_string(mk.channels()) + ", K is " +
                                std::to_string(k.rows()) + "x" + std::to_string(k.cols()));
  try {
    mq.check_invariants();
    mk.check_invariants();
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(std::string("reuse_attention: ") + e.what());
  }
}

std::uint64_t computed_in_channel(std::size_t n, std::size_t reused_q, std::size_t reused_k) {
  return static_cast<std::uint64_t>(n - reused_q) * static_cast<std::uint64_t>(n - reused_k);
}

// Per-channel sparse evaluation of the logits. Rows [row_begin, row_end) of
// the channel buffer are owned by one worker; `sync` separates the compute
// phase from the copy/accumulate phase so copied rows only read finished
// representative rows.
class PartialScoreKernel {
 public:
  PartialScoreKernel(const Matrix& q, const Matrix& k, const ReuseMask& mq, const ReuseMask& mk,
                     Fill fill)
      : q_(q), k_(k), mq_(mq), mk_(mk), fill_(fill), n_(q.rows()), d_(q.cols()),
        scale_(attention_scale(q.cols())), partial_(n_, n_), logits_(n_, n_) {}

  template <typename Sync>
  void run_rows(std::size_t row_begin, std::size_t row_end, Sync&& sync) {
    for (std::size_t c = 0; c < d_; ++c) {
      // Key-side sources are shared; every worker derives the same values.
      std::vector<std::size_t> key_src(n_);
      std::vector<std::uint8_t> key_reused(n_);
      for (std::size_t j = 0; j < n_; ++j) {
        key_reused[j] = mk_.reusable(j, c);
        key_src[j] = mk_.representative(j, c);
      }

      for (std::size_t i = row_begin; i < row_end; ++i) {
        if (mq_.reusable(i, c)) continue;
        auto row = partial_.row(i);
        const double qi = q_(i, c);
        for (std::size_t j = 0; j < n_; ++j)
          if (!key_reused[j]) row[j] = partial_score(qi, k_(j, c), scale_);
        for (std::size_t j = 0; j < n_; ++j)
          if (key_reused[j]) row[j] = fill_ == Fill::copy ? row[key_src[j]] : 0.0;
      }
      sync();
      for (std::size_t i = row_begin; i < row_end; ++i) {
        auto out = logits_.row(i);
        if (mq_.reusable(i, c)) {
          if (fill_ == Fill::skip) continue;
          const auto src = partial_.row(mq_.representative(i, c));
          for (std::size_t j = 0; j < n_; ++j) out[j] += src[j];
        } else {
          const auto src = partial_.row(i);
          for (std::size_t j = 0; j < n_; ++j)
            if (fill_ == Fill::copy || !key_reused[j]) out[j] += src[j];
        }
      }
      sync();
    }
  }

  Matrix take_logits() { return std::move(logits_); }

 private:
  const Matrix& q_;
  const Matrix& k_;
  const ReuseMask& mq_;
  const ReuseMask& mk_;
  Fill fill_;
  std::size_t n_;
  std::size_t d_;
  double scale_;
  Matrix partial_;
  Matrix logits_;
};

Matrix sparse_logits(const Matrix& q, const Matrix& k, const ReuseMask& mq, const ReuseMask& mk,
                     Fill fill, std::size_t threads) {
  PartialScoreKernel kernel(q, k, mq, mk, fill);
  const std::size_t n = q.rows();
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    kernel.run_rows(0, n, [] {});
    return kernel.take_logits();
  }
  std::barrier sync(static_cast<std::ptrdiff_t>(threads));
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = n * w / threads;
      const std::size_t end = n * (w + 1) / threads;
      workers.emplace_back(
          [&kernel, &sync, begin, end] { kernel.run_rows(begin, end, [&sync] { sync.arrive_and_wait(); }); });
    }
  }
  return kernel.take_logits();
}

RunStats mask_stats(const ReuseMask& mq, const ReuseMask& mk, bool copied) {
  const std::size_t n = mq.tokens();
  const std::size_t d = mq.channels();
  RunStats s;
  const std::uint64_t per_channel = static_cast<std::uint64_t>(n) * n;
  for (std::size_t c = 0; c < d; ++c) {
    const std::uint64_t computed =
        computed_in_channel(n, mq.reusable_count(c), mk.reusable_count(c));
    s.computed_entries += computed;
    (copied ? s.copied_entries : s.skipped_entries) += per_channel - computed;
  }
  s.qk_flops_dense = kFlopsPerEntry * per_channel * d;
  s.qk_flops_actual = kFlopsPerEntry * s.computed_entries;
  s.reuse_ratio_q = mq.ratio();
  s.reuse_ratio_k = mk.ratio();
  s.entry_reuse_ratio =
      static_cast<double>(s.copied_entries + s.skipped_entries) / static_cast<double>(per_channel * d);
  return s;
}

// Positions of Q then K entries, sorted by ascending magnitude, stable.
std::vector<std::size_t> magnitude_order(const Matrix& q, const Matrix& k) {
  const std::size_t nq = q.size();
  std::vector<std::size_t> order(nq + k.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto value = [&](std::size_t idx) {
    return std::abs(idx < nq ? q.data()[idx] : k.data()[idx - nq]);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
  return order;
}

// Skipped partial-score entries when the first `zeroed` positions of `order`
// are zeroed: per channel, N^2 - (N - zq_c)(N - zk_c).
std::uint64_t magnitude_skipped(const std::vector<std::size_t>& order, std::size_t zeroed,
                                std::size_t n, std::size_t d) {
  std::vector<std::size_t> zq(d, 0), zk(d, 0);
  const std::size_t nq = n * d;
  for (std::size_t r = 0; r < zeroed; ++r) {
    const std::size_t idx = order[r];
    if (idx < nq)
      ++zq[idx % d];
    else
      ++zk[(idx - nq) % d];
  }
  std::uint64_t skipped = 0;
  for (std::size_t c = 0; c < d; ++c)
    skipped += static_cast<std::uint64_t>(n) * n - computed_in_channel(n, zq[c], zk[c]);
  return skipped;
}

}  // namespace

ApproxAttention reuse_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                                const ReuseMask& mask_q, const ReuseMask& mask_k,
                                const EngineOptions& options) {
  require_inputs(q, k, v, mask_q, mask_k);
  Matrix logits = sparse_logits(q, k, mask_q, mask_k, Fill::copy, options.threads);
  auto [out, attn] = attention_from_logits(logits, v);
  return {std::move(out), std::move(attn), mask_stats(mask_q, mask_k, true)};
}

ApproxAttention masking_baseline_skip(const Matrix& q, const Matrix& k, const Matrix& v,
                                      const ReuseMask& mask_q, const ReuseMask& mask_k,
                                      const EngineOptions& options) {
  require_inputs(q, k, v, mask_q, mask_k);
  Matrix logits = sparse_logits(q, k, mask_q, mask_k, Fill::skip, options.threads);
  auto [out, attn] = attention_from_logits(logits, v);
  return {std::move(out), std::move(attn), mask_stats(mask_q, mask_k, false)};
}

Matrix substitute(const Matrix& x, const ReuseMask& mask) {
  if (mask.tokens() != x.rows() || mask.channels() != x.cols())
    throw std::invalid_argument("substitute: mask dimensions do not match the matrix");
  Matrix out(x.rows(), x.cols());
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t c = 0; c < x.cols(); ++c) out(t, c) = x(mask.representative(t, c), c);
  return out;
}

ApproxAttention masking_baseline_magnitude_count(const Matrix& q, const Matrix& k,
                                                 const Matrix& v, std::size_t zeroed) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() ||
      q.cols() != v.cols() || q.cols() == 0)
    throw std::invalid_argument("masking_baseline_magnitude: Q, K, V must share dimensions");
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  const std::size_t total = 2 * n * d;
  zeroed = std::min(zeroed, total);

  const auto order = magnitude_order(q, k);
  Matrix qz = q;
  Matrix kz = k;
  const std::size_t nq = q.size();
  for (std::size_t r = 0; r < zeroed; ++r) {
    const std::size_t idx = order[r];
    if (idx < nq)
      qz.data()[idx] = 0.0;
    else
      kz.data()[idx - nq] = 0.0;
  }
  auto [out, attn] = dense_attention(qz, kz, v);

  RunStats s;
  const std::uint64_t all = static_cast<std::uint64_t>(n) * n * d;
  s.skipped_entries = magnitude_skipped(order, zeroed, n, d);
  s.computed_entries = all - s.skipped_entries;
  s.qk_flops_dense = kFlopsPerEntry * all;
  s.qk_flops_actual = kFlopsPerEntry * s.computed_entries;
  std::size_t zq = 0;
  for (std::size_t r = 0; r < zeroed; ++r) zq += order[r] < nq;
  s.reuse_ratio_q = static_cast<double>(zq) / static_cast<double>(nq);
  s.reuse_ratio_k = static_cast<double>(zeroed - zq) / static_cast<double>(nq);
  s.entry_reuse_ratio = static_cast<double>(s.skipped_entries) / static_cast<double>(all);
  return {std::move(out), std::move(attn), s};
}

ApproxAttention masking_baseline_magnitude(const Matrix& q, const Matrix& k, const Matrix& v,
                                           double save_ratio) {
  if (!(save_ratio >= 0.0 && save_ratio <= 1.0))
    throw std::invalid_argument("masking_baseline_magnitude: save_ratio must lie in [0, 1]");
  const double total = static_cast<double>(q.size() + k.size());
  return masking_baseline_magnitude_count(
      q, k, v, static_cast<std::size_t>(std::llround(save_ratio * total)));
}

double entry_saving_ratio(const ReuseMask& mask_q, const ReuseMask& mask_k) {
  if (mask_q.tokens() != mask_k.tokens() || mask_q.channels() != mask_k.channels())
    throw std::invalid_argument("entry_saving_ratio: mask dimensions differ");
  return mask_stats(mask_q, mask_k, true).entry_reuse_ratio;
}

std::size_t magnitude_count_for_saving(const Matrix& q, const Matrix& k, double target) {
  if (q.rows() != k.rows() || q.cols() != k.cols())
    throw std::invalid_argument("magnitude_count_for_saving: Q and K must share dimensions");
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  const auto order = magnitude_order(q, k);
  const double all = static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(d);
  auto saving = [&](std::size_t z) {
    return static_cast<double>(magnitude_skipped(order, z, n, d)) / all;
  };
  // Saving is non-decreasing in the zeroed count: find the first count that
  // reaches the target, then pick whichever neighbour is closer.
  std::size_t lo = 0, hi = order.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (saving(mid) < target)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (lo > 0 && std::abs(saving(lo - 1) - target) <= std::abs(saving(lo) - target)) return lo - 1;
  return lo;
}

}  // namespace streuse
