// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>

#include "stattn/masks.hpp"
#include "stattn/matrix.hpp"

namespace stattn {

template <typename T>
struct AttentionResult {
    Matrix<T> out;
    /// Multiply-accumulate-equivalent floating ops in the score and value
    /// products (2 ops per MAC); a dense S x S call at head dim D counts
    /// exactly 4 * S^2 * D.
    std::uint64_t flops = 0;
};

/// Unnormalized streaming-softmax state over a set of query rows. Partials
/// over disjoint key subsets merge associatively, which is what makes the
/// two-pass sink merge exact. Accumulators are double regardless of the
/// matrix precision.
struct SoftmaxPartial {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> acc;      // rows x cols weighted values, unnormalized
    std::vector<double> row_max;  // running logit max; -inf while untouched
    std::vector<double> row_sum;  // running exp sum; 0 while untouched

    static SoftmaxPartial zero(std::size_t rows, std::size_t cols);
    bool row_empty(std::size_t i) const { return row_sum[i] == 0.0; }
};

/// Log-sum-exp merge of two partials over disjoint key subsets. Merging with
/// an all-empty partial returns the other side unchanged.
SoftmaxPartial merge_partials(const SoftmaxPartial& a, const SoftmaxPartial& b);
void merge_partials_into(SoftmaxPartial& dst, const SoftmaxPartial& src);

/// Divides by the row sums; rejects rows that never saw a key.
template <typename T>
Matrix<T> finalize_partial(const SoftmaxPartial& p);

double resolve_scale(std::optional<double> scale, std::size_t head_dim);

/// Exact attention, softmax(scale * q k^T) v, computed with a per-row online
/// softmax over keys in ascending order. q may have fewer rows than k
/// (sampled-row profiling uses that).
template <typename T>
AttentionResult<T> attention_dense(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                   std::optional<double> scale = std::nullopt);

/// Masked softmax with inactive logits excluded outright (true -inf
/// semantics, not a large negative constant); the element-exact oracle for
/// every sparse path. mask rows index q rows, mask columns index keys.
template <typename T>
AttentionResult<T> attention_masked_reference(const Matrix<T>& q, const Matrix<T>& k,
                                              const Matrix<T>& v, const ElementMask& mask,
                                              std::optional<double> scale = std::nullopt);

/// Tiled streaming softmax visiting only active blocks, ascending key-block
/// order per query block. Matches attention_masked_reference over the
/// block-expanded mask.
template <typename T>
AttentionResult<T> attention_block_sparse(const Matrix<T>& q, const Matrix<T>& k,
                                          const Matrix<T>& v, const BlockMask& mask,
                                          std::optional<double> scale = std::nullopt);

enum class Fp8Mode {
    off,           // no quantization anywhere
    quantize_qk,   // q and k row tiles pass through e4m3 before the kernel
    pass_through   // fp8 entry point, quantization skipped; bit-identical to off
};

/// Temporal attention in frame-major space: permute rows, run a block-sparse
/// pass over the banded core mask, a dense pass over the token-major sink
/// prefix (skipping columns an active band block already covers, so the two
/// key subsets stay disjoint), merge, finalize, un-permute. When fp8 is
/// enabled it applies to the banded pass only; the sink pass stays full
/// precision.
template <typename T>
AttentionResult<T> attention_temporal_frame_major(const Matrix<T>& q, const Matrix<T>& k,
                                                  const Matrix<T>& v, const MaskSpec& spec,
                                                  const Permutation& perm, const BlockMask& band,
                                                  std::optional<double> scale = std::nullopt,
                                                  Fp8Mode fp8 = Fp8Mode::off);

/// Convenience overload that builds the band block mask itself.
template <typename T>
AttentionResult<T> attention_temporal_frame_major(const Matrix<T>& q, const Matrix<T>& k,
                                                  const Matrix<T>& v, const MaskSpec& spec,
                                                  const Permutation& perm, std::size_t block_size,
                                                  std::optional<double> scale = std::nullopt,
                                                  Fp8Mode fp8 = Fp8Mode::off);

/// Token-major element mask equivalent to what the frame-major path computes:
/// full sink columns plus the conjugate image of the block-expanded band.
ElementMask temporal_frame_major_reference_mask(const MaskSpec& spec, const Permutation& perm,
                                                std::size_t block_size);

/// Pair count the frame-major path visits (band tiles plus uncovered sink
/// columns); its flops are 4 * pairs * head_dim.
std::uint64_t temporal_frame_major_pair_count(const MaskSpec& spec, const Permutation& perm,
                                              const BlockMask& band);

/// Per-row RMS normalization: row / sqrt(mean of squares + epsilon).
template <typename T>
Matrix<T> qk_norm(const Matrix<T>& x, double epsilon = 1e-6);

/// 1D rotary embedding: consecutive coordinate pairs (2i, 2i+1) of row r are
/// rotated by positions[r] * theta_base^(-2i/D). Pair norms are preserved.
template <typename T>
Matrix<T> rope(const Matrix<T>& x, std::span<const double> positions,
               double theta_base = 10000.0);

/// Closed-form per-head flops over the video tokens only (text and first
/// frame excluded): dense 4(LN)^2 D, spatial 4 L^2 D c_s N, temporal
/// 4 N^2 D c_t L.
std::uint64_t flops_closed_form(const MaskSpec& spec, std::size_t head_dim, HeadClass kind);

}  // namespace stattn

#include "stattn/attention_impl.hpp"
