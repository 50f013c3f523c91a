// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

// Template bodies for attention.hpp; not meant to be included directly.

#pragma once

#include <cmath>
#include <vector>

#include "stattn/fp8.hpp"

namespace stattn {

namespace detail {

/// Fixed-order four-lane dot product with double accumulation. The lanes are
/// independent chains so the loop vectorizes without a reassociation license,
/// and the order never depends on anything but n.
template <typename T>
inline double dot_product(const T* a, const T* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        s1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
        s2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
        s3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
    }
    double s = (s0 + s1) + (s2 + s3);
    for (; i < n; ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

template <typename T>
void check_attention_shapes(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v) {
    if (q.cols != k.cols) {
        throw std::invalid_argument("attention: q and k head dims differ");
    }
    if (k.rows != v.rows) {
        throw std::invalid_argument("attention: k and v row counts differ");
    }
    if (q.rows == 0 || k.rows == 0 || q.cols == 0 || v.cols == 0) {
        throw std::invalid_argument("attention: empty operand");
    }
}

/// Streams the keys of one contiguous score batch into a partial row:
/// one local max, one rescale, then accumulate. scores[] holds the batch.
inline void stream_scores_into_row(double* acc, double& row_max, double& row_sum,
                                   const double* scores, std::size_t count,
                                   const double* const* v_rows, std::size_t dv) {
    double local = scores[0];
    for (std::size_t c = 1; c < count; ++c) {
        local = std::max(local, scores[c]);
    }
    if (local > row_max) {
        if (row_sum != 0.0) {
            const double alpha = std::exp(row_max - local);
            row_sum *= alpha;
            for (std::size_t j = 0; j < dv; ++j) {
                acc[j] *= alpha;
            }
        }
        row_max = local;
    }
    for (std::size_t c = 0; c < count; ++c) {
        const double w = std::exp(scores[c] - row_max);
        row_sum += w;
        const double* vrow = v_rows[c];
        for (std::size_t j = 0; j < dv; ++j) {
            acc[j] += w * vrow[j];
        }
    }
}

/// Same, but value rows come straight from a Matrix<T>.
template <typename T>
inline void stream_tile_into_row(double* acc, double& row_max, double& row_sum,
                                 const double* scores, std::size_t count, const Matrix<T>& v,
                                 std::size_t first_key) {
    double local = scores[0];
    for (std::size_t c = 1; c < count; ++c) {
        local = std::max(local, scores[c]);
    }
    if (local > row_max) {
        if (row_sum != 0.0) {
            const double alpha = std::exp(row_max - local);
            row_sum *= alpha;
            for (std::size_t j = 0; j < v.cols; ++j) {
                acc[j] *= alpha;
            }
        }
        row_max = local;
    }
    for (std::size_t c = 0; c < count; ++c) {
        const double w = std::exp(scores[c] - row_max);
        row_sum += w;
        const T* vrow = v.row(first_key + c);
        for (std::size_t j = 0; j < v.cols; ++j) {
            acc[j] += w * static_cast<double>(vrow[j]);
        }
    }
}

/// Accumulates the active blocks of `mask` into `part`, ascending key-block
/// order within each query block row. Returns the MAC-equivalent flops.
/// Empty block rows are legal here; finalize_partial rejects rows that stay
/// empty overall.
template <typename T>
std::uint64_t block_sparse_accumulate(SoftmaxPartial& part, const Matrix<T>& q,
                                      const Matrix<T>& k, const Matrix<T>& v,
                                      const BlockMask& mask, double scale) {
    const std::size_t dq = q.cols;
    const std::size_t dv = v.cols;
    const std::size_t b = mask.block_size();
    std::uint64_t pairs = 0;
    std::vector<double> scores(b);
    for (std::size_t bq = 0; bq < mask.grid_dim(); ++bq) {
        const std::size_t r0 = bq * b;
        const std::size_t r1 = r0 + mask.tile_rows(bq);
        for (std::size_t bk = 0; bk < mask.grid_dim(); ++bk) {
            if (!mask.active(bq, bk)) {
                continue;
            }
            const std::size_t c0 = bk * b;
            const std::size_t nc = mask.tile_cols(bk);
            pairs += static_cast<std::uint64_t>(r1 - r0) * nc;
            for (std::size_t r = r0; r < r1; ++r) {
                const T* qrow = q.row(r);
                for (std::size_t c = 0; c < nc; ++c) {
                    scores[c] = scale * dot_product(qrow, k.row(c0 + c), dq);
                }
                stream_tile_into_row(part.acc.data() + r * dv, part.row_max[r],
                                     part.row_sum[r], scores.data(), nc, v, c0);
            }
        }
    }
    return pairs * 2 * (dq + dv);
}

/// Dense pass of every query row against the token-major sink columns,
/// skipping columns already covered by an active band block so the key sets
/// of the two passes stay disjoint.
template <typename T>
std::uint64_t sink_pass_accumulate(SoftmaxPartial& part, const Matrix<T>& q_fm,
                                   const Matrix<T>& k_tok, const Matrix<T>& v_tok,
                                   const Interval& sink, const BlockMask& band,
                                   const Permutation& perm, double scale) {
    if (sink.empty()) {
        return 0;
    }
    const std::size_t dq = q_fm.cols;
    const std::size_t dv = v_tok.cols;
    const std::size_t b = band.block_size();
    std::vector<std::size_t> sink_block_cols(sink.length());
    for (std::size_t c = sink.begin; c < sink.end; ++c) {
        sink_block_cols[c - sink.begin] = perm.forward[c] / b;
    }
    std::uint64_t pairs = 0;
    std::vector<double> score(1);
    const double* vrow[1];
    std::vector<double> vbuf(dv);
    for (std::size_t r = 0; r < q_fm.rows; ++r) {
        const std::size_t bq = r / b;
        const T* qrow = q_fm.row(r);
        double* acc = part.acc.data() + r * dv;
        for (std::size_t c = sink.begin; c < sink.end; ++c) {
            if (band.active(bq, sink_block_cols[c - sink.begin])) {
                continue;
            }
            ++pairs;
            score[0] = scale * dot_product(qrow, k_tok.row(c), dq);
            const T* src = v_tok.row(c);
            for (std::size_t j = 0; j < dv; ++j) {
                vbuf[j] = static_cast<double>(src[j]);
            }
            vrow[0] = vbuf.data();
            stream_scores_into_row(acc, part.row_max[r], part.row_sum[r], score.data(), 1,
                                   vrow, dv);
        }
    }
    return pairs * 2 * (dq + dv);
}

}  // namespace detail

template <typename T>
Matrix<T> finalize_partial(const SoftmaxPartial& p) {
    Matrix<T> out(p.rows, p.cols);
    for (std::size_t i = 0; i < p.rows; ++i) {
        if (p.row_empty(i)) {
            throw invariant_error("finalize_partial: query row " + std::to_string(i) +
                                  " received no keys");
        }
        const double inv = 1.0 / p.row_sum[i];
        const double* acc = p.acc.data() + i * p.cols;
        T* dst = out.row(i);
        for (std::size_t j = 0; j < p.cols; ++j) {
            dst[j] = static_cast<T>(acc[j] * inv);
        }
    }
    check_finite(out, "finalize_partial");
    return out;
}

template <typename T>
AttentionResult<T> attention_dense(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                                   std::optional<double> scale_opt) {
    detail::check_attention_shapes(q, k, v);
    const double scale = resolve_scale(scale_opt, q.cols);
    const std::size_t dv = v.cols;
    AttentionResult<T> res;
    res.out = Matrix<T>(q.rows, dv);
    std::vector<double> acc(dv);
    for (std::size_t i = 0; i < q.rows; ++i) {
        const T* qrow = q.row(i);
        double m = -std::numeric_limits<double>::infinity();
        double l = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t kk = 0; kk < k.rows; ++kk) {
            const double s = scale * detail::dot_product(qrow, k.row(kk), q.cols);
            if (s > m) {
                if (l != 0.0) {
                    const double alpha = std::exp(m - s);
                    l *= alpha;
                    for (std::size_t j = 0; j < dv; ++j) {
                        acc[j] *= alpha;
                    }
                }
                m = s;
            }
            const double w = std::exp(s - m);
            l += w;
            const T* vrow = v.row(kk);
            for (std::size_t j = 0; j < dv; ++j) {
                acc[j] += w * static_cast<double>(vrow[j]);
            }
        }
        T* dst = res.out.row(i);
        for (std::size_t j = 0; j < dv; ++j) {
            dst[j] = static_cast<T>(acc[j] / l);
        }
    }
    check_finite(res.out, "attention_dense");
    res.flops = static_cast<std::uint64_t>(q.rows) * k.rows * 2 * (q.cols + dv);
    return res;
}

template <typename T>
AttentionResult<T> attention_masked_reference(const Matrix<T>& q, const Matrix<T>& k,
                                              const Matrix<T>& v, const ElementMask& mask,
                                              std::optional<double> scale_opt) {
    detail::check_attention_shapes(q, k, v);
    if (mask.rows() != q.rows || mask.cols() != k.rows) {
        throw std::invalid_argument("attention_masked_reference: mask shape mismatch");
    }
    const double scale = resolve_scale(scale_opt, q.cols);
    const std::size_t dv = v.cols;
    AttentionResult<T> res;
    res.out = Matrix<T>(q.rows, dv);
    std::vector<double> scores;
    std::vector<double> acc(dv);
    std::uint64_t pairs = 0;
    for (std::size_t i = 0; i < q.rows; ++i) {
        const RowSpans& spans = mask.row(i);
        if (spans.empty()) {
            throw invariant_error("attention_masked_reference: query row " + std::to_string(i) +
                                  " is fully masked");
        }
        const T* qrow = q.row(i);
        // Two passes: exact max over the active keys, then exp/sum/accumulate.
        scores.clear();
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& iv : spans) {
            for (std::size_t c = iv.begin; c < iv.end; ++c) {
                const double s = scale * detail::dot_product(qrow, k.row(c), q.cols);
                scores.push_back(s);
                m = std::max(m, s);
            }
        }
        pairs += scores.size();
        double l = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t idx = 0;
        for (const auto& iv : spans) {
            for (std::size_t c = iv.begin; c < iv.end; ++c) {
                const double w = std::exp(scores[idx++] - m);
                l += w;
                const T* vrow = v.row(c);
                for (std::size_t j = 0; j < dv; ++j) {
                    acc[j] += w * static_cast<double>(vrow[j]);
                }
            }
        }
        T* dst = res.out.row(i);
        for (std::size_t j = 0; j < dv; ++j) {
            dst[j] = static_cast<T>(acc[j] / l);
        }
    }
    check_finite(res.out, "attention_masked_reference");
    res.flops = pairs * 2 * (q.cols + dv);
    return res;
}

template <typename T>
AttentionResult<T> attention_block_sparse(const Matrix<T>& q, const Matrix<T>& k,
                                          const Matrix<T>& v, const BlockMask& mask,
                                          std::optional<double> scale_opt) {
    detail::check_attention_shapes(q, k, v);
    if (q.rows != mask.seq_len() || k.rows != mask.seq_len()) {
        throw std::invalid_argument("attention_block_sparse: mask seq_len mismatch");
    }
    if (const auto empty_row = mask.first_empty_block_row()) {
        throw invariant_error("attention_block_sparse: block row " +
                              std::to_string(*empty_row) + " has no active blocks");
    }
    const double scale = resolve_scale(scale_opt, q.cols);
    SoftmaxPartial part = SoftmaxPartial::zero(q.rows, v.cols);
    AttentionResult<T> res;
    res.flops = detail::block_sparse_accumulate(part, q, k, v, mask, scale);
    res.out = finalize_partial<T>(part);
    return res;
}

template <typename T>
AttentionResult<T> attention_block_sparse_fp8(const Matrix<T>& q, const Matrix<T>& k,
                                              const Matrix<T>& v, const BlockMask& mask,
                                              std::optional<double> scale = std::nullopt,
                                              Fp8Mode mode = Fp8Mode::quantize_qk) {
    if (mode != Fp8Mode::quantize_qk) {
        return attention_block_sparse(q, k, v, mask, scale);
    }
    const Matrix<T> qq = quantize_dequantize_rows_e4m3(q, mask.block_size());
    const Matrix<T> kq = quantize_dequantize_rows_e4m3(k, mask.block_size());
    return attention_block_sparse(qq, kq, v, mask, scale);
}

template <typename T>
AttentionResult<T> attention_temporal_frame_major(const Matrix<T>& q, const Matrix<T>& k,
                                                  const Matrix<T>& v, const MaskSpec& spec,
                                                  const Permutation& perm, const BlockMask& band,
                                                  std::optional<double> scale_opt, Fp8Mode fp8) {
    detail::check_attention_shapes(q, k, v);
    const std::size_t s = spec.layout.seq_len();
    if (q.rows != s || k.rows != s || perm.size() != s || band.seq_len() != s) {
        throw std::invalid_argument("attention_temporal_frame_major: inconsistent shapes");
    }
    const double scale = resolve_scale(scale_opt, q.cols);
    const Matrix<T> qf = apply_row_permutation(q, perm);
    const Matrix<T> kf = apply_row_permutation(k, perm);
    const Matrix<T> vf = apply_row_permutation(v, perm);

    SoftmaxPartial part = SoftmaxPartial::zero(s, v.cols);
    std::uint64_t flops = 0;
    if (fp8 == Fp8Mode::quantize_qk) {
        const Matrix<T> qfq = quantize_dequantize_rows_e4m3(qf, band.block_size());
        const Matrix<T> kfq = quantize_dequantize_rows_e4m3(kf, band.block_size());
        flops += detail::block_sparse_accumulate(part, qfq, kfq, vf, band, scale);
    } else {
        flops += detail::block_sparse_accumulate(part, qf, kf, vf, band, scale);
    }
    flops += detail::sink_pass_accumulate(part, qf, k, v, spec.sink_columns(), band, perm, scale);

    AttentionResult<T> res;
    res.flops = flops;
    res.out = apply_row_permutation(finalize_partial<T>(part), perm.inverted());
    return res;
}

template <typename T>
AttentionResult<T> attention_temporal_frame_major(const Matrix<T>& q, const Matrix<T>& k,
                                                  const Matrix<T>& v, const MaskSpec& spec,
                                                  const Permutation& perm, std::size_t block_size,
                                                  std::optional<double> scale, Fp8Mode fp8) {
    const BlockMask band = temporal_band_block_mask(spec, block_size);
    return attention_temporal_frame_major(q, k, v, spec, perm, band, scale, fp8);
}

template <typename T>
Matrix<T> qk_norm(const Matrix<T>& x, double epsilon) {
    if (x.cols == 0) {
        throw std::invalid_argument("qk_norm: matrix has no columns");
    }
    Matrix<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const T* src = x.row(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = static_cast<double>(src[j]);
            sq += d * d;
        }
        const double inv = 1.0 / std::sqrt(sq / static_cast<double>(x.cols) + epsilon);
        T* dst = out.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) {
            dst[j] = static_cast<T>(static_cast<double>(src[j]) * inv);
        }
    }
    return out;
}

template <typename T>
Matrix<T> rope(const Matrix<T>& x, std::span<const double> positions, double theta_base) {
    if (x.cols % 2 != 0) {
        throw std::invalid_argument("rope: head dim must be even");
    }
    if (positions.size() != x.rows) {
        throw std::invalid_argument("rope: one position per row required");
    }
    const std::size_t pairs = x.cols / 2;
    std::vector<double> inv_freq(pairs);
    for (std::size_t t = 0; t < pairs; ++t) {
        inv_freq[t] = std::pow(theta_base, -2.0 * static_cast<double>(t) /
                                               static_cast<double>(x.cols));
    }
    Matrix<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const T* src = x.row(i);
        T* dst = out.row(i);
        for (std::size_t t = 0; t < pairs; ++t) {
            const double angle = positions[i] * inv_freq[t];
            const double c = std::cos(angle);
            const double sn = std::sin(angle);
            const double x0 = static_cast<double>(src[2 * t]);
            const double x1 = static_cast<double>(src[2 * t + 1]);
            dst[2 * t] = static_cast<T>(c * x0 - sn * x1);
            dst[2 * t + 1] = static_cast<T>(sn * x0 + c * x1);
        }
    }
    return out;
}

}  // namespace stattn
