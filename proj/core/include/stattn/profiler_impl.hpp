// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

// Template bodies for profiler.hpp; not meant to be included directly.

#pragma once

namespace stattn {

namespace detail {

/// Fused, row-blocked profiling kernel. Scores are computed once per sampled
/// row and shared by the full pass and both masked passes: the masked
/// softmaxes reuse the full-max exponentials, which only differ from their
/// own-max form by a common factor that cancels in the normalization. When a
/// subset maximum sits so far below the full maximum that the shared form
/// could underflow, that (row, mask) pair is redone with its own max — the
/// plain masked-reference arithmetic. Keys and values stream once per block
/// of rows; per-row summation stays in ascending key order throughout.
template <typename T>
struct FusedProfileBlock {
    static constexpr std::size_t block_rows = 16;
    static constexpr double underflow_guard = 500.0;

    const Matrix<T>& k;
    const Matrix<T>& v;
    double scale;
    std::size_t keys;
    std::size_t dv;

    std::vector<double> scores;      // block_rows x keys
    std::vector<std::uint8_t> bits;  // block_rows x keys, bit0 spatial, bit1 temporal
    std::vector<double> m_full, l_full, l_sp, l_tmp;
    std::vector<double> o_full, o_sp, o_tmp;  // block_rows x dv each
    std::vector<std::uint8_t> fallback;       // 2 x block_rows flags
    std::vector<T> full_t, sub_t;

    FusedProfileBlock(const Matrix<T>& k_, const Matrix<T>& v_, double scale_)
        : k(k_), v(v_), scale(scale_), keys(k_.rows), dv(v_.cols) {
        scores.resize(block_rows * keys);
        bits.resize(block_rows * keys);
        m_full.resize(block_rows);
        l_full.resize(block_rows);
        l_sp.resize(block_rows);
        l_tmp.resize(block_rows);
        o_full.resize(block_rows * dv);
        o_sp.resize(block_rows * dv);
        o_tmp.resize(block_rows * dv);
        fallback.resize(2 * block_rows);
        full_t.resize(dv);
        sub_t.resize(dv);
    }

    /// Processes rows[0..n) of q (n <= block_rows); adds the squared errors.
    void run(const Matrix<T>& q, const std::size_t* rows, std::size_t n,
             const ElementMask& spatial_mask, const ElementMask& temporal_mask,
             double* se_spatial, double* se_temporal) {
        for (std::size_t r = 0; r < n; ++r) {
            std::uint8_t* row_bits = bits.data() + r * keys;
            std::fill(row_bits, row_bits + keys, 0);
            for (const auto& iv : spatial_mask.row(rows[r])) {
                for (std::size_t c = iv.begin; c < iv.end; ++c) {
                    row_bits[c] |= 1;
                }
            }
            for (const auto& iv : temporal_mask.row(rows[r])) {
                for (std::size_t c = iv.begin; c < iv.end; ++c) {
                    row_bits[c] |= 2;
                }
            }
            m_full[r] = -std::numeric_limits<double>::infinity();
        }

        // Pass 1: scores, streaming the keys once for the whole block.
        for (std::size_t c = 0; c < keys; ++c) {
            const T* krow = k.row(c);
            for (std::size_t r = 0; r < n; ++r) {
                const double s = scale * dot_product(q.row(rows[r]), krow, k.cols);
                scores[r * keys + c] = s;
                m_full[r] = std::max(m_full[r], s);
            }
        }

        // Subset maxima decide per (row, mask) whether the shared
        // exponentials are safe.
        for (std::size_t r = 0; r < n; ++r) {
            const double* srow = scores.data() + r * keys;
            const std::uint8_t* row_bits = bits.data() + r * keys;
            double m_sp = -std::numeric_limits<double>::infinity();
            double m_tm = m_sp;
            for (std::size_t c = 0; c < keys; ++c) {
                if (row_bits[c] & 1) {
                    m_sp = std::max(m_sp, srow[c]);
                }
                if (row_bits[c] & 2) {
                    m_tm = std::max(m_tm, srow[c]);
                }
            }
            fallback[2 * r] = m_full[r] - m_sp > underflow_guard ? 1 : 0;
            fallback[2 * r + 1] = m_full[r] - m_tm > underflow_guard ? 1 : 0;
            l_full[r] = l_sp[r] = l_tmp[r] = 0.0;
            // Own-max reruns for guarded pairs, reading the cached scores.
            if (fallback[2 * r]) {
                rerun_subset(srow, row_bits, 1, m_sp, o_sp.data() + r * dv, &l_sp[r]);
            }
            if (fallback[2 * r + 1]) {
                rerun_subset(srow, row_bits, 2, m_tm, o_tmp.data() + r * dv, &l_tmp[r]);
            }
        }
        std::fill(o_full.begin(), o_full.begin() + n * dv, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (!fallback[2 * r]) {
                std::fill(o_sp.begin() + r * dv, o_sp.begin() + (r + 1) * dv, 0.0);
            }
            if (!fallback[2 * r + 1]) {
                std::fill(o_tmp.begin() + r * dv, o_tmp.begin() + (r + 1) * dv, 0.0);
            }
        }

        // Pass 2: exponentials and value accumulation, values streamed once.
        for (std::size_t c = 0; c < keys; ++c) {
            const T* vrow = v.row(c);
            for (std::size_t r = 0; r < n; ++r) {
                const double p = std::exp(scores[r * keys + c] - m_full[r]);
                const std::uint8_t b = bits[r * keys + c];
                l_full[r] += p;
                double* of = o_full.data() + r * dv;
                for (std::size_t j = 0; j < dv; ++j) {
                    of[j] += p * static_cast<double>(vrow[j]);
                }
                if ((b & 1) && !fallback[2 * r]) {
                    l_sp[r] += p;
                    double* os = o_sp.data() + r * dv;
                    for (std::size_t j = 0; j < dv; ++j) {
                        os[j] += p * static_cast<double>(vrow[j]);
                    }
                }
                if ((b & 2) && !fallback[2 * r + 1]) {
                    l_tmp[r] += p;
                    double* ot = o_tmp.data() + r * dv;
                    for (std::size_t j = 0; j < dv; ++j) {
                        ot[j] += p * static_cast<double>(vrow[j]);
                    }
                }
            }
        }

        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < dv; ++j) {
                full_t[j] = static_cast<T>(o_full[r * dv + j] / l_full[r]);
            }
            double se = 0.0;
            for (std::size_t j = 0; j < dv; ++j) {
                const double d =
                    static_cast<double>(static_cast<T>(o_sp[r * dv + j] / l_sp[r])) -
                    static_cast<double>(full_t[j]);
                se += d * d;
            }
            *se_spatial += se;
            se = 0.0;
            for (std::size_t j = 0; j < dv; ++j) {
                const double d =
                    static_cast<double>(static_cast<T>(o_tmp[r * dv + j] / l_tmp[r])) -
                    static_cast<double>(full_t[j]);
                se += d * d;
            }
            *se_temporal += se;
        }
    }

private:
    void rerun_subset(const double* srow, const std::uint8_t* row_bits, std::uint8_t bit,
                      double m_sub, double* acc, double* l) {
        std::fill(acc, acc + dv, 0.0);
        for (std::size_t c = 0; c < keys; ++c) {
            if (!(row_bits[c] & bit)) {
                continue;
            }
            const double p = std::exp(srow[c] - m_sub);
            *l += p;
            const T* vrow = v.row(c);
            for (std::size_t j = 0; j < dv; ++j) {
                acc[j] += p * static_cast<double>(vrow[j]);
            }
        }
    }
};

}  // namespace detail

template <typename T>
ProfileResult profile_head(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const ElementMask& spatial_mask, const ElementMask& temporal_mask,
                           std::span<const std::size_t> indices, std::optional<double> scale) {
    if (indices.empty()) {
        throw std::invalid_argument("profile_head: at least one sampled row required");
    }
    if (spatial_mask.rows() != q.rows || spatial_mask.cols() != k.rows ||
        temporal_mask.rows() != q.rows || temporal_mask.cols() != k.rows) {
        throw std::invalid_argument("profile_head: mask shape mismatch");
    }
    const double sc = resolve_scale(scale, q.cols);
    const std::size_t dv = v.cols;
    for (const std::size_t r : indices) {
        if (r >= q.rows) {
            throw std::out_of_range("profile_head: sampled row out of range");
        }
        if (spatial_mask.row(r).empty() || temporal_mask.row(r).empty()) {
            throw invariant_error("profile_head: sampled row " + std::to_string(r) +
                                  " is fully masked");
        }
    }
    detail::FusedProfileBlock<T> block(k, v, sc);
    double se_spatial = 0.0;
    double se_temporal = 0.0;
    for (std::size_t i = 0; i < indices.size(); i += block.block_rows) {
        const std::size_t n = std::min(block.block_rows, indices.size() - i);
        block.run(q, indices.data() + i, n, spatial_mask, temporal_mask, &se_spatial,
                  &se_temporal);
    }
    const double denom = static_cast<double>(indices.size()) * static_cast<double>(dv);
    ProfileResult res;
    res.mse_spatial = se_spatial / denom;
    res.mse_temporal = se_temporal / denom;
    // Strict inequality: a tie keeps the temporal pattern.
    res.chosen = res.mse_spatial < res.mse_temporal ? HeadClass::spatial : HeadClass::temporal;
    res.flops = 3ull * 2 * indices.size() * k.rows * (q.cols + v.cols);
    return res;
}

template <typename T>
ProfileResult profile_head(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const MaskSpec& spec, const ProfileConfig& cfg,
                           std::optional<double> scale) {
    cfg.validate();
    const std::size_t s = spec.layout.seq_len();
    const ElementMask spatial_mask = ElementMask::from_spans(s, s, spatial_span_fn(spec));
    const ElementMask temporal_mask = ElementMask::from_spans(s, s, temporal_span_fn(spec));
    const auto indices = sample_indices(s, profile_sample_count(cfg, s), cfg.seed);
    return profile_head(q, k, v, spatial_mask, temporal_mask, std::span(indices), scale);
}

template <typename T>
StepClassification classify_heads(const std::function<HeadTensors<T>(std::size_t)>& head_at,
                                  std::size_t num_heads, const ElementMask& spatial_mask,
                                  const ElementMask& temporal_mask, const ProfileConfig& cfg,
                                  std::size_t step_index, std::size_t total_steps,
                                  double warmup_fraction, std::optional<double> scale,
                                  unsigned threads) {
    cfg.validate();
    if (step_index >= total_steps) {
        throw std::invalid_argument("classify_heads: step_index out of range");
    }
    StepClassification out;
    if (step_index < warmup_step_count(warmup_fraction, total_steps)) {
        out.warmup = true;
        out.heads.assign(num_heads, ProfileResult{});
        return out;
    }
    const std::size_t s = spatial_mask.rows();
    const std::size_t t = profile_sample_count(cfg, s);
    const std::vector<std::size_t> shared =
        cfg.shared_indices ? sample_indices(s, t, mix_seed(cfg.seed, step_index))
                           : std::vector<std::size_t>{};
    out.indices = shared;
    out.heads.resize(num_heads);
    parallel_for(num_heads, threads, [&](std::size_t h) {
        const HeadTensors<T> tensors = head_at(h);
        std::vector<std::size_t> own;
        if (!cfg.shared_indices) {
            own = sample_indices(s, t, mix_seed(cfg.seed, step_index, h));
        }
        const auto& idx = cfg.shared_indices ? shared : own;
        out.heads[h] = profile_head(tensors.q, tensors.k, tensors.v, spatial_mask, temporal_mask,
                                    std::span(idx), scale);
    });
    return out;
}

}  // namespace stattn
