// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

// Template bodies for pipeline.hpp; not meant to be included directly.

#pragma once

#include <cmath>

namespace stattn {

namespace detail {

/// Running error accumulator; ErrorStats keeps only derived values, this
/// carries what step-level aggregation needs.
struct ErrAccum {
    double sq_sum = 0.0;
    double peak = 0.0;
    double max_diff = 0.0;
    std::uint64_t count = 0;

    void merge(const ErrAccum& other) {
        sq_sum += other.sq_sum;
        peak = std::max(peak, other.peak);
        max_diff = std::max(max_diff, other.max_diff);
        count += other.count;
    }

    ErrorStats stats() const {
        ErrorStats st;
        st.max_abs_diff = max_diff;
        st.mse = count == 0 ? 0.0 : sq_sum / static_cast<double>(count);
        const double p = peak == 0.0 ? 1.0 : peak;
        if (st.mse == 0.0) {
            st.psnr_db = ErrorStats::psnr_cap_db;
        } else {
            st.psnr_db = std::min(ErrorStats::psnr_cap_db, 10.0 * std::log10(p * p / st.mse));
        }
        return st;
    }
};

template <typename T>
ErrAccum accumulate_error(const Matrix<T>& reference, const Matrix<T>& test) {
    ErrAccum acc;
    acc.count = reference.data.size();
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double r = static_cast<double>(reference.data[i]);
        const double d = static_cast<double>(test.data[i]) - r;
        acc.peak = std::max(acc.peak, std::fabs(r));
        acc.sq_sum += d * d;
        acc.max_diff = std::max(acc.max_diff, std::fabs(d));
    }
    return acc;
}

}  // namespace detail

template <typename T>
Workload<T>::Workload(WorkloadSpec spec, const MaskSpec& mask_spec) : spec_(std::move(spec)) {
    spec_.validate();
    mask_spec.validate();
    if (!(mask_spec.layout == spec_.layout)) {
        throw std::invalid_argument("Workload: mask layout differs from workload layout");
    }
    bucket_width_ = std::max<std::size_t>(1, mask_spec.slash_half_width());
}

template <typename T>
HeadClass Workload<T>::planted_at(std::size_t head, std::size_t step) const {
    const PlantedHead& ph = spec_.planted.at(head);
    HeadClass type = ph.type;
    if (ph.flip_step && step >= *ph.flip_step) {
        type = type == HeadClass::spatial ? HeadClass::temporal : HeadClass::spatial;
    }
    return type;
}

template <typename T>
Matrix<double> Workload<T>::directions_for(std::size_t head, HeadClass type) const {
    const LayoutSpec& lay = spec_.layout;
    const std::size_t num_dirs =
        type == HeadClass::spatial
            ? lay.num_frames
            : (lay.tokens_per_frame + bucket_width_ - 1) / bucket_width_;
    // Directions are fixed per (head, pattern); only the noise is per step.
    Rng rng(mix_seed(spec_.seed, 0xD1Bull, head, type == HeadClass::spatial ? 1 : 2));
    Matrix<double> dirs(num_dirs + 1, spec_.head_dim);  // last row = shared text direction
    for (std::size_t r = 0; r < dirs.rows; ++r) {
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < dirs.cols; ++j) {
            const double g = rng.normal();
            dirs(r, j) = g;
            norm_sq += g * g;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < dirs.cols; ++j) {
            dirs(r, j) *= inv;
        }
    }
    return dirs;
}

template <typename T>
HeadTensors<T> Workload<T>::tensors(std::size_t step, std::size_t head) const {
    if (step >= spec_.num_steps || head >= spec_.num_heads) {
        throw std::out_of_range("Workload::tensors: step or head out of range");
    }
    const LayoutSpec& lay = spec_.layout;
    const std::size_t s = lay.seq_len();
    const std::size_t d = spec_.head_dim;
    const HeadClass type = planted_at(head, step);
    const Matrix<double> dirs = directions_for(head, type);
    const std::size_t text_dir = dirs.rows - 1;

    const auto dir_of = [&](std::size_t i) -> std::size_t {
        if (i < lay.text_len) {
            return text_dir;
        }
        const std::size_t v = i - lay.text_len;
        return type == HeadClass::spatial ? v / lay.tokens_per_frame
                                          : (v % lay.tokens_per_frame) / bucket_width_;
    };

    Rng noise(mix_seed(spec_.seed, 0xA11CEull, step, head));
    HeadTensors<T> out{Matrix<T>(s, d), Matrix<T>(s, d), Matrix<T>(s, d)};
    for (std::size_t i = 0; i < s; ++i) {
        const double* u = dirs.row(dir_of(i));
        T* qrow = out.q.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            qrow[j] = static_cast<T>(spec_.alpha * u[j] + noise.normal());
        }
    }
    for (std::size_t i = 0; i < s; ++i) {
        const double* u = dirs.row(dir_of(i));
        T* krow = out.k.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            krow[j] = static_cast<T>(spec_.alpha * u[j] + noise.normal());
        }
    }
    for (auto& x : out.v.data) {
        x = static_cast<T>(noise.normal());
    }
    return out;
}

template <typename T>
PipelineReport run_pipeline(const Workload<T>& workload, const PipelineConfig& cfg) {
    const WorkloadSpec& wl = workload.spec();
    cfg.mask.validate();
    cfg.profile.validate();
    if (!(cfg.mask.layout == wl.layout)) {
        throw std::invalid_argument("run_pipeline: mask layout differs from workload layout");
    }
    const std::size_t s = wl.layout.seq_len();
    const std::size_t d = wl.head_dim;
    const std::size_t heads = wl.num_heads;
    const std::size_t steps = wl.num_steps;

    // Shared geometry, built once per run.
    const ElementMask spatial_element = ElementMask::from_spans(s, s, spatial_span_fn(cfg.mask));
    const ElementMask temporal_element = ElementMask::from_spans(s, s, temporal_span_fn(cfg.mask));
    const BlockMask spatial_block = build_block_mask(s, cfg.block_size, spatial_span_fn(cfg.mask));
    const Permutation perm = frame_major_permutation(wl.layout);
    const BlockMask band = temporal_band_block_mask(cfg.mask, cfg.block_size);

    const std::uint64_t dense_per_call = static_cast<std::uint64_t>(s) * s * 4 * d;
    const std::uint64_t spatial_predicted = spatial_block.pair_count() * 4 * d;
    const std::uint64_t temporal_predicted =
        temporal_frame_major_pair_count(cfg.mask, perm, band) * 4 * d;
    const std::size_t warmup_steps = warmup_step_count(cfg.warmup_fraction, steps);
    const std::size_t sample_count = profile_sample_count(cfg.profile, s);
    const Fp8Mode fp8_mode = cfg.fp8 ? Fp8Mode::quantize_qk : Fp8Mode::off;

    PipelineReport report;
    report.layout = wl.layout;
    report.head_dim = d;
    report.num_heads = heads;
    report.num_steps = steps;
    report.spatial_frames = cfg.mask.spatial_frames;
    report.temporal_budget = cfg.mask.temporal_budget;
    report.block_size = cfg.block_size;
    report.sample_fraction = cfg.profile.sample_fraction;
    report.min_samples = cfg.profile.min_samples;
    report.warmup_fraction = cfg.warmup_fraction;
    report.alpha = wl.alpha;
    report.fp8 = cfg.fp8;
    report.compare_outputs = cfg.compare_outputs;
    report.seed = wl.seed;
    report.precision_bits = static_cast<int>(sizeof(T) * 8);
    report.steps.reserve(steps);

    PipelineTotals& totals = report.totals;
    totals.dense_flops = dense_per_call * heads * steps;
    double psnr_sum = 0.0;
    std::size_t planted_matches = 0;
    std::size_t planted_pairs = 0;

    for (std::size_t step = 0; step < steps; ++step) {
        StepReport srep;
        srep.step = step;
        srep.warmup = step < warmup_steps;
        srep.heads.resize(heads);
        std::vector<detail::ErrAccum> errs(heads);
        std::vector<std::uint64_t> predicted(heads, 0);

        // Shared sampled rows are drawn once per step, before the head fan-out.
        std::vector<std::size_t> indices;
        if (!srep.warmup) {
            indices = sample_indices(s, sample_count, mix_seed(cfg.profile.seed, step));
        }

        parallel_for(heads, cfg.threads, [&](std::size_t h) {
            const HeadTensors<T> t = workload.tensors(step, h);
            HeadReport& hrep = srep.heads[h];
            if (srep.warmup) {
                const auto dense = attention_dense(t.q, t.k, t.v, cfg.scale);
                hrep.chosen = HeadClass::dense;
                hrep.attention_flops = dense.flops;
                if (cfg.compare_outputs) {
                    // The dense pass is the oracle; the error is exactly zero.
                    detail::ErrAccum acc;
                    acc.count = dense.out.data.size();
                    for (const T x : dense.out.data) {
                        acc.peak = std::max(acc.peak, std::fabs(static_cast<double>(x)));
                    }
                    errs[h] = acc;
                    hrep.error = acc.stats();
                }
                return;
            }
            std::vector<std::size_t> own;
            if (!cfg.profile.shared_indices) {
                own = sample_indices(s, sample_count, mix_seed(cfg.profile.seed, step, h));
            }
            const auto& idx = cfg.profile.shared_indices ? indices : own;
            const ProfileResult prof = profile_head(t.q, t.k, t.v, spatial_element,
                                                    temporal_element, std::span(idx), cfg.scale);
            hrep.chosen = prof.chosen;
            hrep.mse_spatial = prof.mse_spatial;
            hrep.mse_temporal = prof.mse_temporal;

            AttentionResult<T> sparse;
            if (prof.chosen == HeadClass::spatial) {
                sparse = attention_block_sparse_fp8(t.q, t.k, t.v, spatial_block, cfg.scale,
                                                    fp8_mode);
                predicted[h] = spatial_predicted;
            } else {
                sparse = attention_temporal_frame_major(t.q, t.k, t.v, cfg.mask, perm, band,
                                                        cfg.scale, fp8_mode);
                predicted[h] = temporal_predicted;
            }
            hrep.attention_flops = sparse.flops;
            if (cfg.compare_outputs) {
                const auto oracle = attention_dense(t.q, t.k, t.v, cfg.scale);
                errs[h] = detail::accumulate_error(oracle.out, sparse.out);
                hrep.error = errs[h].stats();
            }
        });

        // Deterministic reduction in head order, independent of thread count.
        detail::ErrAccum step_err;
        for (std::size_t h = 0; h < heads; ++h) {
            const HeadReport& hrep = srep.heads[h];
            if (srep.warmup) {
                totals.warmup_flops += hrep.attention_flops;
                ++totals.dense_heads;
            } else {
                totals.sparse_flops += hrep.attention_flops;
                totals.predicted_sparse_flops += predicted[h];
                if (hrep.chosen == HeadClass::spatial) {
                    ++totals.spatial_heads;
                } else {
                    ++totals.temporal_heads;
                }
                ++planted_pairs;
                if (hrep.chosen == workload.planted_at(h, step)) {
                    ++planted_matches;
                }
            }
            step_err.merge(errs[h]);
        }
        if (!srep.warmup) {
            // Profiling charged at the convention: three nominal dense passes
            // over the sampled rows per head.
            totals.profiling_flops += heads * (3ull * 2 * sample_count * s * (d + d));
        }
        if (cfg.compare_outputs) {
            srep.error = step_err.stats();
            psnr_sum += srep.error->psnr_db;
        }
        report.steps.push_back(std::move(srep));
    }

    const double spent = static_cast<double>(totals.warmup_flops) +
                         static_cast<double>(totals.sparse_flops) +
                         static_cast<double>(totals.profiling_flops);
    totals.reduction_ratio = spent > 0.0 ? static_cast<double>(totals.dense_flops) / spent : 0.0;
    const std::size_t nonwarmup_pairs = totals.spatial_heads + totals.temporal_heads;
    totals.rho_mix = nonwarmup_pairs == 0
                         ? 0.0
                         : static_cast<double>(totals.predicted_sparse_flops) /
                               (static_cast<double>(dense_per_call) *
                                static_cast<double>(nonwarmup_pairs));
    if (cfg.compare_outputs && steps > 0) {
        totals.mean_psnr_db = psnr_sum / static_cast<double>(steps);
    }
    if (wl.alpha > 0.0 && planted_pairs > 0) {
        totals.planted_agreement =
            static_cast<double>(planted_matches) / static_cast<double>(planted_pairs);
    }
    return report;
}

}  // namespace stattn
