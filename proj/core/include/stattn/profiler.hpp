// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stattn/attention.hpp"
#include "stattn/masks.hpp"
#include "stattn/parallel.hpp"

namespace stattn {

struct ProfileConfig {
    /// Fraction of query rows sampled per head; (0, 1].
    double sample_fraction = 0.01;
    /// Floor on the sample count so tiny sequences still get a usable signal.
    std::size_t min_samples = 32;
    std::uint64_t seed = 0;
    /// One shared index set for all heads of a step (per-step reseeded).
    bool shared_indices = true;

    void validate() const;
};

/// max(min_samples, ceil(sample_fraction * seq_len)), clamped to seq_len.
std::size_t profile_sample_count(const ProfileConfig& cfg, std::size_t seq_len);

/// t distinct indices drawn uniformly without replacement, deterministic in
/// (seq_len, t, seed), returned ascending. t == seq_len yields [0, seq_len).
std::vector<std::size_t> sample_indices(std::size_t seq_len, std::size_t t, std::uint64_t seed);

struct ProfileResult {
    double mse_spatial = 0.0;
    double mse_temporal = 0.0;
    HeadClass chosen = HeadClass::dense;
    /// Charged at the profiling convention: three passes at nominal dense
    /// cost over the sampled rows, 3 * 4 * t * S * D.
    std::uint64_t flops = 0;
};

/// Algorithm: take the sampled query rows, compute their unmasked attention
/// plus both masked attentions, and pick the pattern with the lower mean
/// squared difference. Ties go to temporal.
template <typename T>
ProfileResult profile_head(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const ElementMask& spatial_mask, const ElementMask& temporal_mask,
                           std::span<const std::size_t> indices,
                           std::optional<double> scale = std::nullopt);

/// Convenience form that builds both masks and the sampled indices itself.
template <typename T>
ProfileResult profile_head(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const MaskSpec& spec, const ProfileConfig& cfg,
                           std::optional<double> scale = std::nullopt);

/// Number of leading denoising steps that run dense: ceil(fraction * total).
std::size_t warmup_step_count(double warmup_fraction, std::size_t total_steps);

template <typename T>
struct HeadTensors {
    Matrix<T> q, k, v;
};

struct StepClassification {
    bool warmup = false;
    std::vector<std::size_t> indices;  // empty during warmup
    std::vector<ProfileResult> heads;
};

/// Profiles every head of one step, or marks them all dense during warmup.
/// Sampled indices are shared across heads when cfg.shared_indices is set and
/// reseeded per step from (cfg.seed, step_index), so classification is
/// re-derived at every non-warmup step.
template <typename T>
StepClassification classify_heads(const std::function<HeadTensors<T>(std::size_t)>& head_at,
                                  std::size_t num_heads, const ElementMask& spatial_mask,
                                  const ElementMask& temporal_mask, const ProfileConfig& cfg,
                                  std::size_t step_index, std::size_t total_steps,
                                  double warmup_fraction,
                                  std::optional<double> scale = std::nullopt,
                                  unsigned threads = 1);

}  // namespace stattn

#include "stattn/profiler_impl.hpp"
