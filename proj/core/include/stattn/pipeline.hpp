// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stattn/profiler.hpp"

namespace stattn {

struct PlantedHead {
    HeadClass type = HeadClass::spatial;  // spatial or temporal
    std::optional<std::size_t> flip_step;  // switches to the other type at this step
};

/// Synthetic multi-head multi-step workload with planted structure, so
/// classification accuracy is measurable against a known ground truth.
struct WorkloadSpec {
    LayoutSpec layout;
    std::size_t head_dim = 64;
    std::size_t num_heads = 1;
    std::size_t num_steps = 1;
    std::vector<PlantedHead> planted;
    /// Signal strength; 0 plants no structure (such heads are excluded from
    /// agreement metrics because no ground truth exists).
    double alpha = 8.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Deterministic workload generator. Tensors are regenerated on demand from
/// (seed, step, head) rather than stored, so full runs stay cheap on memory.
///
/// Spatial-planted heads give each video token a query/key embedding
/// alpha * u(frame) + noise with fixed random unit directions per frame, so
/// attention mass concentrates within frames. Temporal-planted heads key the
/// direction on a coarse offset bucket (width = slash half-width, floored at
/// one), so mass concentrates on same-offset slashes. Text tokens share one
/// distinct direction. Values are i.i.d. gaussian.
template <typename T>
class Workload {
public:
    Workload(WorkloadSpec spec, const MaskSpec& mask_spec);

    const WorkloadSpec& spec() const { return spec_; }
    std::size_t offset_bucket_width() const { return bucket_width_; }

    /// Planted type at a step, flips applied.
    HeadClass planted_at(std::size_t head, std::size_t step) const;

    HeadTensors<T> tensors(std::size_t step, std::size_t head) const;

private:
    Matrix<double> directions_for(std::size_t head, HeadClass type) const;

    WorkloadSpec spec_;
    std::size_t bucket_width_ = 1;
};

struct PipelineConfig {
    MaskSpec mask;
    ProfileConfig profile;
    double warmup_fraction = 0.25;
    std::size_t block_size = 64;
    bool fp8 = false;
    /// When false the dense oracle and per-step error stats are skipped;
    /// classification-only runs use this.
    bool compare_outputs = true;
    std::optional<double> scale;
    unsigned threads = 1;
};

struct HeadReport {
    HeadClass chosen = HeadClass::dense;
    double mse_spatial = 0.0;
    double mse_temporal = 0.0;
    std::uint64_t attention_flops = 0;
    std::optional<ErrorStats> error;  // vs the dense oracle, when compared
};

struct StepReport {
    std::size_t step = 0;
    bool warmup = false;
    std::vector<HeadReport> heads;
    std::optional<ErrorStats> error;  // over all heads of the step
};

struct PipelineTotals {
    std::uint64_t dense_flops = 0;      // nominal all-dense cost, H * steps * 4 S^2 D
    std::uint64_t warmup_flops = 0;     // dense flops actually spent in warmup steps
    std::uint64_t sparse_flops = 0;     // counted by the sparse kernels
    std::uint64_t profiling_flops = 0;  // charged at the 3-pass convention
    /// Same quantity as sparse_flops but predicted from mask geometry alone.
    std::uint64_t predicted_sparse_flops = 0;
    double reduction_ratio = 0.0;  // dense / (warmup + sparse + profiling)
    /// Mean per-head-step density of the chosen masks, from the prediction.
    double rho_mix = 0.0;
    std::size_t spatial_heads = 0;
    std::size_t temporal_heads = 0;
    std::size_t dense_heads = 0;
    double mean_psnr_db = 0.0;
    std::optional<double> planted_agreement;  // non-warmup pairs; absent when alpha == 0
};

struct PipelineReport {
    LayoutSpec layout;
    std::size_t head_dim = 0;
    std::size_t num_heads = 0;
    std::size_t num_steps = 0;
    std::size_t spatial_frames = 0;
    std::size_t temporal_budget = 0;
    std::size_t block_size = 0;
    double sample_fraction = 0.0;
    std::size_t min_samples = 0;
    double warmup_fraction = 0.0;
    double alpha = 0.0;
    bool fp8 = false;
    bool compare_outputs = true;
    std::uint64_t seed = 0;
    int precision_bits = 64;
    std::vector<StepReport> steps;
    PipelineTotals totals;
};

/// Runs the full loop: warmup steps dense, everything after profiled per head
/// and dispatched to the spatial block-sparse kernel or the frame-major
/// temporal path, with every output compared against the dense oracle when
/// compare_outputs is set.
template <typename T>
PipelineReport run_pipeline(const Workload<T>& workload, const PipelineConfig& cfg);

/// Fraction of non-warmup (step, head) pairs with identical chosen class.
double compare_to_oracle(const PipelineReport& sampled, const PipelineReport& full);

std::string report_to_json(const PipelineReport& report, int indent = 2);

/// Flat dump: one {step, head, mse_spatial, mse_temporal, class} per pair.
std::string classification_to_json(const PipelineReport& report, int indent = 2);

}  // namespace stattn

#include "stattn/pipeline_impl.hpp"
