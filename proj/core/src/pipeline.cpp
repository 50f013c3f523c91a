// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/pipeline.hpp"

#include <json.hpp>

namespace stattn {

void WorkloadSpec::validate() const {
    layout.validate();
    if (head_dim < 1 || num_heads < 1 || num_steps < 1) {
        throw std::invalid_argument("WorkloadSpec: head_dim, num_heads, num_steps must be >= 1");
    }
    if (planted.size() != num_heads) {
        throw std::invalid_argument("WorkloadSpec: planted size must equal num_heads");
    }
    if (alpha < 0.0) {
        throw std::invalid_argument("WorkloadSpec: alpha must be >= 0");
    }
    for (const auto& ph : planted) {
        if (ph.type == HeadClass::dense) {
            throw std::invalid_argument("WorkloadSpec: planted types must be spatial or temporal");
        }
    }
}

double compare_to_oracle(const PipelineReport& sampled, const PipelineReport& full) {
    if (sampled.steps.size() != full.steps.size() || sampled.num_heads != full.num_heads) {
        throw std::invalid_argument("compare_to_oracle: reports have mismatched shapes");
    }
    std::size_t pairs = 0;
    std::size_t matches = 0;
    for (std::size_t s = 0; s < sampled.steps.size(); ++s) {
        const StepReport& a = sampled.steps[s];
        const StepReport& b = full.steps[s];
        if (a.warmup != b.warmup || a.heads.size() != b.heads.size()) {
            throw std::invalid_argument("compare_to_oracle: step structure differs");
        }
        if (a.warmup) {
            continue;
        }
        for (std::size_t h = 0; h < a.heads.size(); ++h) {
            ++pairs;
            if (a.heads[h].chosen == b.heads[h].chosen) {
                ++matches;
            }
        }
    }
    return pairs == 0 ? 1.0 : static_cast<double>(matches) / static_cast<double>(pairs);
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json error_to_json(const ErrorStats& st) {
    return ordered_json{{"mse", st.mse},
                        {"psnr_db", st.psnr_db},
                        {"max_abs_diff", st.max_abs_diff}};
}

}  // namespace

std::string report_to_json(const PipelineReport& report, int indent) {
    ordered_json j;
    j["schema"] = "stattn-report-v1";
    j["config"] = ordered_json{
        {"layout",
         ordered_json{{"text_len", report.layout.text_len},
                      {"num_frames", report.layout.num_frames},
                      {"tokens_per_frame", report.layout.tokens_per_frame},
                      {"seq_len", report.layout.seq_len()}}},
        {"head_dim", report.head_dim},
        {"num_heads", report.num_heads},
        {"num_steps", report.num_steps},
        {"spatial_frames", report.spatial_frames},
        {"temporal_budget", report.temporal_budget},
        {"block_size", report.block_size},
        {"sample_fraction", report.sample_fraction},
        {"min_samples", report.min_samples},
        {"warmup_fraction", report.warmup_fraction},
        {"alpha", report.alpha},
        {"fp8", report.fp8},
        {"compare_outputs", report.compare_outputs},
        {"seed", report.seed},
        {"precision_bits", report.precision_bits},
    };
    ordered_json steps = ordered_json::array();
    for (const auto& srep : report.steps) {
        ordered_json heads = ordered_json::array();
        for (std::size_t h = 0; h < srep.heads.size(); ++h) {
            const HeadReport& hrep = srep.heads[h];
            ordered_json hj{{"head", h},
                            {"class", to_string(hrep.chosen)},
                            {"mse_spatial", hrep.mse_spatial},
                            {"mse_temporal", hrep.mse_temporal},
                            {"attention_flops", hrep.attention_flops}};
            if (hrep.error) {
                hj["error"] = error_to_json(*hrep.error);
            }
            heads.push_back(std::move(hj));
        }
        ordered_json sj{{"step", srep.step}, {"warmup", srep.warmup},
                        {"heads", std::move(heads)}};
        if (srep.error) {
            sj["error"] = error_to_json(*srep.error);
        }
        steps.push_back(std::move(sj));
    }
    j["steps"] = std::move(steps);
    const PipelineTotals& t = report.totals;
    ordered_json totals{
        {"dense_flops", t.dense_flops},
        {"warmup_flops", t.warmup_flops},
        {"sparse_flops", t.sparse_flops},
        {"profiling_flops", t.profiling_flops},
        {"predicted_sparse_flops", t.predicted_sparse_flops},
        {"reduction_ratio", t.reduction_ratio},
        {"rho_mix", t.rho_mix},
        {"spatial_heads", t.spatial_heads},
        {"temporal_heads", t.temporal_heads},
        {"dense_heads", t.dense_heads},
        {"mean_psnr_db", t.mean_psnr_db},
    };
    totals["planted_agreement"] =
        t.planted_agreement ? ordered_json(*t.planted_agreement) : ordered_json(nullptr);
    j["totals"] = std::move(totals);
    return j.dump(indent) + "\n";
}

std::string classification_to_json(const PipelineReport& report, int indent) {
    ordered_json arr = ordered_json::array();
    for (const auto& srep : report.steps) {
        for (std::size_t h = 0; h < srep.heads.size(); ++h) {
            const HeadReport& hrep = srep.heads[h];
            arr.push_back(ordered_json{{"step", srep.step},
                                       {"head", h},
                                       {"mse_spatial", hrep.mse_spatial},
                                       {"mse_temporal", hrep.mse_temporal},
                                       {"class", to_string(hrep.chosen)}});
        }
    }
    return arr.dump(indent) + "\n";
}

}  // namespace stattn
