// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stattn/masks.hpp"

namespace stattn {

/// Named parameter bundle: token geometry plus the sparsity budgets and head
/// shape that go with it.
struct EnginePreset {
    std::string name;
    LayoutSpec layout;
    std::size_t spatial_frames = 1;
    std::size_t temporal_budget = 1;
    std::size_t head_dim = 64;
    std::size_t num_heads = 8;

    MaskSpec mask_spec() const {
        return MaskSpec{layout, spatial_frames, temporal_budget, true, true};
    }
};

/// Full-size layouts ("cogvideox-v1.5", "hunyuanvideo") for mask geometry and
/// flops arithmetic, plus desk-scale "cogvideo-mini" / "hunyuan-mini" presets
/// that shrink tokens-per-frame ~32x while preserving the frame counts and
/// the budget-to-size ratios.
const std::vector<EnginePreset>& all_presets();

std::optional<EnginePreset> find_preset(const std::string& name);

}  // namespace stattn
