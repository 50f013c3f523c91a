// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/presets.hpp"

namespace stattn {

const std::vector<EnginePreset>& all_presets() {
    // Full-size presets carry no text prefix; the density and flops checks
    // they exist for are defined over the video region only.
    static const std::vector<EnginePreset> presets = {
        {"cogvideox-v1.5", {0, 11, 4080}, 4, 1224, 64, 96},
        {"hunyuanvideo", {0, 33, 3600}, 10, 1200, 128, 24},
        {"cogvideo-mini", {32, 11, 128}, 4, 38, 64, 8},
        {"hunyuan-mini", {32, 33, 112}, 10, 37, 64, 8},
    };
    return presets;
}

std::optional<EnginePreset> find_preset(const std::string& name) {
    for (const auto& p : all_presets()) {
        if (p.name == name) {
            return p;
        }
    }
    return std::nullopt;
}

}  // namespace stattn
