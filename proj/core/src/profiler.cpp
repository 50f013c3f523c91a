// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stattn/rng.hpp"

namespace stattn {

void ProfileConfig::validate() const {
    if (!(sample_fraction > 0.0) || sample_fraction > 1.0) {
        throw std::invalid_argument("ProfileConfig: sample_fraction must be in (0, 1]");
    }
    if (min_samples < 1) {
        throw std::invalid_argument("ProfileConfig: min_samples must be >= 1");
    }
}

std::size_t profile_sample_count(const ProfileConfig& cfg, std::size_t seq_len) {
    cfg.validate();
    const auto scaled =
        static_cast<std::size_t>(std::ceil(cfg.sample_fraction * static_cast<double>(seq_len)));
    return std::min(seq_len, std::max(cfg.min_samples, scaled));
}

std::vector<std::size_t> sample_indices(std::size_t seq_len, std::size_t t, std::uint64_t seed) {
    if (t < 1 || t > seq_len) {
        throw std::invalid_argument("sample_indices: need 1 <= t <= seq_len");
    }
    std::vector<std::size_t> pool(seq_len);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(seed);
    // Partial Fisher-Yates with our own generator; std::shuffle would be
    // implementation-defined.
    for (std::size_t i = 0; i < t; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(seq_len - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(t);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::size_t warmup_step_count(double warmup_fraction, std::size_t total_steps) {
    if (warmup_fraction < 0.0 || warmup_fraction > 1.0) {
        throw std::invalid_argument("warmup fraction must be in [0, 1]");
    }
    return static_cast<std::size_t>(
        std::ceil(warmup_fraction * static_cast<double>(total_steps)));
}

}  // namespace stattn
