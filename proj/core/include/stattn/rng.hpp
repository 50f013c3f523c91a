// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace stattn {

/// splitmix64 stream; used to expand a single seed into generator state and
/// to derive independent sub-seeds for (step, head, role) tuples.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

/// xoshiro256++ with Marsaglia's polar transform for normals. Both the
/// generator and the transform are pinned here so a seed reproduces the same
/// stream everywhere; no std::random distribution (those are
/// implementation-defined) is involved.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01();

    /// Uniform integer in [0, n), unbiased via rejection. n must be >= 1.
    std::uint64_t bounded(std::uint64_t n);

    /// Standard normal draw.
    double normal();

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d);

}  // namespace stattn
