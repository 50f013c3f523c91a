// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stattn/masks.hpp"

namespace stattn {

/// Binary PGM (P5) image, one pixel per block: 255 = active, 0 = inactive.
void write_pgm(const std::string& path, const BlockMask& mask);

struct PgmImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

PgmImage read_pgm(const std::string& path);

}  // namespace stattn
