// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/pgm.hpp"

#include <fstream>
#include <stdexcept>

namespace stattn {

void write_pgm(const std::string& path, const BlockMask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_pgm: cannot open " + path);
    }
    const std::size_t dim = mask.grid_dim();
    out << "P5\n" << dim << " " << dim << "\n255\n";
    std::vector<std::uint8_t> row(dim);
    for (std::size_t bq = 0; bq < dim; ++bq) {
        for (std::size_t bk = 0; bk < dim; ++bk) {
            row[bk] = mask.active(bq, bk) ? 255 : 0;
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(dim));
    }
    if (!out) {
        throw std::runtime_error("write_pgm: write failed for " + path);
    }
}

PgmImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_pgm: cannot open " + path);
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw std::runtime_error("read_pgm: not a binary PGM: " + path);
    }
    PgmImage img;
    std::size_t maxval = 0;
    in >> img.width >> img.height >> maxval;
    in.get();  // single whitespace after the header
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) {
        throw std::runtime_error("read_pgm: truncated image: " + path);
    }
    return img;
}

}  // namespace stattn
