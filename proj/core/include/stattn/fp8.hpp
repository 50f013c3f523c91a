// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "stattn/matrix.hpp"

namespace stattn {

/// e4m3 limits: 1 sign, 4 exponent (bias 7), 3 mantissa bits; max normal 448,
/// smallest normal 2^-6, subnormal quantum 2^-9. The two NaN codes (0x7f,
/// 0xff) are never produced by the encoder.
inline constexpr double e4m3_max = 448.0;

/// Round-to-nearest-even onto the e4m3 grid, saturating at +-448. Rejects
/// non-finite input.
std::uint8_t e4m3_encode(double x);
double e4m3_decode(std::uint8_t code);

/// One quantized tile: codes on the e4m3 grid plus a positive per-tile scale
/// chosen so the tile's max |value| maps to the max normal magnitude 448.
/// All-zero tiles use scale 1 by convention.
struct QuantizedTile {
    std::size_t rows = 0;
    std::size_t cols = 0;
    double scale = 1.0;
    std::vector<std::uint8_t> codes;
};

template <typename T>
QuantizedTile quantize_e4m3(const Matrix<T>& tile) {
    check_finite(tile, "quantize_e4m3");
    QuantizedTile qt;
    qt.rows = tile.rows;
    qt.cols = tile.cols;
    double max_abs = 0.0;
    for (const T x : tile.data) {
        max_abs = std::max(max_abs, std::fabs(static_cast<double>(x)));
    }
    qt.scale = max_abs == 0.0 ? 1.0 : max_abs / e4m3_max;
    qt.codes.resize(tile.data.size());
    for (std::size_t i = 0; i < tile.data.size(); ++i) {
        qt.codes[i] = e4m3_encode(static_cast<double>(tile.data[i]) / qt.scale);
    }
    return qt;
}

template <typename T>
Matrix<T> dequantize_e4m3(const QuantizedTile& qt) {
    Matrix<T> out(qt.rows, qt.cols);
    for (std::size_t i = 0; i < qt.codes.size(); ++i) {
        out.data[i] = static_cast<T>(e4m3_decode(qt.codes[i]) * qt.scale);
    }
    return out;
}

/// Quantize/dequantize a matrix in tiles of tile_rows x cols (the per-block
/// granularity the sparse kernels use for q and k).
template <typename T>
Matrix<T> quantize_dequantize_rows_e4m3(const Matrix<T>& m, std::size_t tile_rows) {
    if (tile_rows == 0) {
        throw std::invalid_argument("quantize_dequantize_rows_e4m3: tile_rows must be >= 1");
    }
    Matrix<T> out(m.rows, m.cols);
    for (std::size_t r0 = 0; r0 < m.rows; r0 += tile_rows) {
        const std::size_t rows = std::min(tile_rows, m.rows - r0);
        Matrix<T> tile(rows, m.cols);
        std::copy(m.row(r0), m.row(r0) + rows * m.cols, tile.data.begin());
        const Matrix<T> back = dequantize_e4m3<T>(quantize_e4m3(tile));
        std::copy(back.data.begin(), back.data.end(), out.row(r0));
    }
    return out;
}

}  // namespace stattn
