// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "stattn/error.hpp"
#include "stattn/rng.hpp"

namespace stattn {

/// Dense row-major matrix. float is the benchmark precision, double the
/// oracle precision used by the equivalence tests.
template <typename T>
struct Matrix {
    static_assert(std::is_floating_point_v<T>);

    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    T* row(std::size_t i) { return data.data() + i * cols; }
    const T* row(std::size_t i) const { return data.data() + i * cols; }

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    bool operator==(const Matrix& other) const = default;
};

/// Throws invariant_error if the matrix contains a NaN or infinity.
template <typename T>
void check_finite(const Matrix<T>& m, const char* context) {
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        if (!std::isfinite(static_cast<double>(m.data[i]))) {
            throw invariant_error(std::string(context) + ": non-finite value at flat index " +
                                  std::to_string(i));
        }
    }
}

/// Standard product. The k loop in the middle means every output element is
/// accumulated over k in ascending order, identical to the scalar triple
/// loop, so results are bit-reproducible.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                    " vs " + std::to_string(b.rows) + ")");
    }
    Matrix<T> out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            const T* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

/// Per-row softmax with max subtraction; exponentials and the normalizing sum
/// are carried in double regardless of T.
template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m) {
    if (m.cols == 0) {
        throw std::invalid_argument("softmax_rows: matrix has no columns");
    }
    Matrix<T> out(m.rows, m.cols);
    std::vector<double> w(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const T* src = m.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m.cols; ++j) {
            mx = std::max(mx, static_cast<double>(src[j]));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            w[j] = std::exp(static_cast<double>(src[j]) - mx);
            sum += w[j];
        }
        T* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            dst[j] = static_cast<T>(w[j] / sum);
        }
    }
    return out;
}

/// i.i.d. standard normal entries, filled row-major from an Rng stream.
template <typename T>
Matrix<T> gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows == 0 || cols == 0) {
        throw std::invalid_argument("gaussian_matrix: rows and cols must be >= 1");
    }
    Matrix<T> out(rows, cols);
    Rng rng(seed);
    for (auto& x : out.data) {
        x = static_cast<T>(rng.normal());
    }
    return out;
}

struct ErrorStats {
    double mse = 0.0;
    double psnr_db = 0.0;
    double max_abs_diff = 0.0;

    static constexpr double psnr_cap_db = 100.0;
};

/// PSNR peak is max |reference| (attention outputs are unbounded, so there is
/// no fixed dynamic range); an all-zero reference uses peak 1. psnr_db is
/// capped at 100 dB, reached exactly when mse is zero or underflows the cap.
template <typename T>
ErrorStats error_stats(const Matrix<T>& reference, const Matrix<T>& test) {
    if (!reference.same_shape(test)) {
        throw std::invalid_argument("error_stats: shape mismatch");
    }
    ErrorStats st;
    double peak = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < reference.data.size(); ++i) {
        const double r = static_cast<double>(reference.data[i]);
        const double d = static_cast<double>(test.data[i]) - r;
        peak = std::max(peak, std::fabs(r));
        sq_sum += d * d;
        st.max_abs_diff = std::max(st.max_abs_diff, std::fabs(d));
    }
    if (peak == 0.0) {
        peak = 1.0;
    }
    st.mse = reference.data.empty() ? 0.0 : sq_sum / static_cast<double>(reference.data.size());
    if (st.mse == 0.0) {
        st.psnr_db = ErrorStats::psnr_cap_db;
    } else {
        st.psnr_db = std::min(ErrorStats::psnr_cap_db, 10.0 * std::log10(peak * peak / st.mse));
    }
    return st;
}

}  // namespace stattn
