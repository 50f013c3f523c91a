// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <stattn/matrix.hpp>

#include "support/oracles.hpp"

using stattn::Matrix;

namespace {

template <typename T>
Matrix<T> from_rows(std::size_t rows, std::size_t cols, std::initializer_list<T> values) {
    Matrix<T> m(rows, cols);
    std::copy(values.begin(), values.end(), m.data.begin());
    return m;
}

}  // namespace

TEST_CASE("matmul identity leaves the other operand unchanged") {
    Matrix<double> eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    const auto b = stattn::gaussian_matrix<double>(2, 3, 11);
    CHECK(stattn::matmul(eye, b) == b);
}

TEST_CASE("matmul hand-checked 2x2 by 2x1") {
    const auto a = from_rows<double>(2, 2, {1, 2, 3, 4});
    const auto b = from_rows<double>(2, 1, {5, 6});
    const auto c = stattn::matmul(a, b);
    CHECK(c(0, 0) == 17.0);
    CHECK(c(1, 0) == 39.0);
}

TEST_CASE("matmul matches the scalar triple loop bit for bit") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto a = stattn::gaussian_matrix<double>(7, 5, seed);
        const auto b = stattn::gaussian_matrix<double>(5, 3, seed + 100);
        CHECK(stattn::matmul(a, b) == oracle::naive_matmul(a, b));

        const auto af = stattn::gaussian_matrix<float>(7, 5, seed);
        const auto bf = stattn::gaussian_matrix<float>(5, 3, seed + 100);
        CHECK(stattn::matmul(af, bf) == oracle::naive_matmul(af, bf));
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    const Matrix<double> a(2, 3), b(4, 2);
    CHECK_THROWS_AS((void)stattn::matmul(a, b), std::invalid_argument);
}

TEST_CASE("matmul chains are associative within 1e-10 on random 8x8") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = stattn::gaussian_matrix<double>(8, 8, seed * 3 + 1);
        const auto b = stattn::gaussian_matrix<double>(8, 8, seed * 3 + 2);
        const auto c = stattn::gaussian_matrix<double>(8, 8, seed * 3 + 3);
        const auto left = stattn::matmul(stattn::matmul(a, b), c);
        const auto right = stattn::matmul(a, stattn::matmul(b, c));
        CHECK(oracle::max_abs_diff(left, right) <= 1e-10);
    }
}

TEST_CASE("softmax of a constant row is uniform") {
    const auto m = from_rows<double>(1, 3, {0, 0, 0});
    const auto s = stattn::softmax_rows(m);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(s(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("softmax is stable under huge logits") {
    const auto m = from_rows<double>(1, 2, {1000.0, 1000.0 + std::log(2.0)});
    const auto s = stattn::softmax_rows(m);
    CHECK(s(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(s(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("softmax matches the naive oracle in double") {
    const auto m = stattn::gaussian_matrix<double>(4, 6, 77);
    const auto got = stattn::softmax_rows(m);
    const auto want = oracle::naive_softmax_rows(m);
    CHECK(oracle::max_abs_diff(got, want) <= 1e-12);
}

TEST_CASE("softmax row sums stay within tolerance, spreads beyond 700 included") {
    stattn::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix<float> mf(3, 128);
        Matrix<double> md(3, 128);
        for (std::size_t i = 0; i < mf.data.size(); ++i) {
            const double x = (rng.uniform01() - 0.5) * 1600.0;  // spread up to ~1600
            mf.data[i] = static_cast<float>(x);
            md.data[i] = x;
        }
        const auto sf = stattn::softmax_rows(mf);
        const auto sd = stattn::softmax_rows(md);
        for (std::size_t i = 0; i < 3; ++i) {
            double sum_f = 0.0;
            long double sum_d = 0.0L;
            for (std::size_t j = 0; j < 128; ++j) {
                sum_f += static_cast<double>(sf(i, j));
                sum_d += static_cast<long double>(sd(i, j));
            }
            CHECK(std::fabs(sum_f - 1.0) <= 1e-6);
            CHECK(std::fabs(static_cast<double>(sum_d - 1.0L)) <= 1e-12);
        }
    }
}

TEST_CASE("softmax rejects matrices without columns") {
    CHECK_THROWS_AS((void)stattn::softmax_rows(Matrix<double>(2, 0)), std::invalid_argument);
}

TEST_CASE("gaussian_matrix is deterministic per seed and differs across seeds") {
    const auto a = stattn::gaussian_matrix<double>(3, 3, 42);
    const auto b = stattn::gaussian_matrix<double>(3, 3, 42);
    const auto c = stattn::gaussian_matrix<double>(3, 3, 43);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("gaussian_matrix sample moments sit in the expected band") {
    for (std::uint64_t seed : {9u, 10u, 11u}) {
        const auto m = stattn::gaussian_matrix<double>(1000, 1, seed);
        double mean = 0.0;
        for (double x : m.data) {
            mean += x;
        }
        mean /= 1000.0;
        double var = 0.0;
        for (double x : m.data) {
            var += (x - mean) * (x - mean);
        }
        var /= 999.0;
        CHECK(mean >= -0.15);
        CHECK(mean <= 0.15);
        CHECK(var >= 0.8);
        CHECK(var <= 1.2);
    }
}

TEST_CASE("error_stats of identical matrices is zero error at the psnr cap") {
    const auto x = stattn::gaussian_matrix<double>(5, 7, 3);
    const auto st = stattn::error_stats(x, x);
    CHECK(st.mse == 0.0);
    CHECK(st.psnr_db == stattn::ErrorStats::psnr_cap_db);
    CHECK(st.max_abs_diff == 0.0);
}

TEST_CASE("error_stats gives 20 dB for peak 1 and uniform squared error 0.01") {
    Matrix<double> ref(4, 4);
    ref(0, 0) = 1.0;  // peak
    Matrix<double> test = ref;
    for (auto& x : test.data) {
        x += 0.1;
    }
    const auto st = stattn::error_stats(ref, test);
    CHECK(st.mse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(st.psnr_db == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("error_stats uses peak 1 for an all-zero reference") {
    const Matrix<double> ref(2, 2);
    Matrix<double> test(2, 2);
    test.data.assign(4, 0.1);
    const auto st = stattn::error_stats(ref, test);
    CHECK(st.psnr_db == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("error_stats matches an elementwise oracle on random pairs") {
    const auto a = stattn::gaussian_matrix<double>(6, 5, 21);
    const auto b = stattn::gaussian_matrix<double>(6, 5, 22);
    const auto st = stattn::error_stats(a, b);
    double sq = 0.0, peak = 0.0, mad = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = b.data[i] - a.data[i];
        sq += d * d;
        peak = std::max(peak, std::fabs(a.data[i]));
        mad = std::max(mad, std::fabs(d));
    }
    CHECK(st.mse == doctest::Approx(sq / 30.0).epsilon(1e-14));
    CHECK(st.max_abs_diff == mad);
    CHECK(st.psnr_db == doctest::Approx(10.0 * std::log10(peak * peak / (sq / 30.0))));
}

TEST_CASE("error_stats rejects shape mismatches") {
    CHECK_THROWS_AS((void)stattn::error_stats(Matrix<double>(2, 2), Matrix<double>(2, 3)),
                    std::invalid_argument);
}

TEST_CASE("check_finite flags NaN and infinity") {
    Matrix<double> m(2, 2);
    stattn::check_finite(m, "test");
    m(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(stattn::check_finite(m, "test"), stattn::invariant_error);
}

TEST_CASE("rng bounded draws are in range and deterministic") {
    stattn::Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.bounded(17);
        CHECK(x < 17);
        CHECK(x == b.bounded(17));
    }
    stattn::Rng c(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
