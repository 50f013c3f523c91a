// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include <stattn/layout.hpp>
#include <stattn/rng.hpp>

using stattn::LayoutSpec;
using stattn::Matrix;
using stattn::Permutation;
using stattn::TokenCoord;

TEST_CASE("coord_of splits text prefix and video tokens") {
    const LayoutSpec spec{2, 3, 4};
    CHECK(stattn::coord_of(0, spec) == TokenCoord::text(0));
    CHECK(stattn::coord_of(9, spec) == TokenCoord::video(1, 3));
    CHECK_THROWS_AS((void)stattn::coord_of(spec.seq_len(), spec), std::out_of_range);
}

TEST_CASE("index_of inverts coord_of on random specs, exhaustively") {
    stattn::Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const LayoutSpec spec{rng.bounded(8), 1 + rng.bounded(6), 1 + rng.bounded(9)};
        for (std::size_t i = 0; i < spec.seq_len(); ++i) {
            CHECK(stattn::index_of(stattn::coord_of(i, spec), spec) == i);
        }
    }
}

TEST_CASE("index_of rejects out-of-range coordinates") {
    const LayoutSpec spec{2, 3, 4};
    CHECK_THROWS_AS((void)stattn::index_of(TokenCoord::text(2), spec), std::out_of_range);
    CHECK_THROWS_AS((void)stattn::index_of(TokenCoord::video(3, 0), spec), std::out_of_range);
    CHECK_THROWS_AS((void)stattn::index_of(TokenCoord::video(0, 4), spec), std::out_of_range);
}

TEST_CASE("frame-major permutation interleaves video tokens") {
    const auto p1 = stattn::frame_major_permutation(LayoutSpec{0, 2, 3});
    CHECK(p1.forward == std::vector<std::size_t>{0, 2, 4, 1, 3, 5});

    const auto p2 = stattn::frame_major_permutation(LayoutSpec{2, 2, 2});
    CHECK(p2.forward == std::vector<std::size_t>{0, 1, 2, 4, 3, 5});
}

TEST_CASE("frame-major permutation is a bijection with correct inverse") {
    stattn::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const LayoutSpec spec{rng.bounded(5), 1 + rng.bounded(7), 1 + rng.bounded(11)};
        const auto p = stattn::frame_major_permutation(spec);
        auto sorted = p.forward;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            CHECK(sorted[i] == i);
            CHECK(p.inverse[p.forward[i]] == i);
        }
    }
}

TEST_CASE("frame-major permutation keeps offset runs contiguous") {
    const LayoutSpec spec{3, 4, 5};
    const auto p = stattn::frame_major_permutation(spec);
    for (std::size_t off = 0; off < spec.tokens_per_frame; ++off) {
        for (std::size_t f = 0; f < spec.num_frames; ++f) {
            const std::size_t token = spec.text_len + f * spec.tokens_per_frame + off;
            CHECK(p.forward[token] == spec.text_len + off * spec.num_frames + f);
        }
    }
}

TEST_CASE("row permutation round-trips and scatters as specified") {
    const LayoutSpec spec{0, 2, 3};
    const auto p = stattn::frame_major_permutation(spec);
    auto m = stattn::gaussian_matrix<double>(6, 2, 17);

    const auto identity = Permutation::identity(6);
    CHECK(stattn::apply_row_permutation(m, identity) == m);

    const auto permuted = stattn::apply_row_permutation(m, p);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(permuted(p.forward[i], j) == m(i, j));
        }
    }
    CHECK(stattn::apply_row_permutation(permuted, p.inverted()) == m);
}

TEST_CASE("labeled rows land in frame-major order") {
    // Rows labeled 0..5 under the T=0, N=2, L=3 permutation read back as
    // 0,3,1,4,2,5: a direct index chase of (f, p) -> p * N + f.
    Matrix<double> m(6, 1);
    for (std::size_t i = 0; i < 6; ++i) {
        m(i, 0) = static_cast<double>(i);
    }
    const auto p = stattn::frame_major_permutation(LayoutSpec{0, 2, 3});
    const auto permuted = stattn::apply_row_permutation(m, p);
    const std::vector<double> want = {0, 3, 1, 4, 2, 5};
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(permuted(i, 0) == want[i]);
    }
}

TEST_CASE("apply_row_permutation rejects row-count mismatches") {
    const auto p = Permutation::identity(4);
    CHECK_THROWS_AS((void)stattn::apply_row_permutation(Matrix<double>(5, 2), p),
                    std::invalid_argument);
}

TEST_CASE("from_forward rejects non-bijections") {
    CHECK_THROWS_AS((void)Permutation::from_forward({0, 0, 1}), std::invalid_argument);
    CHECK_THROWS_AS((void)Permutation::from_forward({0, 3}), std::invalid_argument);
}
