// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include <stattn/attention.hpp>
#include <stattn/presets.hpp>

#include "support/oracles.hpp"

using stattn::attention_block_sparse;
using stattn::attention_dense;
using stattn::attention_masked_reference;
using stattn::BlockMask;
using stattn::ElementMask;
using stattn::LayoutSpec;
using stattn::MaskSpec;
using stattn::Matrix;

namespace {

template <typename T>
struct Qkv {
    Matrix<T> q, k, v;
};

template <typename T>
Qkv<T> random_qkv(std::size_t s, std::size_t d, std::uint64_t seed, std::size_t q_rows = 0) {
    return {stattn::gaussian_matrix<T>(q_rows == 0 ? s : q_rows, d, seed),
            stattn::gaussian_matrix<T>(s, d, seed + 1),
            stattn::gaussian_matrix<T>(s, d, seed + 2)};
}

ElementMask block_expanded(const BlockMask& bm) {
    return ElementMask::from_predicate(
        bm.seq_len(), bm.seq_len(),
        [&bm](std::size_t q, std::size_t k) { return bm.element_covered(q, k); });
}

oracle::DenseMask to_dense_mask(const ElementMask& m) {
    return oracle::dense_mask_from_predicate(
        m.rows(), m.cols(), [&m](std::size_t q, std::size_t k) { return m.test(q, k); });
}

}  // namespace

TEST_CASE("dense attention propagates constant value rows exactly") {
    const auto q = stattn::gaussian_matrix<float>(48, 16, 1);
    const auto k = stattn::gaussian_matrix<float>(48, 16, 2);
    Matrix<float> v(48, 8);
    std::vector<float> c = {0.5f, -1.25f, 3.0f, 0.0f, 2.5f, -0.125f, 7.0f, 1.0f / 3.0f};
    for (std::size_t i = 0; i < v.rows; ++i) {
        std::copy(c.begin(), c.end(), v.row(i));
    }
    const auto res = attention_dense(q, k, v);
    for (std::size_t i = 0; i < res.out.rows; ++i) {
        for (std::size_t j = 0; j < res.out.cols; ++j) {
            CHECK(res.out(i, j) == c[j]);  // bit-exact in the benchmark precision
        }
    }
}

TEST_CASE("single-key attention returns v") {
    const auto q = stattn::gaussian_matrix<double>(1, 4, 5);
    const auto k = stattn::gaussian_matrix<double>(1, 4, 6);
    const auto v = stattn::gaussian_matrix<double>(1, 4, 7);
    const auto res = attention_dense(q, k, v);
    CHECK(res.out == v);
}

TEST_CASE("dense attention matches the naive oracle in double") {
    const auto [q, k, v] = random_qkv<double>(64, 16, 11);
    const auto res = attention_dense(q, k, v);
    const auto want = oracle::naive_attention(q, k, v, 0.25);  // 1/sqrt(16)
    CHECK(oracle::max_abs_diff(res.out, want) <= 1e-12);
    CHECK(res.flops == 64ull * 64 * 4 * 16);
}

TEST_CASE("dense attention accepts sampled (rectangular) query sets") {
    const auto [q, k, v] = random_qkv<double>(32, 8, 13, 5);
    const auto res = attention_dense(q, k, v);
    CHECK(res.out.rows == 5);
    CHECK(res.flops == 5ull * 32 * 4 * 8);
}

TEST_CASE("masked reference with an all-true mask equals dense attention") {
    const auto [q, k, v] = random_qkv<double>(40, 8, 17);
    const auto dense = attention_dense(q, k, v);
    const auto masked =
        attention_masked_reference(q, k, v, ElementMask::all_active(40, 40));
    CHECK(oracle::max_abs_diff(dense.out, masked.out) <= 1e-12);
    CHECK(dense.flops == masked.flops);
}

TEST_CASE("masked reference with a diagonal mask returns v exactly") {
    const auto [q, k, v] = random_qkv<double>(24, 8, 23);
    const auto diag = ElementMask::from_predicate(
        24, 24, [](std::size_t a, std::size_t b) { return a == b; });
    const auto res = attention_masked_reference(q, k, v, diag);
    CHECK(res.out == v);
}

TEST_CASE("masked reference matches the naive masked oracle on the spatial pattern") {
    const MaskSpec spec{LayoutSpec{16, 3, 48}, 1, 1, true, true};
    const std::size_t s = spec.layout.seq_len();
    REQUIRE(s == 160);
    const auto mask = ElementMask::from_spans(s, s, stattn::spatial_span_fn(spec));
    const auto [q, k, v] = random_qkv<double>(s, 16, 29);
    const auto res = attention_masked_reference(q, k, v, mask);
    const auto want = oracle::naive_masked_attention(q, k, v, to_dense_mask(mask), 0.25);
    CHECK(oracle::max_abs_diff(res.out, want) <= 1e-12);
    CHECK(res.flops == mask.active_count() * 4 * 16);
}

TEST_CASE("masked reference rejects fully masked rows, naming the row") {
    const auto [q, k, v] = random_qkv<double>(8, 4, 31);
    auto mask = ElementMask::from_predicate(
        8, 8, [](std::size_t a, std::size_t) { return a != 5; });
    try {
        (void)attention_masked_reference(q, k, v, mask);
        FAIL("expected invariant_error");
    } catch (const stattn::invariant_error& e) {
        CHECK(std::string(e.what()).find('5') != std::string::npos);
    }
}

TEST_CASE("block-sparse with all blocks active equals dense, flops included") {
    const auto [q, k, v] = random_qkv<double>(96, 16, 37);
    const auto block = stattn::build_block_mask(ElementMask::all_active(96, 96), 32);
    const auto res = attention_block_sparse(q, k, v, block);
    const auto dense = attention_dense(q, k, v);
    CHECK(oracle::max_abs_diff(res.out, dense.out) <= 1e-12);
    CHECK(res.flops == dense.flops);
}

TEST_CASE("block-diagonal mask at one block per frame is per-frame attention") {
    const std::size_t l = 16, n = 4, s = l * n;
    const auto [q, k, v] = random_qkv<double>(s, 8, 41);
    BlockMask mask(s, l);
    for (std::size_t b = 0; b < n; ++b) {
        mask.set(b, b);
    }
    const auto res = attention_block_sparse(q, k, v, mask);
    for (std::size_t f = 0; f < n; ++f) {
        Matrix<double> qf(l, 8), kf(l, 8), vf(l, 8);
        for (std::size_t r = 0; r < l; ++r) {
            std::copy(q.row(f * l + r), q.row(f * l + r) + 8, qf.row(r));
            std::copy(k.row(f * l + r), k.row(f * l + r) + 8, kf.row(r));
            std::copy(v.row(f * l + r), v.row(f * l + r) + 8, vf.row(r));
        }
        const auto per_frame = oracle::naive_attention(qf, kf, vf, 1.0 / std::sqrt(8.0));
        for (std::size_t r = 0; r < l; ++r) {
            for (std::size_t j = 0; j < 8; ++j) {
                CHECK(std::fabs(res.out(f * l + r, j) - per_frame(r, j)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("block-sparse matches the block-expanded masked reference on random masks") {
    stattn::Rng rng(43);
    const std::size_t s = 256, b = 32, d = 16;
    BlockMask mask(s, b);
    for (std::size_t bq = 0; bq < mask.grid_dim(); ++bq) {
        bool any = false;
        for (std::size_t bk = 0; bk < mask.grid_dim(); ++bk) {
            if (rng.uniform01() < 0.5) {
                mask.set(bq, bk);
                any = true;
            }
        }
        if (!any) {
            mask.set(bq, rng.bounded(mask.grid_dim()));
        }
    }
    const auto expanded = block_expanded(mask);

    const auto [qd, kd, vd] = random_qkv<double>(s, d, 47);
    const auto sparse_d = attention_block_sparse(qd, kd, vd, mask);
    const auto ref_d = attention_masked_reference(qd, kd, vd, expanded);
    CHECK(oracle::max_abs_diff(sparse_d.out, ref_d.out) <= 1e-12);
    CHECK(sparse_d.flops == ref_d.flops);

    const auto [qf, kf, vf] = random_qkv<float>(s, d, 47);
    const auto sparse_f = attention_block_sparse(qf, kf, vf, mask);
    const auto ref_f = attention_masked_reference(qf, kf, vf, expanded);
    CHECK(oracle::max_abs_diff(sparse_f.out, ref_f.out) <= 1e-5);
}

TEST_CASE("block-sparse rejects empty block rows") {
    const auto [q, k, v] = random_qkv<double>(8, 4, 53);
    BlockMask mask(8, 4);
    mask.set(0, 0);
    CHECK_THROWS_AS((void)attention_block_sparse(q, k, v, mask), stattn::invariant_error);
}

TEST_CASE("merging with an empty partial is an exact no-op") {
    const auto [q, k, v] = random_qkv<double>(16, 4, 59);
    stattn::SoftmaxPartial p = stattn::SoftmaxPartial::zero(16, 4);
    BlockMask all(16, 16);
    all.set(0, 0);
    stattn::detail::block_sparse_accumulate(p, q, k, v, all, 0.5);
    const auto merged = stattn::merge_partials(p, stattn::SoftmaxPartial::zero(16, 4));
    CHECK(merged.acc == p.acc);
    CHECK(merged.row_max == p.row_max);
    CHECK(merged.row_sum == p.row_sum);
    const auto merged2 = stattn::merge_partials(stattn::SoftmaxPartial::zero(16, 4), p);
    CHECK(merged2.acc == p.acc);
}

TEST_CASE("split keys merge back to dense attention") {
    const std::size_t s = 64, d = 8;
    const auto [q, k, v] = random_qkv<double>(s, d, 61);
    const double scale = stattn::resolve_scale(std::nullopt, d);

    // Halves as two block-sparse passes over disjoint key block columns.
    BlockMask lo(s, 8), hi(s, 8);
    for (std::size_t bq = 0; bq < lo.grid_dim(); ++bq) {
        for (std::size_t bk = 0; bk < lo.grid_dim(); ++bk) {
            (bk < lo.grid_dim() / 2 ? lo : hi).set(bq, bk);
        }
    }
    auto pa = stattn::SoftmaxPartial::zero(s, d);
    auto pb = stattn::SoftmaxPartial::zero(s, d);
    stattn::detail::block_sparse_accumulate(pa, q, k, v, lo, scale);
    stattn::detail::block_sparse_accumulate(pb, q, k, v, hi, scale);
    const auto merged = stattn::finalize_partial<double>(stattn::merge_partials(pa, pb));
    const auto dense = attention_dense(q, k, v);
    CHECK(oracle::max_abs_diff(merged, dense.out) <= 1e-12);
}

TEST_CASE("three-way merges agree across association orders") {
    const std::size_t s = 48, d = 8;
    const auto [q, k, v] = random_qkv<double>(s, d, 67);
    const double scale = stattn::resolve_scale(std::nullopt, d);
    std::vector<stattn::SoftmaxPartial> parts;
    for (int piece = 0; piece < 3; ++piece) {
        BlockMask mask(s, 8);
        for (std::size_t bq = 0; bq < mask.grid_dim(); ++bq) {
            for (std::size_t bk = 0; bk < mask.grid_dim(); ++bk) {
                if (static_cast<int>(bk) % 3 == piece) {
                    mask.set(bq, bk);
                }
            }
        }
        auto p = stattn::SoftmaxPartial::zero(s, d);
        stattn::detail::block_sparse_accumulate(p, q, k, v, mask, scale);
        parts.push_back(std::move(p));
    }
    const auto left = stattn::finalize_partial<double>(
        stattn::merge_partials(stattn::merge_partials(parts[0], parts[1]), parts[2]));
    const auto right = stattn::finalize_partial<double>(
        stattn::merge_partials(parts[0], stattn::merge_partials(parts[1], parts[2])));
    CHECK(oracle::max_abs_diff(left, right) <= 1e-12);
}

TEST_CASE("temporal frame-major path degenerates to dense with full band, no sinks") {
    // Single-token frames: the zero-width slash already reaches every offset.
    const MaskSpec single{LayoutSpec{0, 12, 1}, 1, 12, false, false};
    REQUIRE(single.slash_half_width() >= single.layout.tokens_per_frame - 1);
    {
        const auto [q, k, v] = random_qkv<double>(12, 8, 70);
        const auto perm = stattn::frame_major_permutation(single.layout);
        const auto res = stattn::attention_temporal_frame_major(q, k, v, single, perm,
                                                                std::size_t{4});
        CHECK(oracle::max_abs_diff(res.out, attention_dense(q, k, v).out) <= 1e-12);
    }

    // Maximal budget plus a block covering the whole grid: the band expands
    // to full attention at block granularity.
    const MaskSpec spec{LayoutSpec{0, 3, 8}, 1, 24, false, false};
    const std::size_t s = spec.layout.seq_len();
    const auto [q, k, v] = random_qkv<double>(s, 8, 71);
    const auto perm = stattn::frame_major_permutation(spec.layout);
    const auto res = stattn::attention_temporal_frame_major(q, k, v, spec, perm, s);
    const auto dense = attention_dense(q, k, v);
    CHECK(oracle::max_abs_diff(res.out, dense.out) <= 1e-12);
    CHECK(res.flops == dense.flops);
}

TEST_CASE("temporal frame-major path equals its token-major reference mask") {
    const MaskSpec spec{LayoutSpec{4, 3, 8}, 1, 3, true, true};
    const std::size_t s = spec.layout.seq_len();
    const auto perm = stattn::frame_major_permutation(spec.layout);
    for (std::uint64_t seed : {73u, 79u, 83u}) {
        const auto [q, k, v] = random_qkv<double>(s, 8, seed);
        const auto res =
            stattn::attention_temporal_frame_major(q, k, v, spec, perm, std::size_t{4});
        const auto ref_mask = stattn::temporal_frame_major_reference_mask(spec, perm, 4);
        const auto ref = attention_masked_reference(q, k, v, ref_mask);
        CHECK(oracle::max_abs_diff(res.out, ref.out) <= 1e-12);
        CHECK(res.flops < attention_dense(q, k, v).flops);

        // The flops the kernel counted match the pair accounting.
        const auto band = stattn::temporal_band_block_mask(spec, 4);
        CHECK(res.flops ==
              stattn::temporal_frame_major_pair_count(spec, perm, band) * 4 * 8);
    }
}

TEST_CASE("temporal frame-major handles sink-covered-by-band overlap exactly") {
    // Wide band over few offsets makes many band blocks include first-frame
    // columns; the sink pass must skip exactly those.
    const MaskSpec spec{LayoutSpec{2, 2, 6}, 1, 12, true, true};
    const std::size_t s = spec.layout.seq_len();
    const auto perm = stattn::frame_major_permutation(spec.layout);
    const auto [q, k, v] = random_qkv<double>(s, 4, 89);
    const auto res = stattn::attention_temporal_frame_major(q, k, v, spec, perm,
                                                            std::size_t{4});
    const auto ref_mask = stattn::temporal_frame_major_reference_mask(spec, perm, 4);
    const auto ref = attention_masked_reference(q, k, v, ref_mask);
    CHECK(oracle::max_abs_diff(res.out, ref.out) <= 1e-12);
}

TEST_CASE("oracle chain holds on random layouts in both precisions") {
    stattn::Rng rng(97);
    for (int trial = 0; trial < 12; ++trial) {
        const LayoutSpec layout{rng.bounded(6), 2 + rng.bounded(4), 2 + rng.bounded(24)};
        const std::size_t s = layout.seq_len();
        const MaskSpec spec{layout, 1 + rng.bounded(layout.num_frames),
                            1 + rng.bounded(layout.video_len()), rng.bounded(2) == 0,
                            rng.bounded(2) == 0};
        const std::size_t b = std::size_t{1} << rng.bounded(5);
        const auto block = stattn::build_block_mask(s, b, stattn::spatial_span_fn(spec));
        const auto expanded = block_expanded(block);
        const std::size_t d = 4 + 4 * rng.bounded(3);
        const std::uint64_t seed = rng.next_u64();

        const auto [qd, kd, vd] = random_qkv<double>(s, d, seed);
        const auto sparse = attention_block_sparse(qd, kd, vd, block);
        const auto ref = attention_masked_reference(qd, kd, vd, expanded);
        const auto naive = oracle::naive_masked_attention(
            qd, kd, vd, to_dense_mask(expanded), stattn::resolve_scale(std::nullopt, d));
        CHECK(oracle::max_abs_diff(sparse.out, ref.out) <= 1e-12);
        CHECK(oracle::max_abs_diff(ref.out, naive) <= 1e-12);

        const auto [qf, kf, vf] = random_qkv<float>(s, d, seed);
        const auto sparse_f = attention_block_sparse(qf, kf, vf, block);
        const auto ref_f = attention_masked_reference(qf, kf, vf, expanded);
        CHECK(oracle::max_abs_diff(sparse_f.out, ref_f.out) <= 1e-5);
    }
}

TEST_CASE("attention is permutation-equivariant") {
    stattn::Rng rng(101);
    const std::size_t s = 96, d = 8;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::size_t> fwd(s);
        std::iota(fwd.begin(), fwd.end(), std::size_t{0});
        for (std::size_t i = 0; i + 1 < s; ++i) {
            std::swap(fwd[i], fwd[i + rng.bounded(s - i)]);
        }
        const auto perm = stattn::Permutation::from_forward(fwd);
        const std::uint64_t seed = rng.next_u64();

        const auto [qd, kd, vd] = random_qkv<double>(s, d, seed);
        const auto direct = attention_dense(qd, kd, vd);
        const auto permuted = attention_dense(stattn::apply_row_permutation(qd, perm),
                                              stattn::apply_row_permutation(kd, perm),
                                              stattn::apply_row_permutation(vd, perm));
        const auto back = stattn::apply_row_permutation(permuted.out, perm.inverted());
        CHECK(oracle::max_abs_diff(back, direct.out) <= 1e-12);

        const auto [qf, kf, vf] = random_qkv<float>(s, d, seed);
        const auto direct_f = attention_dense(qf, kf, vf);
        const auto permuted_f = attention_dense(stattn::apply_row_permutation(qf, perm),
                                                stattn::apply_row_permutation(kf, perm),
                                                stattn::apply_row_permutation(vf, perm));
        const auto back_f = stattn::apply_row_permutation(permuted_f.out, perm.inverted());
        CHECK(oracle::max_abs_diff(back_f, direct_f.out) <= 1e-6);
    }
}

TEST_CASE("constant value rows survive any mask with non-empty rows") {
    const MaskSpec spec{LayoutSpec{2, 3, 6}, 2, 4, true, true};
    const std::size_t s = spec.layout.seq_len();
    const auto q = stattn::gaussian_matrix<float>(s, 8, 103);
    const auto k = stattn::gaussian_matrix<float>(s, 8, 104);
    Matrix<float> v(s, 4);
    const std::vector<float> c = {1.5f, -2.0f, 0.25f, 5.0f};
    for (std::size_t i = 0; i < s; ++i) {
        std::copy(c.begin(), c.end(), v.row(i));
    }
    const auto block = stattn::build_block_mask(s, 4, stattn::temporal_span_fn(spec));
    const auto res = attention_block_sparse(q, k, v, block);
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(res.out(i, j) == c[j]);
        }
    }
}

TEST_CASE("qk_norm examples") {
    Matrix<double> ones(1, 4, 1.0);
    const auto n1 = stattn::qk_norm(ones, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(n1(0, j) == doctest::Approx(1.0).epsilon(1e-12));
    }

    Matrix<double> row(1, 2);
    row(0, 0) = 3.0;
    row(0, 1) = 4.0;
    const auto n2 = stattn::qk_norm(row, 0.0);
    CHECK(n2(0, 0) == doctest::Approx(3.0 / std::sqrt(12.5)).epsilon(1e-12));
    CHECK(n2(0, 1) == doctest::Approx(4.0 / std::sqrt(12.5)).epsilon(1e-12));

    const auto x = stattn::gaussian_matrix<double>(10, 16, 107);
    const auto nx = stattn::qk_norm(x);
    for (std::size_t i = 0; i < nx.rows; ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < nx.cols; ++j) {
            sq += nx(i, j) * nx(i, j);
        }
        CHECK(std::sqrt(sq / 16.0) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("rope rotates pairs and preserves their norms") {
    const auto x = stattn::gaussian_matrix<double>(6, 8, 109);
    std::vector<double> zero(6, 0.0);
    CHECK(stattn::rope(x, zero) == x);

    std::vector<double> pos = {0, 1, 2, 3, 4, 5};
    const auto r = stattn::rope(x, pos);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t t = 0; t < 4; ++t) {
            const double before =
                std::hypot(x(i, 2 * t), x(i, 2 * t + 1));
            const double after = std::hypot(r(i, 2 * t), r(i, 2 * t + 1));
            CHECK(after == doctest::Approx(before).epsilon(1e-6));
        }
    }

    Matrix<double> unit(1, 2);
    unit(0, 0) = 1.0;
    const std::vector<double> quarter = {std::acos(-1.0) / 2.0};
    const auto rotated = stattn::rope(unit, quarter, 123.0);
    CHECK(rotated(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rotated(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)stattn::rope(Matrix<double>(2, 3), std::vector<double>(2, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("closed-form flops match the stated arithmetic") {
    const MaskSpec tiny{LayoutSpec{0, 2, 4}, 1, 1, true, true};
    CHECK(stattn::flops_closed_form(tiny, 8, stattn::HeadClass::dense) == 2048);

    const MaskSpec hun = stattn::find_preset("hunyuanvideo")->mask_spec();
    const double dense =
        static_cast<double>(stattn::flops_closed_form(hun, 128, stattn::HeadClass::dense));
    const double spatial =
        static_cast<double>(stattn::flops_closed_form(hun, 128, stattn::HeadClass::spatial));
    const double temporal =
        static_cast<double>(stattn::flops_closed_form(hun, 128, stattn::HeadClass::temporal));
    CHECK(spatial / dense == doctest::Approx(10.0 / 33.0).epsilon(1e-12));
    CHECK(temporal / dense == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("counted flops of aligned sink-free masks match the closed form") {
    // c_s = 1 with the block size dividing the frame length: block-diagonal,
    // no boundary or rounding slack at all.
    const MaskSpec spec{LayoutSpec{0, 4, 32}, 1, 1, false, false};
    const std::size_t s = spec.layout.seq_len();
    const auto block = stattn::build_block_mask(s, 16, stattn::spatial_span_fn(spec));
    const auto [q, k, v] = random_qkv<double>(s, 8, 113);
    const auto res = attention_block_sparse(q, k, v, block);
    CHECK(res.flops == stattn::flops_closed_form(spec, 8, stattn::HeadClass::spatial));

    // Wider window at mini scale: counted stays within the block-rounding
    // slack of the closed form.
    const MaskSpec wide{LayoutSpec{0, 8, 32}, 4, 1, false, false};
    const std::size_t s2 = wide.layout.seq_len();
    const auto block2 = stattn::build_block_mask(s2, 16, stattn::spatial_span_fn(wide));
    const auto [q2, k2, v2] = random_qkv<double>(s2, 8, 114);
    const auto res2 = attention_block_sparse(q2, k2, v2, block2);
    const auto closed = stattn::flops_closed_form(wide, 8, stattn::HeadClass::spatial);
    const std::uint64_t slack = 2ull * 16 * s2 * 4 * 8;
    CHECK(res2.flops >= closed - std::min(closed, slack));
    CHECK(res2.flops <= closed + slack);
}
