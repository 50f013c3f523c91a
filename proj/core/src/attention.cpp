// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/attention.hpp"

#include <cmath>

namespace stattn {

SoftmaxPartial SoftmaxPartial::zero(std::size_t rows, std::size_t cols) {
    SoftmaxPartial p;
    p.rows = rows;
    p.cols = cols;
    p.acc.assign(rows * cols, 0.0);
    p.row_max.assign(rows, -std::numeric_limits<double>::infinity());
    p.row_sum.assign(rows, 0.0);
    return p;
}

void merge_partials_into(SoftmaxPartial& dst, const SoftmaxPartial& src) {
    if (dst.rows != src.rows || dst.cols != src.cols) {
        throw std::invalid_argument("merge_partials: shape mismatch");
    }
    for (std::size_t i = 0; i < dst.rows; ++i) {
        if (src.row_empty(i)) {
            continue;  // exact no-op, merging with an empty partial
        }
        double* da = dst.acc.data() + i * dst.cols;
        const double* sa = src.acc.data() + i * src.cols;
        if (dst.row_empty(i)) {
            dst.row_max[i] = src.row_max[i];
            dst.row_sum[i] = src.row_sum[i];
            std::copy(sa, sa + dst.cols, da);
            continue;
        }
        const double m = std::max(dst.row_max[i], src.row_max[i]);
        const double wa = std::exp(dst.row_max[i] - m);
        const double wb = std::exp(src.row_max[i] - m);
        dst.row_sum[i] = dst.row_sum[i] * wa + src.row_sum[i] * wb;
        for (std::size_t j = 0; j < dst.cols; ++j) {
            da[j] = da[j] * wa + sa[j] * wb;
        }
        dst.row_max[i] = m;
    }
}

SoftmaxPartial merge_partials(const SoftmaxPartial& a, const SoftmaxPartial& b) {
    SoftmaxPartial out = a;
    merge_partials_into(out, b);
    return out;
}

double resolve_scale(std::optional<double> scale, std::size_t head_dim) {
    if (scale) {
        return *scale;
    }
    return 1.0 / std::sqrt(static_cast<double>(head_dim));
}

ElementMask temporal_frame_major_reference_mask(const MaskSpec& spec, const Permutation& perm,
                                                std::size_t block_size) {
    const std::size_t s = spec.layout.seq_len();
    if (perm.size() != s) {
        throw std::invalid_argument("temporal_frame_major_reference_mask: permutation mismatch");
    }
    const BlockMask band = temporal_band_block_mask(spec, block_size);
    const Interval sink = spec.sink_columns();
    std::vector<RowSpans> spans(s);
    for (std::size_t q = 0; q < s; ++q) {
        RowSpans& row = spans[q];
        if (!sink.empty()) {
            row.push_back(sink);
        }
        const std::size_t bq = perm.forward[q] / block_size;
        for (std::size_t bk = 0; bk < band.grid_dim(); ++bk) {
            if (!band.active(bq, bk)) {
                continue;
            }
            const std::size_t c0 = bk * block_size;
            const std::size_t c1 = c0 + band.tile_cols(bk);
            for (std::size_t c = c0; c < c1; ++c) {
                const std::size_t tok = perm.inverse[c];
                row.push_back({tok, tok + 1});
            }
        }
        normalize_spans(row);
    }
    return ElementMask(s, s, std::move(spans));
}

std::uint64_t temporal_frame_major_pair_count(const MaskSpec& spec, const Permutation& perm,
                                              const BlockMask& band) {
    return band.pair_count() + temporal_sink_visit_count(spec, perm, band);
}

std::uint64_t flops_closed_form(const MaskSpec& spec, std::size_t head_dim, HeadClass kind) {
    const std::uint64_t l = spec.layout.tokens_per_frame;
    const std::uint64_t n = spec.layout.num_frames;
    const std::uint64_t d = head_dim;
    switch (kind) {
        case HeadClass::dense:
            return 4 * (l * n) * (l * n) * d;
        case HeadClass::spatial:
            return 4 * l * l * d * spec.spatial_frames * n;
        case HeadClass::temporal:
            return 4 * n * n * d * spec.temporal_budget * l;
    }
    return 0;
}

}  // namespace stattn
