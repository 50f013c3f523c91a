// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/masks.hpp"

#include <algorithm>
#include <stdexcept>

namespace stattn {

const char* to_string(HeadClass c) {
    switch (c) {
        case HeadClass::spatial:
            return "spatial";
        case HeadClass::temporal:
            return "temporal";
        case HeadClass::dense:
            return "dense";
    }
    return "?";
}

HeadClass head_class_from_string(const std::string& s) {
    if (s == "spatial") return HeadClass::spatial;
    if (s == "temporal") return HeadClass::temporal;
    if (s == "dense") return HeadClass::dense;
    throw std::invalid_argument("unknown head class: " + s);
}

void normalize_spans(RowSpans& spans) {
    spans.erase(std::remove_if(spans.begin(), spans.end(),
                               [](const Interval& iv) { return iv.empty(); }),
                spans.end());
    std::sort(spans.begin(), spans.end(),
              [](const Interval& a, const Interval& b) { return a.begin < b.begin; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        if (out > 0 && spans[i].begin <= spans[out - 1].end) {
            spans[out - 1].end = std::max(spans[out - 1].end, spans[i].end);
        } else {
            spans[out++] = spans[i];
        }
    }
    spans.resize(out);
}

bool spans_contain(const RowSpans& spans, std::size_t k) {
    auto it = std::upper_bound(spans.begin(), spans.end(), k,
                               [](std::size_t v, const Interval& iv) { return v < iv.begin; });
    return it != spans.begin() && k < std::prev(it)->end;
}

std::uint64_t spans_active_count(const RowSpans& spans) {
    std::uint64_t n = 0;
    for (const auto& iv : spans) {
        n += iv.length();
    }
    return n;
}

std::size_t MaskSpec::slash_half_width() const {
    const std::size_t per_frame = (temporal_budget + layout.num_frames - 1) / layout.num_frames;
    return (per_frame - 1) / 2;
}

Interval MaskSpec::sink_columns() const {
    const std::size_t t = layout.text_len;
    const std::size_t lo = include_text ? 0 : t;
    const std::size_t hi = include_first_frame ? t + layout.tokens_per_frame : t;
    return {lo, std::max(lo, hi)};
}

void MaskSpec::validate() const {
    layout.validate();
    if (spatial_frames < 1 || spatial_frames > layout.num_frames) {
        throw std::invalid_argument("MaskSpec: spatial_frames must be in [1, num_frames]");
    }
    if (temporal_budget < 1 || temporal_budget > layout.video_len()) {
        throw std::invalid_argument("MaskSpec: temporal_budget must be in [1, num_frames * tokens_per_frame]");
    }
}

namespace {

void check_pair_range(const MaskSpec& spec, std::size_t q, std::size_t k) {
    if (q >= spec.layout.seq_len() || k >= spec.layout.seq_len()) {
        throw std::out_of_range("mask predicate: index out of range");
    }
}

bool in_sink(const MaskSpec& spec, std::size_t k) {
    const Interval sink = spec.sink_columns();
    return k >= sink.begin && k < sink.end;
}

// First attended frame of the spatial window. The window slides at the
// sequence ends so every query keeps exactly spatial_frames frames; with a
// hard clip the c_s = N case would not degenerate to full attention and the
// video-region density would fall short of spatial_frames / num_frames.
std::size_t spatial_window_start(const MaskSpec& spec, std::size_t frame) {
    const std::size_t back = spec.window_back();
    const std::size_t start = frame > back ? frame - back : 0;
    return std::min(start, spec.layout.num_frames - spec.spatial_frames);
}

}  // namespace

bool spatial_predicate(const MaskSpec& spec, std::size_t q, std::size_t k) {
    check_pair_range(spec, q, k);
    const std::size_t t = spec.layout.text_len;
    if (q < t) {
        return true;  // text rows attend densely
    }
    if (in_sink(spec, k)) {
        return true;
    }
    if (k < t) {
        return false;
    }
    const std::size_t l = spec.layout.tokens_per_frame;
    const std::size_t fk = (k - t) / l;
    const std::size_t start = spatial_window_start(spec, (q - t) / l);
    return fk >= start && fk < start + spec.spatial_frames;
}

bool temporal_predicate(const MaskSpec& spec, std::size_t q, std::size_t k) {
    check_pair_range(spec, q, k);
    const std::size_t t = spec.layout.text_len;
    if (q < t) {
        return true;
    }
    if (in_sink(spec, k)) {
        return true;
    }
    if (k < t) {
        return false;
    }
    const std::size_t l = spec.layout.tokens_per_frame;
    const std::size_t pq = (q - t) % l;
    const std::size_t pk = (k - t) % l;
    const std::size_t w = spec.slash_half_width();
    return pk + w >= pq && pk <= pq + w;
}

RowSpansFn spatial_span_fn(const MaskSpec& spec) {
    spec.validate();
    return [spec](std::size_t q) {
        const LayoutSpec& lay = spec.layout;
        RowSpans spans;
        if (q < lay.text_len) {
            spans.push_back({0, lay.seq_len()});
            return spans;
        }
        const Interval sink = spec.sink_columns();
        if (!sink.empty()) {
            spans.push_back(sink);
        }
        const std::size_t l = lay.tokens_per_frame;
        const std::size_t f0 = spatial_window_start(spec, (q - lay.text_len) / l);
        spans.push_back({lay.text_len + f0 * l,
                         lay.text_len + (f0 + spec.spatial_frames) * l});
        normalize_spans(spans);
        return spans;
    };
}

RowSpansFn temporal_span_fn(const MaskSpec& spec) {
    spec.validate();
    return [spec](std::size_t q) {
        const LayoutSpec& lay = spec.layout;
        RowSpans spans;
        if (q < lay.text_len) {
            spans.push_back({0, lay.seq_len()});
            return spans;
        }
        const Interval sink = spec.sink_columns();
        if (!sink.empty()) {
            spans.push_back(sink);
        }
        const std::size_t l = lay.tokens_per_frame;
        const std::size_t w = spec.slash_half_width();
        const std::size_t pq = (q - lay.text_len) % l;
        const std::size_t p0 = pq > w ? pq - w : 0;
        const std::size_t p1 = std::min(l - 1, pq + w);
        for (std::size_t f = 0; f < lay.num_frames; ++f) {
            const std::size_t base = lay.text_len + f * l;
            spans.push_back({base + p0, base + p1 + 1});
        }
        normalize_spans(spans);
        return spans;
    };
}

RowSpansFn temporal_core_span_fn_frame_major(const MaskSpec& spec) {
    spec.validate();
    return [spec](std::size_t r) {
        const LayoutSpec& lay = spec.layout;
        const std::size_t t = lay.text_len;
        const std::size_t n = lay.num_frames;
        const std::size_t l = lay.tokens_per_frame;
        const std::size_t s = lay.seq_len();
        RowSpans spans;
        if (r < t) {
            // Dense text row over the non-sink columns.
            if (!spec.include_text && t > 0) {
                spans.push_back({0, t});
            }
            if (spec.include_first_frame) {
                // Everything except the frame-major images of frame 0, which
                // sit at t + p * n.
                for (std::size_t p = 0; p < l; ++p) {
                    spans.push_back({t + p * n + 1, t + (p + 1) * n});
                }
            } else {
                spans.push_back({t, s});
            }
            normalize_spans(spans);
            return spans;
        }
        const std::size_t pq = (r - t) / n;
        const std::size_t w = spec.slash_half_width();
        const std::size_t p0 = pq > w ? pq - w : 0;
        const std::size_t p1 = std::min(l - 1, pq + w);
        const std::size_t frame_lo = spec.include_first_frame ? 1 : 0;
        if (frame_lo < n) {
            for (std::size_t c = p0; c <= p1; ++c) {
                spans.push_back({t + c * n + frame_lo, t + (c + 1) * n});
            }
        }
        normalize_spans(spans);
        return spans;
    };
}

RowSpansFn temporal_span_fn_frame_major(const MaskSpec& spec) {
    spec.validate();
    return [spec](std::size_t r) {
        const LayoutSpec& lay = spec.layout;
        const std::size_t t = lay.text_len;
        const std::size_t n = lay.num_frames;
        const std::size_t l = lay.tokens_per_frame;
        RowSpans spans;
        if (r < t) {
            spans.push_back({0, lay.seq_len()});
            return spans;
        }
        if (spec.include_text && t > 0) {
            spans.push_back({0, t});
        }
        if (spec.include_first_frame) {
            for (std::size_t p = 0; p < l; ++p) {
                spans.push_back({t + p * n, t + p * n + 1});
            }
        }
        const std::size_t pq = (r - t) / n;
        const std::size_t w = spec.slash_half_width();
        const std::size_t p0 = pq > w ? pq - w : 0;
        const std::size_t p1 = std::min(l - 1, pq + w);
        for (std::size_t c = p0; c <= p1; ++c) {
            spans.push_back({t + c * n, t + (c + 1) * n});
        }
        normalize_spans(spans);
        return spans;
    };
}

ElementMask::ElementMask(std::size_t rows, std::size_t cols, std::vector<RowSpans> spans)
    : rows_(rows), cols_(cols), spans_(std::move(spans)) {
    if (spans_.size() != rows_) {
        throw std::invalid_argument("ElementMask: span count does not match row count");
    }
    for (auto& row : spans_) {
        normalize_spans(row);
        if (!row.empty() && row.back().end > cols_) {
            throw std::invalid_argument("ElementMask: span exceeds column count");
        }
        active_count_ += spans_active_count(row);
    }
}

ElementMask ElementMask::from_spans(std::size_t rows, std::size_t cols, const RowSpansFn& fn) {
    std::vector<RowSpans> spans(rows);
    for (std::size_t q = 0; q < rows; ++q) {
        spans[q] = fn(q);
    }
    return ElementMask(rows, cols, std::move(spans));
}

ElementMask ElementMask::from_predicate(
    std::size_t rows, std::size_t cols,
    const std::function<bool(std::size_t, std::size_t)>& predicate) {
    std::vector<RowSpans> spans(rows);
    for (std::size_t q = 0; q < rows; ++q) {
        RowSpans& row = spans[q];
        std::size_t k = 0;
        while (k < cols) {
            if (predicate(q, k)) {
                std::size_t end = k + 1;
                while (end < cols && predicate(q, end)) {
                    ++end;
                }
                row.push_back({k, end});
                k = end;
            } else {
                ++k;
            }
        }
    }
    return ElementMask(rows, cols, std::move(spans));
}

ElementMask ElementMask::all_active(std::size_t rows, std::size_t cols) {
    std::vector<RowSpans> spans(rows, RowSpans{{0, cols}});
    return ElementMask(rows, cols, std::move(spans));
}

bool ElementMask::test(std::size_t q, std::size_t k) const {
    if (q >= rows_ || k >= cols_) {
        throw std::out_of_range("ElementMask::test: index out of range");
    }
    return spans_contain(spans_[q], k);
}

double ElementMask::density() const {
    if (rows_ == 0 || cols_ == 0) {
        return 0.0;
    }
    return static_cast<double>(active_count_) /
           (static_cast<double>(rows_) * static_cast<double>(cols_));
}

std::optional<std::size_t> ElementMask::first_empty_row() const {
    for (std::size_t q = 0; q < rows_; ++q) {
        if (spans_[q].empty()) {
            return q;
        }
    }
    return std::nullopt;
}

ElementMask ElementMask::select_rows(std::span<const std::size_t> row_ids) const {
    std::vector<RowSpans> spans;
    spans.reserve(row_ids.size());
    for (const std::size_t q : row_ids) {
        if (q >= rows_) {
            throw std::out_of_range("ElementMask::select_rows: row out of range");
        }
        spans.push_back(spans_[q]);
    }
    return ElementMask(row_ids.size(), cols_, std::move(spans));
}

ElementMask ElementMask::conjugate(const Permutation& perm) const {
    if (perm.size() != rows_ || rows_ != cols_) {
        throw std::invalid_argument("ElementMask::conjugate: permutation size mismatch");
    }
    std::vector<RowSpans> spans(rows_);
    std::vector<std::size_t> cols;
    for (std::size_t q = 0; q < rows_; ++q) {
        cols.clear();
        for (const auto& iv : spans_[q]) {
            for (std::size_t k = iv.begin; k < iv.end; ++k) {
                cols.push_back(perm.forward[k]);
            }
        }
        std::sort(cols.begin(), cols.end());
        RowSpans& out = spans[perm.forward[q]];
        for (std::size_t i = 0; i < cols.size();) {
            std::size_t j = i + 1;
            while (j < cols.size() && cols[j] == cols[j - 1] + 1) {
                ++j;
            }
            out.push_back({cols[i], cols[j - 1] + 1});
            i = j;
        }
    }
    return ElementMask(rows_, cols_, std::move(spans));
}

BlockMask::BlockMask(std::size_t seq_len, std::size_t block_size)
    : seq_len_(seq_len),
      block_size_(block_size),
      grid_dim_((seq_len + block_size - 1) / block_size),
      grid_(grid_dim_ * grid_dim_, 0) {
    if (seq_len == 0 || block_size == 0) {
        throw std::invalid_argument("BlockMask: seq_len and block_size must be >= 1");
    }
}

void BlockMask::set(std::size_t bq, std::size_t bk) {
    std::uint8_t& cell = grid_[bq * grid_dim_ + bk];
    if (!cell) {
        cell = 1;
        ++active_block_count_;
    }
}

std::size_t BlockMask::tile_rows(std::size_t bq) const {
    const std::size_t begin = bq * block_size_;
    return std::min(block_size_, seq_len_ - begin);
}

std::size_t BlockMask::tile_cols(std::size_t bk) const {
    return tile_rows(bk);
}

std::uint64_t BlockMask::pair_count() const {
    std::uint64_t pairs = 0;
    for (std::size_t bq = 0; bq < grid_dim_; ++bq) {
        const std::uint64_t rows = tile_rows(bq);
        for (std::size_t bk = 0; bk < grid_dim_; ++bk) {
            if (active(bq, bk)) {
                pairs += rows * tile_cols(bk);
            }
        }
    }
    return pairs;
}

double BlockMask::block_density() const {
    return static_cast<double>(active_block_count_) / static_cast<double>(grid_.size());
}

double BlockMask::covered_pair_fraction() const {
    return static_cast<double>(pair_count()) /
           (static_cast<double>(seq_len_) * static_cast<double>(seq_len_));
}

std::optional<std::size_t> BlockMask::first_empty_block_row() const {
    for (std::size_t bq = 0; bq < grid_dim_; ++bq) {
        bool any = false;
        for (std::size_t bk = 0; bk < grid_dim_ && !any; ++bk) {
            any = active(bq, bk);
        }
        if (!any) {
            return bq;
        }
    }
    return std::nullopt;
}

BlockMask build_block_mask(std::size_t seq_len, std::size_t block_size, const RowSpansFn& fn) {
    BlockMask mask(seq_len, block_size);
    for (std::size_t q = 0; q < seq_len; ++q) {
        const std::size_t bq = q / block_size;
        for (const auto& iv : fn(q)) {
            if (iv.empty()) {
                continue;
            }
            const std::size_t b0 = iv.begin / block_size;
            const std::size_t b1 = (iv.end - 1) / block_size;
            for (std::size_t bk = b0; bk <= b1; ++bk) {
                mask.set(bq, bk);
            }
        }
    }
    return mask;
}

BlockMask build_block_mask(const ElementMask& mask, std::size_t block_size) {
    if (mask.rows() != mask.cols()) {
        throw std::invalid_argument("build_block_mask: element mask must be square");
    }
    return build_block_mask(mask.rows(), block_size,
                            [&mask](std::size_t q) { return mask.row(q); });
}

BlockMask temporal_band_block_mask(const MaskSpec& spec, std::size_t block_size) {
    return build_block_mask(spec.layout.seq_len(), block_size,
                            temporal_core_span_fn_frame_major(spec));
}

std::uint64_t temporal_sink_visit_count(const MaskSpec& spec, const Permutation& perm,
                                        const BlockMask& band) {
    const Interval sink = spec.sink_columns();
    if (sink.empty()) {
        return 0;
    }
    // Coverage depends only on the block row, so count once per block row and
    // weight by its true height.
    std::vector<std::size_t> sink_block_cols(sink.length());
    for (std::size_t c = sink.begin; c < sink.end; ++c) {
        sink_block_cols[c - sink.begin] = perm.forward[c] / band.block_size();
    }
    std::uint64_t visits = 0;
    for (std::size_t bq = 0; bq < band.grid_dim(); ++bq) {
        std::uint64_t uncovered = 0;
        for (const std::size_t bk : sink_block_cols) {
            if (!band.active(bq, bk)) {
                ++uncovered;
            }
        }
        visits += uncovered * band.tile_rows(bq);
    }
    return visits;
}

double VideoRegionCounts::density() const {
    if (video_rows == 0) {
        return 0.0;
    }
    const double row_len = static_cast<double>(active_pairs) / static_cast<double>(video_rows);
    return row_len / static_cast<double>(video_rows);
}

double VideoRegionCounts::interior_density() const {
    if (interior_rows == 0 || video_rows == 0) {
        return 0.0;
    }
    const double row_len =
        static_cast<double>(interior_active_pairs) / static_cast<double>(interior_rows);
    return row_len / static_cast<double>(video_rows);
}

VideoRegionCounts spatial_video_counts(const MaskSpec& spec) {
    spec.validate();
    const std::size_t n = spec.layout.num_frames;
    const std::size_t l = spec.layout.tokens_per_frame;
    const std::size_t back = spec.window_back();
    const std::size_t fwd = spec.window_forward();
    VideoRegionCounts counts;
    counts.video_rows = n * l;
    // The window slides at the ends, so every row attends the same key count;
    // interior rows are the ones whose window needed no shift.
    counts.interior_row_keys = static_cast<std::uint64_t>(spec.spatial_frames) * l;
    for (std::size_t f = 0; f < n; ++f) {
        const std::uint64_t keys = counts.interior_row_keys;
        counts.active_pairs += keys * l;
        if (f >= back && f + fwd < n) {
            counts.interior_active_pairs += keys * l;
            counts.interior_rows += l;
        }
    }
    return counts;
}

VideoRegionCounts temporal_video_counts(const MaskSpec& spec) {
    spec.validate();
    const std::size_t n = spec.layout.num_frames;
    const std::size_t l = spec.layout.tokens_per_frame;
    const std::size_t w = spec.slash_half_width();
    VideoRegionCounts counts;
    counts.video_rows = n * l;
    counts.interior_row_keys = static_cast<std::uint64_t>(2 * w + 1) * n;
    for (std::size_t p = 0; p < l; ++p) {
        const std::size_t p0 = p > w ? p - w : 0;
        const std::size_t p1 = std::min(l - 1, p + w);
        const std::uint64_t keys = static_cast<std::uint64_t>(p1 - p0 + 1) * n;
        counts.active_pairs += keys * n;
        if (p >= w && p + w < l) {
            counts.interior_active_pairs += keys * n;
            counts.interior_rows += n;
        }
    }
    return counts;
}

BandCheck verify_frame_major_band(const BlockMask& mask, const MaskSpec& spec,
                                  bool allow_sink_columns) {
    const LayoutSpec& lay = spec.layout;
    const std::size_t t = lay.text_len;
    const std::size_t n = lay.num_frames;
    const std::size_t b = mask.block_size();
    const std::size_t halfwidth = spec.slash_half_width() * n + (n - 1);
    for (std::size_t bq = 0; bq < mask.grid_dim(); ++bq) {
        const std::size_t r0 = bq * b;
        const std::size_t r1 = r0 + mask.tile_rows(bq);
        const bool has_text_row = r0 < t;
        for (std::size_t bk = 0; bk < mask.grid_dim(); ++bk) {
            if (!mask.active(bq, bk)) {
                continue;
            }
            if (has_text_row) {
                continue;
            }
            const std::size_t c0 = bk * b;
            const std::size_t c1 = c0 + mask.tile_cols(bk);
            bool sink_col = allow_sink_columns && spec.include_text && c0 < t;
            if (!sink_col && allow_sink_columns && spec.include_first_frame && c1 > t) {
                // Frame-major images of frame 0 sit at t + p * n.
                const std::size_t lo = std::max(c0, t) - t;
                const std::size_t p = (lo + n - 1) / n;
                sink_col = p < lay.tokens_per_frame && t + p * n < c1;
            }
            if (sink_col) {
                continue;
            }
            const std::size_t vr0 = std::max(r0, t);
            const std::size_t vc0 = std::max(c0, t);
            const bool in_band = vr0 < r1 && vc0 < c1 && vr0 <= (c1 - 1) + halfwidth &&
                                 vc0 <= (r1 - 1) + halfwidth;
            if (!in_band) {
                return {false, "active block (" + std::to_string(bq) + ", " + std::to_string(bk) +
                                   ") lies outside the band and sink columns"};
            }
        }
    }
    return {true, ""};
}

}  // namespace stattn
