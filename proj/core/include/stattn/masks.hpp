// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stattn/layout.hpp"

namespace stattn {

/// Head taxonomy: spatial and temporal are the two sparse patterns, dense is
/// what warmup steps run.
enum class HeadClass { spatial, temporal, dense };

const char* to_string(HeadClass c);
HeadClass head_class_from_string(const std::string& s);

/// Half-open [begin, end) run of key columns.
struct Interval {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
    bool empty() const { return end <= begin; }

    bool operator==(const Interval&) const = default;
};

/// Sorted disjoint intervals describing one query row's active key columns.
using RowSpans = std::vector<Interval>;

/// Callback producing the spans of a given query row; lets mask geometry be
/// consumed without materializing all rows.
using RowSpansFn = std::function<RowSpans(std::size_t)>;

/// Sorts, drops empties, and merges overlapping or adjacent intervals.
void normalize_spans(RowSpans& spans);
bool spans_contain(const RowSpans& spans, std::size_t k);
std::uint64_t spans_active_count(const RowSpans& spans);

/// Sparse-pattern parameters on top of a token layout. spatial_frames plays
/// the attended-frame-window role, temporal_budget the per-query key budget
/// spread across frames as a symmetric offset window.
struct MaskSpec {
    LayoutSpec layout;
    std::size_t spatial_frames = 1;
    std::size_t temporal_budget = 1;
    bool include_text = true;
    bool include_first_frame = true;

    /// Frames before the query frame in the spatial window.
    std::size_t window_back() const { return (spatial_frames - 1) / 2; }
    /// Frames after the query frame in the spatial window.
    std::size_t window_forward() const { return spatial_frames / 2; }

    /// Offset half-width of the temporal slash; the budget split over
    /// num_frames, centered: floor((ceil(budget / N) - 1) / 2).
    std::size_t slash_half_width() const;

    /// The sink key columns in token-major order. Text prefix and first frame
    /// are adjacent, so this is always a single (possibly empty) interval.
    Interval sink_columns() const;

    void validate() const;
};

/// Element-level spatial pattern: k is attended iff it is a sink column, or q
/// is a text token (text rows are dense), or q and k are video tokens whose
/// frames fall in the query's window. The window slides at the sequence ends
/// so every query attends exactly spatial_frames frames.
bool spatial_predicate(const MaskSpec& spec, std::size_t q, std::size_t k);

/// Element-level temporal pattern: sinks and dense text rows as above; video
/// pairs are attended when their in-frame offsets differ by at most the slash
/// half-width, in every frame.
bool temporal_predicate(const MaskSpec& spec, std::size_t q, std::size_t k);

RowSpansFn spatial_span_fn(const MaskSpec& spec);
RowSpansFn temporal_span_fn(const MaskSpec& spec);

/// Temporal pattern minus sink columns, in frame-major coordinates. This is
/// what the banded kernel pass consumes; sinks are handled by a separate
/// dense pass over the token-major prefix.
RowSpansFn temporal_core_span_fn_frame_major(const MaskSpec& spec);

/// Full temporal pattern (sinks included) in frame-major coordinates; used
/// for mask images and small-scale checks.
RowSpansFn temporal_span_fn_frame_major(const MaskSpec& spec);

/// Materialized element mask: per-row interval spans over a rows x cols grid.
class ElementMask {
public:
    ElementMask() = default;
    ElementMask(std::size_t rows, std::size_t cols, std::vector<RowSpans> spans);

    static ElementMask from_spans(std::size_t rows, std::size_t cols, const RowSpansFn& fn);
    static ElementMask from_predicate(
        std::size_t rows, std::size_t cols,
        const std::function<bool(std::size_t, std::size_t)>& predicate);
    static ElementMask all_active(std::size_t rows, std::size_t cols);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    bool test(std::size_t q, std::size_t k) const;
    const RowSpans& row(std::size_t q) const { return spans_[q]; }
    std::uint64_t row_active_count(std::size_t q) const { return spans_active_count(spans_[q]); }
    std::uint64_t active_count() const { return active_count_; }
    double density() const;

    std::optional<std::size_t> first_empty_row() const;

    /// Keeps the given rows (in the given order) over the same columns.
    ElementMask select_rows(std::span<const std::size_t> row_ids) const;

    /// Mask m' with m'(q', k') = m(inverse[q'], inverse[k']); rows and
    /// columns both move through the permutation.
    ElementMask conjugate(const Permutation& perm) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::uint64_t active_count_ = 0;
    std::vector<RowSpans> spans_;
};

/// Tile-level bitmap over a square seq_len x seq_len attention matrix,
/// ceil(S/B) blocks per side. Edge tiles keep their true (smaller) extents
/// for pair counting; the padded grid is only used for block_density().
class BlockMask {
public:
    BlockMask() = default;
    BlockMask(std::size_t seq_len, std::size_t block_size);

    std::size_t seq_len() const { return seq_len_; }
    std::size_t block_size() const { return block_size_; }
    std::size_t grid_dim() const { return grid_dim_; }

    bool active(std::size_t bq, std::size_t bk) const {
        return grid_[bq * grid_dim_ + bk] != 0;
    }
    void set(std::size_t bq, std::size_t bk);

    std::size_t active_block_count() const { return active_block_count_; }

    /// Rows (queries) covered by block row bq, true extent.
    std::size_t tile_rows(std::size_t bq) const;
    /// Columns (keys) covered by block column bk, true extent.
    std::size_t tile_cols(std::size_t bk) const;

    /// Sum of true tile extents (rows x cols) over active blocks.
    std::uint64_t pair_count() const;

    /// Active fraction of the padded grid.
    double block_density() const;
    /// pair_count() / S^2 — the fraction of element pairs actually covered.
    double covered_pair_fraction() const;

    /// True iff the block containing element pair (q, k) is active.
    bool element_covered(std::size_t q, std::size_t k) const {
        return active(q / block_size_, k / block_size_);
    }

    std::optional<std::size_t> first_empty_block_row() const;

private:
    std::size_t seq_len_ = 0;
    std::size_t block_size_ = 0;
    std::size_t grid_dim_ = 0;
    std::size_t active_block_count_ = 0;
    std::vector<std::uint8_t> grid_;
};

/// Any-active rule: block (bq, bk) is active iff some element pair inside the
/// tile is active, so the block mask covers a superset of the element mask.
BlockMask build_block_mask(std::size_t seq_len, std::size_t block_size, const RowSpansFn& fn);
BlockMask build_block_mask(const ElementMask& mask, std::size_t block_size);

/// Block mask of the frame-major temporal core (sink-free band plus dense
/// text rows); pass A of the temporal attention path.
BlockMask temporal_band_block_mask(const MaskSpec& spec, std::size_t block_size);

/// Number of (row, sink column) pairs the dense sink pass visits after
/// skipping columns already covered by an active band block.
std::uint64_t temporal_sink_visit_count(const MaskSpec& spec, const Permutation& perm,
                                        const BlockMask& band);

/// Exact active-pair counts of one pattern over the sink-free video region
/// (video rows x video columns, sink clauses ignored). Interior rows are the
/// ones whose window is not clipped by a sequence boundary; every interior
/// row attends the same number of keys.
struct VideoRegionCounts {
    std::uint64_t active_pairs = 0;
    std::uint64_t interior_active_pairs = 0;
    std::size_t video_rows = 0;
    std::size_t interior_rows = 0;
    std::uint64_t interior_row_keys = 0;

    double density() const;
    double interior_density() const;
};

VideoRegionCounts spatial_video_counts(const MaskSpec& spec);
VideoRegionCounts temporal_video_counts(const MaskSpec& spec);

/// Checks that every active block of a frame-major temporal block mask lies
/// within the slash band, a sink column, or a dense text block row. With
/// allow_sink_columns off (for the sink-free core mask) only the band and
/// text rows are accepted, which keeps the check meaningful when the block
/// size is at least num_frames and every block column touches a sink image.
struct BandCheck {
    bool ok = true;
    std::string detail;
};

BandCheck verify_frame_major_band(const BlockMask& mask, const MaskSpec& spec,
                                  bool allow_sink_columns = true);

}  // namespace stattn
