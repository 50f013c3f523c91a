// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "stattn/matrix.hpp"

namespace stattn {

/// Token geometry of one attention sequence: a text prefix of text_len tokens
/// followed by num_frames frames of tokens_per_frame video tokens each.
struct LayoutSpec {
    std::size_t text_len = 0;
    std::size_t num_frames = 1;
    std::size_t tokens_per_frame = 1;

    std::size_t seq_len() const { return text_len + num_frames * tokens_per_frame; }
    std::size_t video_begin() const { return text_len; }
    std::size_t video_len() const { return num_frames * tokens_per_frame; }

    void validate() const;

    bool operator==(const LayoutSpec&) const = default;
};

/// Either a text token or a (frame, offset) video token.
struct TokenCoord {
    enum class Kind { text, video };

    Kind kind = Kind::text;
    std::size_t text_index = 0;  // valid when kind == text
    std::size_t frame = 0;       // valid when kind == video
    std::size_t offset = 0;      // valid when kind == video

    static TokenCoord text(std::size_t i) { return {Kind::text, i, 0, 0}; }
    static TokenCoord video(std::size_t frame, std::size_t offset) {
        return {Kind::video, 0, frame, offset};
    }

    bool operator==(const TokenCoord&) const = default;
};

TokenCoord coord_of(std::size_t index, const LayoutSpec& spec);
std::size_t index_of(const TokenCoord& coord, const LayoutSpec& spec);

/// A bijection on [0, seq_len) stored both ways; forward[i] is where row i
/// lands, inverse[forward[i]] == i.
struct Permutation {
    std::vector<std::size_t> forward;
    std::vector<std::size_t> inverse;

    std::size_t size() const { return forward.size(); }

    static Permutation identity(std::size_t n);
    static Permutation from_forward(std::vector<std::size_t> forward);

    Permutation inverted() const { return {inverse, forward}; }
};

/// Token-major -> frame-major reindexing: text tokens keep their positions,
/// video token (f, p) moves to text_len + p * num_frames + f. Tokens that
/// share an offset end up in contiguous runs of num_frames.
Permutation frame_major_permutation(const LayoutSpec& spec);

/// Scatters row i of m to row perm.forward[i] of the result.
template <typename T>
Matrix<T> apply_row_permutation(const Matrix<T>& m, const Permutation& perm) {
    if (m.rows != perm.size()) {
        throw std::invalid_argument("apply_row_permutation: row count does not match permutation");
    }
    Matrix<T> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const T* src = m.row(i);
        T* dst = out.row(perm.forward[i]);
        for (std::size_t j = 0; j < m.cols; ++j) {
            dst[j] = src[j];
        }
    }
    return out;
}

}  // namespace stattn
