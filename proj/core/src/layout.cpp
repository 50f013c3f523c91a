// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/layout.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace stattn {

void LayoutSpec::validate() const {
    if (num_frames < 1) {
        throw std::invalid_argument("LayoutSpec: num_frames must be >= 1");
    }
    if (tokens_per_frame < 1) {
        throw std::invalid_argument("LayoutSpec: tokens_per_frame must be >= 1");
    }
}

TokenCoord coord_of(std::size_t index, const LayoutSpec& spec) {
    if (index >= spec.seq_len()) {
        throw std::out_of_range("coord_of: index " + std::to_string(index) +
                                " out of range for seq_len " + std::to_string(spec.seq_len()));
    }
    if (index < spec.text_len) {
        return TokenCoord::text(index);
    }
    const std::size_t v = index - spec.text_len;
    return TokenCoord::video(v / spec.tokens_per_frame, v % spec.tokens_per_frame);
}

std::size_t index_of(const TokenCoord& coord, const LayoutSpec& spec) {
    if (coord.kind == TokenCoord::Kind::text) {
        if (coord.text_index >= spec.text_len) {
            throw std::out_of_range("index_of: text index out of range");
        }
        return coord.text_index;
    }
    if (coord.frame >= spec.num_frames || coord.offset >= spec.tokens_per_frame) {
        throw std::out_of_range("index_of: video coordinate out of range");
    }
    return spec.text_len + coord.frame * spec.tokens_per_frame + coord.offset;
}

Permutation Permutation::identity(std::size_t n) {
    Permutation p;
    p.forward.resize(n);
    p.inverse.resize(n);
    std::iota(p.forward.begin(), p.forward.end(), std::size_t{0});
    p.inverse = p.forward;
    return p;
}

Permutation Permutation::from_forward(std::vector<std::size_t> forward) {
    Permutation p;
    p.inverse.assign(forward.size(), forward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) {
        const std::size_t f = forward[i];
        if (f >= forward.size() || p.inverse[f] != forward.size()) {
            throw std::invalid_argument("Permutation: forward map is not a bijection");
        }
        p.inverse[f] = i;
    }
    p.forward = std::move(forward);
    return p;
}

Permutation frame_major_permutation(const LayoutSpec& spec) {
    spec.validate();
    const std::size_t n = spec.num_frames;
    const std::size_t l = spec.tokens_per_frame;
    std::vector<std::size_t> forward(spec.seq_len());
    for (std::size_t i = 0; i < spec.text_len; ++i) {
        forward[i] = i;
    }
    for (std::size_t f = 0; f < n; ++f) {
        for (std::size_t p = 0; p < l; ++p) {
            forward[spec.text_len + f * l + p] = spec.text_len + p * n + f;
        }
    }
    return Permutation::from_forward(std::move(forward));
}

}  // namespace stattn
