// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace stattn {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once and callers must only write to per-index state, so
/// results cannot depend on the worker count. threads <= 1 runs inline.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace stattn
