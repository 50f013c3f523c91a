// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace stattn {

/// Violation of a numerical or structural invariant detected while computing
/// (non-finite output, fully masked query row, ...). Kept distinct from
/// std::invalid_argument, which signals a caller error such as a shape
/// mismatch, so the CLI can map the two classes to different exit codes.
class invariant_error : public std::runtime_error {
public:
    explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stattn
