// Copyright (C) 2026 stattn contributors
// SPDX-License-Identifier: Apache-2.0

#include "stattn/fp8.hpp"

#include <cmath>
#include <stdexcept>

namespace stattn {

std::uint8_t e4m3_encode(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("e4m3_encode: input must be finite");
    }
    const std::uint8_t sign = std::signbit(x) ? 0x80 : 0x00;
    const double a = std::fabs(x);
    if (a == 0.0) {
        return sign;
    }
    if (a >= e4m3_max) {
        return sign | 0x7e;  // saturate at the max normal
    }
    int e = std::ilogb(a);
    if (e < -6) {
        // Subnormal grid: multiples of 2^-9. ldexp scaling is exact, and
        // nearbyint honors the default round-to-nearest-even mode, so the
        // rounding decision is exact.
        const double m = std::nearbyint(std::ldexp(a, 9));
        if (m >= 8.0) {
            return sign | 0x08;  // rounded up into the smallest normal
        }
        return sign | static_cast<std::uint8_t>(m);
    }
    // Normal: mantissa in eighths, value = (8 + m) * 2^(e - 10).
    double m = std::nearbyint(std::ldexp(a, 3 - e));
    if (m >= 16.0) {
        ++e;
        m = 8.0;
    }
    if (e > 8) {
        return sign | 0x7e;
    }
    return sign | static_cast<std::uint8_t>(((e + 7) << 3) | (static_cast<int>(m) - 8));
}

double e4m3_decode(std::uint8_t code) {
    const double sign = (code & 0x80) ? -1.0 : 1.0;
    const int e = (code >> 3) & 0xf;
    const int m = code & 7;
    if (e == 15 && m == 7) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double mag = e == 0 ? std::ldexp(static_cast<double>(m), -9)
                              : std::ldexp(static_cast<double>(8 + m), e - 10);
    return sign * mag;
}

}  // namespace stattn
