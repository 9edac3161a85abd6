#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace mpvad {

// Vectorizable float exp. Scalar expf is a libm call and dominates the
// attention softmax at 32x32 resolution; this polynomial version inlines and
// auto-vectorizes. Relative error is ~1e-7, well under every tolerance used
// by the oracles. The double overload stays on std::exp so double-precision
// gradient checks see the exact function.
inline float fast_exp(float x) {
    x = std::min(88.0f, std::max(-87.0f, x));
    float z = x * 1.44269504088896341f;  // x / ln 2
    float n = z + 12582912.0f;           // round to nearest via 1.5 * 2^23
    n -= 12582912.0f;
    float r = x - n * 0.693145751953125f;    // ln2 hi
    r -= n * 1.428606765330187045e-06f;      // ln2 lo
    float p = 1.0f +
              r * (1.0f +
                   r * (0.5f +
                        r * (0.1666666666f +
                             r * (0.0416666666f + r * (0.0083333333f + r * 0.0013888889f)))));
    union {
        uint32_t u;
        float f;
    } s;
    s.u = static_cast<uint32_t>(127 + static_cast<int>(n)) << 23;
    return p * s.f;
}

inline double fast_exp(double x) { return std::exp(x); }

inline float fast_sigmoid(float x) { return 1.0f / (1.0f + fast_exp(-x)); }
inline double fast_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline float fast_tanh(float x) { return 2.0f / (1.0f + fast_exp(-2.0f * x)) - 1.0f; }
inline double fast_tanh(double x) { return std::tanh(x); }

}  // namespace mpvad
