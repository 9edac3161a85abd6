#pragma once

#include "mpvad/png_io.hpp"
#include "mpvad/tensor.hpp"

namespace mpvad {

// Float image helpers. Planar [C,H,W] tensors; two value ranges are used:
// "unit" [0,1] straight from 8-bit pixels, and "model" [-1,1] as consumed by
// the network. Conversions are the exact linear maps (0 -> -1, 255 -> +1).

// Interleaved 8-bit -> planar float [0,1], converting to the requested number
// of channels (1 or 3). Alpha channels are dropped.
Tensor<float> to_unit_float(const ImageU8& img, int out_channels);

// Planar float [0,1] -> interleaved 8-bit (round to nearest, clamped).
ImageU8 to_u8(const Tensor<float>& unit);

// Bilinear resize with half-pixel centers.
Tensor<float> resize_bilinear(const Tensor<float>& img, int out_h, int out_w);

inline float unit_to_model(float v) { return 2.0f * v - 1.0f; }
inline float model_to_unit(float v) { return 0.5f * (v + 1.0f); }

Tensor<float> to_model_range(const Tensor<float>& unit);
Tensor<float> to_unit_range(const Tensor<float>& model);  // clamps to [0,1]

}  // namespace mpvad
