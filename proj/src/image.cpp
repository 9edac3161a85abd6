#include "mpvad/image.hpp"

#include <algorithm>
#include <cmath>

namespace mpvad {

Tensor<float> to_unit_float(const ImageU8& img, int out_channels) {
    if (out_channels != 1 && out_channels != 3)
        throw ValidationError("to_unit_float: out_channels must be 1 or 3");
    const int h = img.height, w = img.width, ic = img.channels;
    Tensor<float> out({out_channels, h, w});
    const float inv = 1.0f / 255.0f;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const uint8_t* px = &img.pixels[(static_cast<size_t>(i) * w + j) * ic];
            float r, g, b;
            if (ic <= 2) {
                r = g = b = px[0] * inv;
            } else {
                r = px[0] * inv;
                g = px[1] * inv;
                b = px[2] * inv;
            }
            if (out_channels == 1) {
                out.at(0, i, j) = ic <= 2 ? r : 0.299f * r + 0.587f * g + 0.114f * b;
            } else {
                out.at(0, i, j) = r;
                out.at(1, i, j) = g;
                out.at(2, i, j) = b;
            }
        }
    }
    return out;
}

ImageU8 to_u8(const Tensor<float>& unit) {
    ImageU8 img;
    img.channels = unit.dim(0);
    img.height = unit.dim(1);
    img.width = unit.dim(2);
    img.pixels.resize(unit.numel());
    const int c = img.channels, h = img.height, w = img.width;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int ch = 0; ch < c; ++ch) {
                float v = std::clamp(unit.at(ch, i, j), 0.0f, 1.0f);
                img.pixels[(static_cast<size_t>(i) * w + j) * c + ch] =
                    static_cast<uint8_t>(std::lround(v * 255.0f));
            }
    return img;
}

Tensor<float> resize_bilinear(const Tensor<float>& img, int out_h, int out_w) {
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (h == out_h && w == out_w) return img;
    Tensor<float> out({c, out_h, out_w});
    const float sy = static_cast<float>(h) / out_h;
    const float sx = static_cast<float>(w) / out_w;
    for (int i = 0; i < out_h; ++i) {
        float fy = (i + 0.5f) * sy - 0.5f;
        int y0 = static_cast<int>(std::floor(fy));
        float wy = fy - y0;
        int y1 = std::min(y0 + 1, h - 1);
        y0 = std::max(y0, 0);
        for (int j = 0; j < out_w; ++j) {
            float fx = (j + 0.5f) * sx - 0.5f;
            int x0 = static_cast<int>(std::floor(fx));
            float wx = fx - x0;
            int x1 = std::min(x0 + 1, w - 1);
            x0 = std::max(x0, 0);
            for (int ch = 0; ch < c; ++ch) {
                float top = img.at(ch, y0, x0) * (1 - wx) + img.at(ch, y0, x1) * wx;
                float bot = img.at(ch, y1, x0) * (1 - wx) + img.at(ch, y1, x1) * wx;
                out.at(ch, i, j) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

Tensor<float> to_model_range(const Tensor<float>& unit) {
    Tensor<float> out(unit.shape);
    for (size_t i = 0; i < unit.numel(); ++i) out[i] = unit_to_model(unit[i]);
    return out;
}

Tensor<float> to_unit_range(const Tensor<float>& model) {
    Tensor<float> out(model.shape);
    for (size_t i = 0; i < model.numel(); ++i)
        out[i] = std::clamp(model_to_unit(model[i]), 0.0f, 1.0f);
    return out;
}

}  // namespace mpvad
