#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mpvad {

// 8-bit interleaved image (HWC). channels: 1 gray, 2 gray+alpha, 3 rgb, 4 rgba.
struct ImageU8 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;
};

// Reads an 8-bit non-interlaced PNG (color types 0/2/4/6). Throws DecodeError
// naming the file on anything malformed or unsupported, NotFoundError if the
// file does not exist.
ImageU8 read_png(const std::string& path);

// Writes a grayscale or RGB PNG. The deflate stream uses stored blocks, so
// output bytes depend only on the pixel data -- identical across machines and
// zlib versions.
void write_png(const std::string& path, const ImageU8& img);

}  // namespace mpvad
