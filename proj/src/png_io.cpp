#include "mpvad/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mpvad/common.hpp"

namespace mpvad {

namespace {

const uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t read_be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void push_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
    push_be32(out, static_cast<uint32_t>(data.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    uint32_t crc = static_cast<uint32_t>(
        ::crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start)));
    push_be32(out, crc);
}

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

std::vector<uint8_t> zlib_inflate(const std::vector<uint8_t>& in, size_t expected,
                                  const std::string& path) {
    std::vector<uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) throw DecodeError(path + ": inflate init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw DecodeError(path + ": corrupt or truncated image data");
    return out;
}

}  // namespace

ImageU8 read_png(const std::string& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError(path + ": no such file");
    std::ifstream f(path, std::ios::binary);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw DecodeError(path + ": not a PNG file");

    ImageU8 img;
    int bit_depth = 0, color_type = -1;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_end = false;
    while (pos + 12 <= bytes.size() && !seen_end) {
        uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw DecodeError(path + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DecodeError(path + ": bad IHDR");
            img.width = static_cast<int>(read_be32(data));
            img.height = static_cast<int>(read_be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw DecodeError(path + ": interlaced PNG not supported");
            if (bit_depth != 8) throw DecodeError(path + ": only 8-bit PNG supported");
            switch (color_type) {
                case 0: img.channels = 1; break;
                case 2: img.channels = 3; break;
                case 4: img.channels = 2; break;
                case 6: img.channels = 4; break;
                default: throw DecodeError(path + ": unsupported color type");
            }
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_end = true;
        }
        pos += 12 + len;
    }
    if (img.width <= 0 || img.height <= 0 || idat.empty())
        throw DecodeError(path + ": missing image data");

    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    std::vector<uint8_t> raw =
        zlib_inflate(idat, (stride + 1) * static_cast<size_t>(img.height), path);

    img.pixels.resize(stride * static_cast<size_t>(img.height));
    const int bpp = img.channels;
    std::vector<uint8_t> prev(stride, 0);
    for (int y = 0; y < img.height; ++y) {
        const uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        uint8_t* dst = &img.pixels[stride * y];
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= static_cast<size_t>(bpp) ? dst[x - bpp] : 0;
            int b = prev[x];
            int c = x >= static_cast<size_t>(bpp) ? prev[x - bpp] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw DecodeError(path + ": unknown filter type");
            }
            dst[x] = static_cast<uint8_t>(v & 0xff);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return img;
}

void write_png(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ValidationError("write_png: only 1 or 3 channels supported");
    const size_t stride = static_cast<size_t>(img.width) * img.channels;
    if (img.pixels.size() != stride * static_cast<size_t>(img.height))
        throw ValidationError("write_png: pixel buffer size mismatch");

    std::vector<uint8_t> out(kSignature, kSignature + 8);

    std::vector<uint8_t> ihdr;
    push_be32(ihdr, static_cast<uint32_t>(img.width));
    push_be32(ihdr, static_cast<uint32_t>(img.height));
    ihdr.push_back(8);
    ihdr.push_back(img.channels == 1 ? 0 : 2);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);

    // Raw scanlines with filter 0, wrapped in a stored-block zlib stream.
    std::vector<uint8_t> raw;
    raw.reserve((stride + 1) * static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), img.pixels.begin() + stride * y,
                   img.pixels.begin() + stride * (y + 1));
    }
    std::vector<uint8_t> z;
    z.push_back(0x78);
    z.push_back(0x01);
    size_t off = 0;
    do {
        size_t n = std::min<size_t>(raw.size() - off, 65535);
        bool final = off + n == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(uint8_t(n & 0xff));
        z.push_back(uint8_t(n >> 8));
        z.push_back(uint8_t(~n & 0xff));
        z.push_back(uint8_t((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + off, raw.begin() + off + n);
        off += n;
    } while (off < raw.size());
    uint32_t ad = static_cast<uint32_t>(
        ::adler32(1L, raw.empty() ? Z_NULL : raw.data(), static_cast<uInt>(raw.size())));
    push_be32(z, ad);
    push_chunk(out, "IDAT", z);
    push_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path + ": cannot open for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(path + ": write failed");
}

}  // namespace mpvad
