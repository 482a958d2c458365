#pragma once

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spraysim/raster.hpp"

// Minimal PNG decoder, enough for the convenience input path: 8-bit depth,
// gray / RGB / palette / alpha variants, no interlacing. Alpha is dropped.

namespace spraysim {

namespace png_detail {

inline uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline std::vector<uint8_t> zlib_inflate(const std::vector<uint8_t>& in, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf out_len = uLongf(out.size());
    const int rc = uncompress(out.data(), &out_len, in.data(), uLong(in.size()));
    if (rc != Z_OK) throw std::runtime_error("png: zlib inflate failed");
    out.resize(out_len);
    return out;
}

inline uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return uint8_t(a);
    if (pb <= pc) return uint8_t(b);
    return uint8_t(c);
}

}  // namespace png_detail

inline RgbImage read_png(const std::string& path) {
    using namespace png_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<uint8_t> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (file.size() < 8 || std::memcmp(file.data(), sig, 8) != 0)
        throw std::runtime_error("png: bad signature: " + path);

    uint32_t width = 0, height = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<uint8_t> idat;
    std::vector<uint8_t> palette;

    size_t pos = 8;
    while (pos + 8 <= file.size()) {
        const uint32_t len = be32(&file[pos]);
        const char* type = reinterpret_cast<const char*>(&file[pos + 4]);
        if (pos + 12 + len > file.size()) throw std::runtime_error("png: truncated chunk");
        const uint8_t* data = &file[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            width = be32(data);
            height = be32(data + 4);
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
        } else if (std::memcmp(type, "PLTE", 4) == 0) {
            palette.assign(data, data + len);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (width == 0 || height == 0) throw std::runtime_error("png: missing IHDR");
    if (bit_depth != 8) throw std::runtime_error("png: only 8-bit depth supported");
    if (interlace != 0) throw std::runtime_error("png: interlaced images not supported");

    int channels = 0;
    switch (color_type) {
        case 0: channels = 1; break;  // gray
        case 2: channels = 3; break;  // rgb
        case 3: channels = 1; break;  // palette
        case 4: channels = 2; break;  // gray + alpha
        case 6: channels = 4; break;  // rgba
        default: throw std::runtime_error("png: unsupported color type");
    }
    if (color_type == 3 && palette.empty()) throw std::runtime_error("png: palette image without PLTE");

    const size_t stride = size_t(width) * channels;
    std::vector<uint8_t> raw = zlib_inflate(idat, (stride + 1) * height);
    if (raw.size() != (stride + 1) * height) throw std::runtime_error("png: unexpected data size");

    // undo per-scanline filters in place
    std::vector<uint8_t> prev(stride, 0);
    std::vector<uint8_t> cur(stride);
    RgbImage img{int(width), int(height), std::vector<uint8_t>(size_t(width) * height * 3)};
    const int bpp = channels;
    for (uint32_t y = 0; y < height; ++y) {
        const uint8_t filter = raw[(stride + 1) * y];
        const uint8_t* src = &raw[(stride + 1) * y + 1];
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= size_t(bpp) ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = i >= size_t(bpp) ? prev[i - bpp] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("png: bad filter byte");
            }
            cur[i] = uint8_t(v & 0xff);
        }
        for (uint32_t x = 0; x < width; ++x) {
            uint8_t r, g, bl;
            const uint8_t* px = &cur[size_t(x) * channels];
            switch (color_type) {
                case 0: r = g = bl = px[0]; break;
                case 2: r = px[0]; g = px[1]; bl = px[2]; break;
                case 3: {
                    const size_t pi = size_t(px[0]) * 3;
                    if (pi + 2 >= palette.size()) throw std::runtime_error("png: palette index out of range");
                    r = palette[pi];
                    g = palette[pi + 1];
                    bl = palette[pi + 2];
                    break;
                }
                case 4: r = g = bl = px[0]; break;
                default: r = px[0]; g = px[1]; bl = px[2]; break;  // 6
            }
            uint8_t* dst = &img.pixels[(size_t(y) * width + x) * 3];
            dst[0] = r;
            dst[1] = g;
            dst[2] = bl;
        }
        std::swap(prev, cur);
    }
    return img;
}

}  // namespace spraysim
