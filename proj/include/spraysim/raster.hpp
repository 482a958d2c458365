#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spraysim/geometry.hpp"

namespace spraysim {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major

    uint8_t at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major, 3 bytes per pixel

    const uint8_t* at(int x, int y) const { return &pixels[(size_t(y) * width + x) * 3]; }
};

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> v;  // 1 = stained

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), v(size_t(w) * h, 0) {}

    uint8_t at(int x, int y) const { return v[size_t(y) * width + x]; }
    void set(int x, int y, uint8_t val) { v[size_t(y) * width + x] = val; }
    int64_t count() const {
        int64_t n = 0;
        for (uint8_t b : v) n += b;
        return n;
    }
};

// Virtual water-sensitive paper: a binary stain grid plus its physical scale.
// Columns run along the paper's long side.
struct WspRaster {
    int paper_id = 0;
    double resolution_um_per_px = 42.3;
    BinaryMask mask;

    WspRaster() = default;
    WspRaster(const WspPlacement& p)
        : paper_id(p.id), resolution_um_per_px(p.resolution_um_per_px), mask(p.cols(), p.rows()) {}

    int width() const { return mask.width; }
    int height() const { return mask.height; }

    // Stamps a filled disk (pixel centers inside the circle). Returns the
    // number of in-bounds pixels the disk covers, counting already-stained
    // ones too, so callers know the stamped area.
    int64_t stamp_disk(double cx_px, double cy_px, double radius_px) {
        if (radius_px <= 0) return 0;
        const int x0 = std::max(0, int(std::floor(cx_px - radius_px)));
        const int x1 = std::min(mask.width - 1, int(std::ceil(cx_px + radius_px)));
        const int y0 = std::max(0, int(std::floor(cy_px - radius_px)));
        const int y1 = std::min(mask.height - 1, int(std::ceil(cy_px + radius_px)));
        const double r2 = radius_px * radius_px;
        int64_t covered = 0;
        for (int y = y0; y <= y1; ++y) {
            const double dy = (y + 0.5) - cy_px;
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5) - cx_px;
                if (dx * dx + dy * dy <= r2) {
                    mask.set(x, y, 1);
                    ++covered;
                }
            }
        }
        return covered;
    }

    // PGM rendering convention: stained = 0, unstained = 255.
    GrayImage to_gray() const {
        GrayImage g{mask.width, mask.height, {}};
        g.pixels.resize(mask.v.size());
        for (size_t i = 0; i < mask.v.size(); ++i) g.pixels[i] = mask.v[i] ? 0 : 255;
        return g;
    }

    // Chromatic rendering: yellow card, blue stains.
    RgbImage to_rgb() const {
        static constexpr uint8_t kYellow[3] = {230, 230, 60};
        static constexpr uint8_t kBlue[3] = {30, 60, 160};
        RgbImage im{mask.width, mask.height, {}};
        im.pixels.resize(mask.v.size() * 3);
        for (size_t i = 0; i < mask.v.size(); ++i) {
            const uint8_t* c = mask.v[i] ? kBlue : kYellow;
            im.pixels[i * 3 + 0] = c[0];
            im.pixels[i * 3 + 1] = c[1];
            im.pixels[i * 3 + 2] = c[2];
        }
        return im;
    }
};

}  // namespace spraysim
