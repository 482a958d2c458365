#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "spraysim/geometry.hpp"
#include "spraysim/rng.hpp"

// Pluggable detection stage. The oracle below stands in for the onboard
// detector/segmenter: it sees the true plant projections and corrupts them
// with configurable miss, false-positive, and area-jitter noise. Everything
// is a pure function of (inputs, rng stream), so frames can be replayed.

namespace spraysim {

struct OracleNoise {
    double fn_rate = 0.0;      // per-plant miss probability
    double fp_rate = 0.0;      // expected spurious detections per frame
    double area_jitter = 0.0;  // sigma of log-normal mask-area factor

    void validate() const {
        if (fn_rate < 0 || fn_rate > 1) throw std::invalid_argument("noise: fn_rate must be in [0,1]");
        if (fp_rate < 0) throw std::invalid_argument("noise: fp_rate must be >= 0");
        if (area_jitter < 0) throw std::invalid_argument("noise: area_jitter must be >= 0");
    }
};

struct PixelEllipse {
    double cx = 0, cy = 0, rx = 0, ry = 0;
    bool contains(double x, double y) const {
        const double dx = (x - cx) / rx, dy = (y - cy) / ry;
        return dx * dx + dy * dy <= 1.0;
    }
};

struct PixelPolygon {
    std::vector<Vec2> points;
    bool contains(double x, double y) const {
        bool inside = false;
        const size_t n = points.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = points[i];
            const Vec2& b = points[j];
            if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x)
                inside = !inside;
        }
        return inside;
    }
};

// A plant's true canopy shape mapped into a camera's pixel frame.
struct PlantProjection {
    int plant_id = 0;
    std::variant<PixelEllipse, PixelPolygon> shape;
};

struct Box {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
};

// Binary mask anchored at (x0, y0) in image coordinates, row-major.
struct DetectionMask {
    int x0 = 0, y0 = 0, width = 0, height = 0;
    std::vector<uint8_t> v;

    int64_t count() const {
        int64_t n = 0;
        for (uint8_t b : v) n += b;
        return n;
    }
};

struct Detection {
    Box box;
    double confidence = 1.0;
    int class_id = 0;  // single class "weed" for now
    std::optional<DetectionMask> mask;
    int truth_plant_id = -1;  // -1 for spurious detections
};

namespace detail {

// Rasterizes a pixel-space shape scaled about its centroid; pixel centers
// inside the shape are set. Clipped to the image.
inline std::optional<DetectionMask> rasterize_shape(const std::variant<PixelEllipse, PixelPolygon>& shape,
                                                    double scale, int image_w, int image_h) {
    double bx0, by0, bx1, by1, cx, cy;
    if (const auto* e = std::get_if<PixelEllipse>(&shape)) {
        cx = e->cx;
        cy = e->cy;
        bx0 = cx - e->rx * scale;
        bx1 = cx + e->rx * scale;
        by0 = cy - e->ry * scale;
        by1 = cy + e->ry * scale;
    } else {
        const auto& poly = std::get<PixelPolygon>(shape).points;
        cx = cy = 0;
        for (const Vec2& p : poly) {
            cx += p.x;
            cy += p.y;
        }
        cx /= double(poly.size());
        cy /= double(poly.size());
        bx0 = by0 = 1e300;
        bx1 = by1 = -1e300;
        for (const Vec2& p : poly) {
            const double sx = cx + (p.x - cx) * scale, sy = cy + (p.y - cy) * scale;
            bx0 = std::min(bx0, sx);
            bx1 = std::max(bx1, sx);
            by0 = std::min(by0, sy);
            by1 = std::max(by1, sy);
        }
    }
    const int x0 = std::max(0, int(std::floor(bx0)));
    const int y0 = std::max(0, int(std::floor(by0)));
    const int x1 = std::min(image_w - 1, int(std::ceil(bx1)));
    const int y1 = std::min(image_h - 1, int(std::ceil(by1)));
    if (x1 < x0 || y1 < y0) return std::nullopt;

    DetectionMask m;
    m.x0 = x0;
    m.y0 = y0;
    m.width = x1 - x0 + 1;
    m.height = y1 - y0 + 1;
    m.v.assign(size_t(m.width) * m.height, 0);
    auto inside = [&](double px, double py) {
        // query point mapped back through the inverse scaling
        const double ux = cx + (px - cx) / scale, uy = cy + (py - cy) / scale;
        return std::visit([&](const auto& s) { return s.contains(ux, uy); }, shape);
    };
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (inside(x + 0.5, y + 0.5)) m.v[size_t(y - y0) * m.width + (x - x0)] = 1;
    return m;
}

inline Box tight_box(const DetectionMask& m) {
    int minx = m.width, miny = m.height, maxx = -1, maxy = -1;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.v[size_t(y) * m.width + x]) {
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
            }
    if (maxx < 0) return Box{double(m.x0), double(m.y0), double(m.x0), double(m.y0)};
    return Box{double(m.x0 + minx), double(m.y0 + miny), double(m.x0 + maxx + 1), double(m.y0 + maxy + 1)};
}

}  // namespace detail

// Deterministic noise-injecting oracle. Per plant, in input order: one miss
// draw, then (if kept) one area-jitter draw and one confidence draw. False
// positives are drawn last. Callers derive `rng` from (seed, frame index).
inline std::vector<Detection> detect(const std::vector<PlantProjection>& truths, const OracleNoise& noise,
                                     Rng& rng, int image_w, int image_h) {
    noise.validate();
    std::vector<Detection> out;
    out.reserve(truths.size());
    for (const PlantProjection& t : truths) {
        const bool missed = rng.uniform01() < noise.fn_rate;
        if (missed) continue;
        double area_factor = 1.0;
        if (noise.area_jitter > 0) area_factor = std::exp(noise.area_jitter * rng.normal());
        const double conf = noise.fn_rate == 0 && noise.fp_rate == 0 && noise.area_jitter == 0
                                ? 1.0
                                : rng.uniform(0.55, 0.99);
        auto mask = detail::rasterize_shape(t.shape, std::sqrt(area_factor), image_w, image_h);
        if (!mask || mask->count() == 0) continue;  // fell entirely outside the image
        Detection d;
        d.mask = std::move(*mask);
        d.box = detail::tight_box(*d.mask);
        d.confidence = conf;
        d.truth_plant_id = t.plant_id;
        out.push_back(std::move(d));
    }
    const uint64_t spurious = rng.poisson(noise.fp_rate);
    for (uint64_t i = 0; i < spurious; ++i) {
        const double w = rng.uniform(8.0, 40.0);
        const double h = rng.uniform(8.0, 40.0);
        const double cx = rng.uniform(w / 2, image_w - w / 2);
        const double cy = rng.uniform(h / 2, image_h - h / 2);
        const double conf = rng.uniform(0.3, 0.8);
        PixelEllipse e{cx, cy, w / 2, h / 2};
        auto mask = detail::rasterize_shape(std::variant<PixelEllipse, PixelPolygon>{e}, 1.0, image_w, image_h);
        if (!mask || mask->count() == 0) continue;
        Detection d;
        d.mask = std::move(*mask);
        d.box = detail::tight_box(*d.mask);
        d.confidence = conf;
        d.truth_plant_id = -1;
        out.push_back(std::move(d));
    }
    return out;
}

struct PhysicalArea {
    double area_m2 = 0.0;
    bool from_box_fallback = false;  // mask was missing, box area used instead
};

// Converts a detection's mask pixel count to physical canopy area.
inline PhysicalArea mask_area_physical(const Detection& d, const CameraConfig& cam) {
    const Gsd g = ground_sampling_distance(cam);
    const double px_area_m2 = g.h_um_per_px * 1e-6 * g.v_um_per_px * 1e-6;
    if (d.mask) return PhysicalArea{double(d.mask->count()) * px_area_m2, false};
    return PhysicalArea{d.box.area() * px_area_m2, true};
}

}  // namespace spraysim
