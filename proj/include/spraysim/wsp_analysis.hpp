#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "spraysim/raster.hpp"

// Water-sensitive-paper image analysis: stain segmentation, droplet
// extraction, coverage, size statistics with percentile binning, KDE
// heatmaps, and spatial uniformity (CV + drift).

namespace spraysim {

struct Hsv {
    double h = 0.0;  // degrees [0, 360)
    double s = 0.0;  // [0, 1]
    double v = 0.0;  // [0, 1]
};

inline Hsv rgb_to_hsv(uint8_t r8, uint8_t g8, uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    Hsv out;
    out.v = mx;
    const double d = mx - mn;
    out.s = mx > 0 ? d / mx : 0.0;
    if (d <= 0) {
        out.h = 0.0;
        return out;
    }
    if (mx == r)
        out.h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g)
        out.h = 60.0 * ((b - r) / d + 2.0);
    else
        out.h = 60.0 * ((r - g) / d + 4.0);
    if (out.h < 0) out.h += 360.0;
    return out;
}

struct SegmentParams {
    double hue_lo_deg = 180.0;
    double hue_hi_deg = 280.0;
    double sat_min = 0.25;
    int adaptive_window_px = 51;
    double adaptive_offset = 2.0;  // on the 0..255 value scale
    bool morphology = true;
};

namespace detail {

// Separable Gaussian blur with replicated borders. Sigma follows the usual
// kernel-size heuristic: 0.3*((k-1)*0.5 - 1) + 0.8.
inline std::vector<float> gaussian_blur(const std::vector<float>& src, int w, int h, int ksize) {
    const int half = ksize / 2;
    const double sigma = 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
    std::vector<double> kernel(static_cast<size_t>(ksize));
    double sum = 0.0;
    for (int i = 0; i < ksize; ++i) {
        const double x = i - half;
        kernel[size_t(i)] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += kernel[size_t(i)];
    }
    for (double& k : kernel) k /= sum;

    std::vector<float> tmp(src.size()), dst(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int xi = std::clamp(x + i, 0, w - 1);
                acc += kernel[size_t(i + half)] * src[size_t(y) * w + xi];
            }
            tmp[size_t(y) * w + x] = float(acc);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -half; i <= half; ++i) {
                const int yi = std::clamp(y + i, 0, h - 1);
                acc += kernel[size_t(i + half)] * tmp[size_t(yi) * w + x];
            }
            dst[size_t(y) * w + x] = float(acc);
        }
    return dst;
}

// Erosion treats out-of-bounds as set, dilation as unset, so a fully stained
// mask survives an open/close round trip.
inline BinaryMask erode_cross(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            const bool keep = (x == 0 || m.at(x - 1, y)) && (x == m.width - 1 || m.at(x + 1, y)) &&
                              (y == 0 || m.at(x, y - 1)) && (y == m.height - 1 || m.at(x, y + 1));
            if (keep) out.set(x, y, 1);
        }
    return out;
}

inline BinaryMask dilate_cross(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            out.set(x, y, 1);
            if (x > 0) out.set(x - 1, y, 1);
            if (x < m.width - 1) out.set(x + 1, y, 1);
            if (y > 0) out.set(x, y - 1, 1);
            if (y < m.height - 1) out.set(x, y + 1, 1);
        }
    return out;
}

inline BinaryMask morph_open(const BinaryMask& m) { return dilate_cross(erode_cross(m)); }
inline BinaryMask morph_close(const BinaryMask& m) { return erode_cross(dilate_cross(m)); }

}  // namespace detail

// HSV color gate (blue stains on yellow card), a local-brightness check
// that drops glare-like candidates, then morphological open + close with a
// 3x3 cross element.
inline BinaryMask segment_stains(const RgbImage& img, const SegmentParams& p = {}) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("segment_stains: empty image");
    const size_t n = size_t(img.width) * img.height;
    BinaryMask mask(img.width, img.height);
    std::vector<float> value(n);
    bool any_candidate = false;
    for (size_t i = 0; i < n; ++i) {
        const Hsv hsv = rgb_to_hsv(img.pixels[i * 3], img.pixels[i * 3 + 1], img.pixels[i * 3 + 2]);
        value[i] = float(hsv.v * 255.0);
        if (hsv.h >= p.hue_lo_deg && hsv.h <= p.hue_hi_deg && hsv.s >= p.sat_min) {
            mask.v[i] = 1;
            any_candidate = true;
        }
    }
    if (any_candidate) {
        const std::vector<float> local = detail::gaussian_blur(value, img.width, img.height, p.adaptive_window_px);
        for (size_t i = 0; i < n; ++i)
            if (mask.v[i] && value[i] > local[i] + p.adaptive_offset) mask.v[i] = 0;
    }
    if (p.morphology) mask = detail::morph_close(detail::morph_open(mask));
    return mask;
}

// Simulator PGM rasters are already-segmented binary records: stained = 0.
inline BinaryMask binarize_gray(const GrayImage& img, uint8_t stain_below = 128) {
    BinaryMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) mask.v[i] = img.pixels[i] < stain_below ? 1 : 0;
    return mask;
}

// Exact integer-pixel arithmetic before the final division.
inline double coverage_percent(const BinaryMask& mask) {
    const int64_t total = int64_t(mask.width) * mask.height;
    if (total <= 0) throw std::invalid_argument("coverage_percent: empty mask grid");
    return 100.0 * double(mask.count()) / double(total);
}

struct DropletRecord {
    int id = 0;
    double centroid_x_px = 0.0;
    double centroid_y_px = 0.0;
    double centroid_x_mm = 0.0;
    double centroid_y_mm = 0.0;
    int64_t area_px = 0;
    double area_um2 = 0.0;
    double eq_diameter_um = 0.0;
};

// 8-connected component labeling (two-pass union-find); components smaller
// than min_area_px are discarded.
inline std::vector<DropletRecord> extract_droplets(const BinaryMask& mask, double res_um_per_px,
                                                   int min_area_px = 2) {
    if (!(res_um_per_px > 0)) throw std::invalid_argument("extract_droplets: resolution must be > 0");
    const int w = mask.width, h = mask.height;
    std::vector<int32_t> label(size_t(w) * h, -1);
    std::vector<int32_t> parent;
    parent.reserve(1024);

    auto find = [&](int32_t a) {
        while (parent[size_t(a)] != a) {
            parent[size_t(a)] = parent[size_t(parent[size_t(a)])];
            a = parent[size_t(a)];
        }
        return a;
    };
    auto unite = [&](int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[size_t(std::max(a, b))] = std::min(a, b);
    };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            const size_t idx = size_t(y) * w + x;
            int32_t lbl = -1;
            // already-visited 8-neighbors: W, NW, N, NE
            const int nx[4] = {x - 1, x - 1, x, x + 1};
            const int ny[4] = {y, y - 1, y - 1, y - 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || nx[k] >= w || ny[k] < 0) continue;
                const int32_t nl = label[size_t(ny[k]) * w + nx[k]];
                if (nl < 0) continue;
                if (lbl < 0)
                    lbl = nl;
                else
                    unite(lbl, nl);
            }
            if (lbl < 0) {
                lbl = int32_t(parent.size());
                parent.push_back(lbl);
            }
            label[idx] = lbl;
        }

    std::vector<int64_t> area(parent.size(), 0);
    std::vector<double> sum_x(parent.size(), 0.0), sum_y(parent.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t idx = size_t(y) * w + x;
            if (label[idx] < 0) continue;
            const int32_t root = find(label[idx]);
            area[size_t(root)] += 1;
            sum_x[size_t(root)] += x + 0.5;
            sum_y[size_t(root)] += y + 0.5;
        }

    std::vector<DropletRecord> out;
    const double px_um2 = res_um_per_px * res_um_per_px;
    int next_id = 1;
    for (size_t r = 0; r < parent.size(); ++r) {
        if (parent[r] != int32_t(r) || area[r] < min_area_px) continue;
        DropletRecord d;
        d.id = next_id++;
        d.area_px = area[r];
        d.area_um2 = double(area[r]) * px_um2;
        d.eq_diameter_um = 2.0 * std::sqrt(d.area_um2 / kPi);
        d.centroid_x_px = sum_x[r] / double(area[r]);
        d.centroid_y_px = sum_y[r] / double(area[r]);
        d.centroid_x_mm = d.centroid_x_px * res_um_per_px / 1000.0;
        d.centroid_y_mm = d.centroid_y_px * res_um_per_px / 1000.0;
        out.push_back(d);
    }
    return out;
}

struct DropletStats {
    int64_t n = 0;
    double mean_um2 = 0.0;
    double median_um2 = 0.0;
    double stddev_um2 = 0.0;  // population
    double p33_um2 = 0.0;
    double p66_um2 = 0.0;
    int64_t bin_small = 0;   // area < p33
    int64_t bin_medium = 0;  // p33 <= area < p66
    int64_t bin_large = 0;   // area >= p66
};

// Nearest-rank percentile: the ceil(p*N)-th order statistic (1-based).
inline double nearest_rank(const std::vector<double>& sorted_asc, double p) {
    const int64_t n = int64_t(sorted_asc.size());
    int64_t idx = int64_t(std::ceil(p * double(n)));
    idx = std::clamp<int64_t>(idx, 1, n);
    return sorted_asc[size_t(idx - 1)];
}

inline DropletStats droplet_stats(const std::vector<DropletRecord>& droplets) {
    DropletStats s;
    s.n = int64_t(droplets.size());
    if (s.n == 0) return s;
    std::vector<double> areas;
    areas.reserve(droplets.size());
    for (const DropletRecord& d : droplets) areas.push_back(d.area_um2);
    std::sort(areas.begin(), areas.end());

    s.mean_um2 = std::accumulate(areas.begin(), areas.end(), 0.0) / double(s.n);
    s.median_um2 = s.n % 2 ? areas[size_t(s.n / 2)]
                           : (areas[size_t(s.n / 2 - 1)] + areas[size_t(s.n / 2)]) / 2.0;
    double ss = 0.0;
    for (double a : areas) ss += (a - s.mean_um2) * (a - s.mean_um2);
    s.stddev_um2 = std::sqrt(ss / double(s.n));
    s.p33_um2 = nearest_rank(areas, 0.33);
    s.p66_um2 = nearest_rank(areas, 0.66);
    for (double a : areas) {
        if (a < s.p33_um2)
            ++s.bin_small;
        else if (a < s.p66_um2)
            ++s.bin_medium;
        else
            ++s.bin_large;
    }
    return s;
}

struct KdeGrid {
    int nx = 0;  // cells along the long axis
    int ny = 0;
    double cell_w_mm = 0.0;
    double cell_h_mm = 0.0;
    double bandwidth_mm = 0.0;
    std::vector<double> density;  // row-major, droplets per mm^2

    double at(int ix, int iy) const { return density[size_t(iy) * nx + ix]; }
    double mass() const {
        double m = 0.0;
        for (double d : density) m += d;
        return m * cell_w_mm * cell_h_mm;
    }
};

// Isotropic Gaussian KDE with per-cell analytic integration and edge
// renormalization, so the grid mass equals N exactly up to rounding.
// Bandwidth 0 requests Silverman's 2-D rule, sigma * n^(-1/6) per axis,
// combined geometrically.
inline KdeGrid kde_heatmap(const std::vector<DropletRecord>& droplets, double paper_w_mm,
                           double paper_h_mm, int nx = 60, int ny = 20, double bandwidth_mm = 0.0) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("kde: grid must be at least 1x1");
    KdeGrid g;
    g.nx = nx;
    g.ny = ny;
    g.cell_w_mm = paper_w_mm / nx;
    g.cell_h_mm = paper_h_mm / ny;
    g.density.assign(size_t(nx) * ny, 0.0);
    if (droplets.empty()) {
        g.bandwidth_mm = bandwidth_mm;
        return g;
    }

    const size_t n = droplets.size();
    if (bandwidth_mm <= 0) {
        double mx = 0, my = 0;
        for (const auto& d : droplets) {
            mx += d.centroid_x_mm;
            my += d.centroid_y_mm;
        }
        mx /= double(n);
        my /= double(n);
        double vx = 0, vy = 0;
        for (const auto& d : droplets) {
            vx += (d.centroid_x_mm - mx) * (d.centroid_x_mm - mx);
            vy += (d.centroid_y_mm - my) * (d.centroid_y_mm - my);
        }
        const double sx = std::sqrt(vx / double(n));
        const double sy = std::sqrt(vy / double(n));
        const double factor = std::pow(double(n), -1.0 / 6.0);
        const double hx = sx * factor, hy = sy * factor;
        bandwidth_mm = std::sqrt(std::max(hx, 1e-12) * std::max(hy, 1e-12));
        const double floor_bw = 2.0 * std::max(g.cell_w_mm, g.cell_h_mm);
        if (n < 2 || bandwidth_mm < 1e-9) bandwidth_mm = floor_bw;
    }
    g.bandwidth_mm = bandwidth_mm;

    const double inv_sqrt2h = 1.0 / (bandwidth_mm * std::sqrt(2.0));
    auto cdf_span = [&](double a, double b, double c) {
        return 0.5 * (std::erf((b - c) * inv_sqrt2h) - std::erf((a - c) * inv_sqrt2h));
    };

    for (const DropletRecord& d : droplets) {
        // in-grid mass for edge renormalization
        const double mass_x = cdf_span(0.0, paper_w_mm, d.centroid_x_mm);
        const double mass_y = cdf_span(0.0, paper_h_mm, d.centroid_y_mm);
        const double total = mass_x * mass_y;
        if (total <= 1e-12) continue;
        // only cells within ~6 bandwidths matter
        const int ix0 = std::max(0, int((d.centroid_x_mm - 6 * bandwidth_mm) / g.cell_w_mm));
        const int ix1 = std::min(nx - 1, int((d.centroid_x_mm + 6 * bandwidth_mm) / g.cell_w_mm));
        const int iy0 = std::max(0, int((d.centroid_y_mm - 6 * bandwidth_mm) / g.cell_h_mm));
        const int iy1 = std::min(ny - 1, int((d.centroid_y_mm + 6 * bandwidth_mm) / g.cell_h_mm));
        std::vector<double> col_mass(size_t(ix1 - ix0 + 1));
        for (int ix = ix0; ix <= ix1; ++ix)
            col_mass[size_t(ix - ix0)] = cdf_span(ix * g.cell_w_mm, (ix + 1) * g.cell_w_mm, d.centroid_x_mm);
        for (int iy = iy0; iy <= iy1; ++iy) {
            const double row_mass = cdf_span(iy * g.cell_h_mm, (iy + 1) * g.cell_h_mm, d.centroid_y_mm);
            for (int ix = ix0; ix <= ix1; ++ix)
                g.density[size_t(iy) * nx + ix] += col_mass[size_t(ix - ix0)] * row_mass / total;
        }
    }
    // convert accumulated cell mass to density
    const double cell_area = g.cell_w_mm * g.cell_h_mm;
    for (double& v : g.density) v /= cell_area;
    return g;
}

struct UniformityReport {
    double coverage_percent = 0.0;
    double grid_cv = 0.0;     // population sigma / mean of per-cell coverage
    double drift_index = 0.0; // side-thirds coverage / center-third coverage
    bool drift_undefined = false;  // center empty but sides stained
    int grid_cols = 0;
    int grid_rows = 0;
    std::vector<double> cell_coverage;  // row-major
};

inline UniformityReport uniformity(const BinaryMask& mask, int grid_cols = 9, int grid_rows = 3) {
    if (grid_cols < 1 || grid_rows < 1) throw std::invalid_argument("uniformity: bad grid");
    UniformityReport rep;
    rep.grid_cols = grid_cols;
    rep.grid_rows = grid_rows;
    rep.coverage_percent = coverage_percent(mask);

    rep.cell_coverage.assign(size_t(grid_cols) * grid_rows, 0.0);
    for (int gy = 0; gy < grid_rows; ++gy)
        for (int gx = 0; gx < grid_cols; ++gx) {
            const int x0 = gx * mask.width / grid_cols;
            const int x1 = (gx + 1) * mask.width / grid_cols;
            const int y0 = gy * mask.height / grid_rows;
            const int y1 = (gy + 1) * mask.height / grid_rows;
            int64_t stained = 0, total = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    stained += mask.at(x, y);
                    ++total;
                }
            rep.cell_coverage[size_t(gy) * grid_cols + gx] = total > 0 ? double(stained) / double(total) : 0.0;
        }
    double mean = 0.0;
    for (double c : rep.cell_coverage) mean += c;
    mean /= double(rep.cell_coverage.size());
    if (mean > 0) {
        double ss = 0.0;
        for (double c : rep.cell_coverage) ss += (c - mean) * (c - mean);
        rep.grid_cv = std::sqrt(ss / double(rep.cell_coverage.size())) / mean;
    }

    // drift: pixel-exact thirds of the long (column) axis
    const int c1 = mask.width / 3, c2 = 2 * mask.width / 3;
    int64_t center = 0, sides = 0, center_total = 0, sides_total = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const bool is_center = x >= c1 && x < c2;
            (is_center ? center : sides) += mask.at(x, y);
            (is_center ? center_total : sides_total) += 1;
        }
    const double center_cov = center_total ? double(center) / double(center_total) : 0.0;
    const double sides_cov = sides_total ? double(sides) / double(sides_total) : 0.0;
    if (center_cov > 0)
        rep.drift_index = sides_cov / center_cov;
    else if (sides_cov > 0)
        rep.drift_undefined = true;  // infinite drift sentinel
    else
        rep.drift_index = 1.0;  // nothing anywhere: no drift either way
    return rep;
}

struct PaperReport {
    int width_px = 0;
    int height_px = 0;
    double resolution_um_per_px = 0.0;
    double coverage_percent = 0.0;
    std::vector<DropletRecord> droplets;
    DropletStats stats;
    UniformityReport uniformity;
    KdeGrid kde;
};

inline PaperReport analyze_mask(const BinaryMask& mask, double res_um_per_px, int min_area_px = 2,
                                int kde_nx = 60, int kde_ny = 20) {
    PaperReport rep;
    rep.width_px = mask.width;
    rep.height_px = mask.height;
    rep.resolution_um_per_px = res_um_per_px;
    rep.coverage_percent = coverage_percent(mask);
    rep.droplets = extract_droplets(mask, res_um_per_px, min_area_px);
    rep.stats = droplet_stats(rep.droplets);
    rep.uniformity = spraysim::uniformity(mask);
    rep.kde = kde_heatmap(rep.droplets, mask.width * res_um_per_px / 1000.0,
                          mask.height * res_um_per_px / 1000.0, kde_nx, kde_ny);
    return rep;
}

}  // namespace spraysim
