#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spraysim/wsp_analysis.hpp"

// Per-paper report writers and the cross-paper aggregation used by the
// analyze/report subcommands.

namespace spraysim {

struct AnalyzedPaper {
    std::string source;          // raster path
    int paper_id = -1;
    std::string canopy_class;    // from the run manifest; "none" if unknown
    PaperReport report;
};

namespace report_detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace report_detail

inline void write_paper_report_text(const AnalyzedPaper& ap, std::ostream& out) {
    const PaperReport& r = ap.report;
    out << "paper: " << ap.source << "\n";
    if (ap.paper_id >= 0) out << "paper_id: " << ap.paper_id << "\n";
    if (!ap.canopy_class.empty()) out << "canopy_class: " << ap.canopy_class << "\n";
    out << "size_px: " << r.width_px << "x" << r.height_px << "\n";
    out << "resolution_um_per_px: " << report_detail::fmt("%.3f", r.resolution_um_per_px) << "\n";
    out << "coverage_percent: " << report_detail::fmt("%.4f", r.coverage_percent) << "\n";
    out << "droplets: " << r.stats.n << "\n";
    out << "mean_area_um2: " << report_detail::fmt("%.2f", r.stats.mean_um2) << "\n";
    out << "median_area_um2: " << report_detail::fmt("%.2f", r.stats.median_um2) << "\n";
    out << "stddev_area_um2: " << report_detail::fmt("%.2f", r.stats.stddev_um2) << "\n";
    out << "mean_eq_diameter_um: "
        << report_detail::fmt("%.2f", r.stats.n ? 2.0 * std::sqrt(r.stats.mean_um2 / kPi) : 0.0) << "\n";
    out << "p33_area_um2: " << report_detail::fmt("%.2f", r.stats.p33_um2) << "\n";
    out << "p66_area_um2: " << report_detail::fmt("%.2f", r.stats.p66_um2) << "\n";
    out << "bins_small_medium_large: " << r.stats.bin_small << " " << r.stats.bin_medium << " "
        << r.stats.bin_large << "\n";
    out << "grid_cv: " << report_detail::fmt("%.4f", r.uniformity.grid_cv) << "\n";
    if (r.uniformity.drift_undefined)
        out << "drift_index: inf\n";
    else
        out << "drift_index: " << report_detail::fmt("%.4f", r.uniformity.drift_index) << "\n";
    out << "kde_bandwidth_mm: " << report_detail::fmt("%.4f", r.kde.bandwidth_mm) << "\n";
}

inline void write_droplet_csv(const PaperReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "id,centroid_x_px,centroid_y_px,centroid_x_mm,centroid_y_mm,area_px,area_um2,eq_diameter_um\n";
    char buf[256];
    for (const DropletRecord& d : r.droplets) {
        std::snprintf(buf, sizeof buf, "%d,%.2f,%.2f,%.4f,%.4f,%lld,%.2f,%.3f\n", d.id, d.centroid_x_px,
                      d.centroid_y_px, d.centroid_x_mm, d.centroid_y_mm, (long long)d.area_px, d.area_um2,
                      d.eq_diameter_um);
        out << buf;
    }
}

// 0..255 PGM of the KDE grid, max density mapped to 0 (dark = dense).
inline GrayImage kde_to_gray(const KdeGrid& g) {
    GrayImage img{g.nx, g.ny, std::vector<uint8_t>(size_t(g.nx) * g.ny, 255)};
    double mx = 0.0;
    for (double d : g.density) mx = std::max(mx, d);
    if (mx <= 0) return img;
    for (size_t i = 0; i < g.density.size(); ++i)
        img.pixels[i] = uint8_t(255.0 - std::round(255.0 * g.density[i] / mx));
    return img;
}

struct ClassSummary {
    std::string canopy_class;
    int n = 0;
    double mean = 0.0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Linear-interpolation quantile (the numpy default) over a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted_asc, double q) {
    if (sorted_asc.empty()) return 0.0;
    const double pos = q * double(sorted_asc.size() - 1);
    const size_t lo = size_t(std::floor(pos));
    const size_t hi = size_t(std::ceil(pos));
    const double frac = pos - double(lo);
    return sorted_asc[lo] * (1.0 - frac) + sorted_asc[hi] * frac;
}

inline ClassSummary summarize_class(const std::string& cls, std::vector<double> values) {
    ClassSummary s;
    s.canopy_class = cls;
    s.n = int(values.size());
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    for (double v : values) s.mean += v;
    s.mean /= double(values.size());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    return s;
}

// Groups per-paper coverage by canopy class, in small/medium/large order
// followed by any unclassified papers.
inline std::vector<ClassSummary> aggregate_coverage(const std::vector<AnalyzedPaper>& papers) {
    std::map<std::string, std::vector<double>> by_class;
    for (const AnalyzedPaper& ap : papers)
        by_class[ap.canopy_class.empty() ? "none" : ap.canopy_class].push_back(ap.report.coverage_percent);
    std::vector<ClassSummary> out;
    for (const char* cls : {"small", "medium", "large"})
        if (by_class.count(cls)) out.push_back(summarize_class(cls, by_class[cls]));
    for (auto& [cls, vals] : by_class)
        if (cls != "small" && cls != "medium" && cls != "large") out.push_back(summarize_class(cls, vals));
    return out;
}

inline void write_boxplot_csv(const std::vector<ClassSummary>& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "canopy_class,n,mean_coverage_percent,min,q1,median,q3,max\n";
    char buf[256];
    for (const ClassSummary& s : summary) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n", s.canopy_class.c_str(),
                      s.n, s.mean, s.min, s.q1, s.median, s.q3, s.max);
        out << buf;
    }
}

}  // namespace spraysim
