#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Physical configuration of the rig and the geometric conversions shared by
// every other module.
//
// World frame: x runs along the travel direction, y along the boom, origin at
// the robot's start position. Units are meters unless a suffix says otherwise.

namespace spraysim {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct BoomConfig {
    int nozzle_count = 4;
    double nozzle_spacing_m = 0.508;
    double boom_height_m = 0.35;
    double fan_angle_deg = 80.0;
    double nozzle_flow_lpm = 0.568;  // liters/minute at reference pressure
    double pressure_psi = 40.0;

    void validate() const {
        if (nozzle_count < 1) throw std::invalid_argument("boom: nozzle_count must be >= 1");
        if (!(nozzle_spacing_m > 0)) throw std::invalid_argument("boom: nozzle_spacing must be > 0");
        if (!(boom_height_m > 0)) throw std::invalid_argument("boom: boom_height must be > 0");
        if (!(fan_angle_deg > 0) || !(fan_angle_deg < 180))
            throw std::invalid_argument("boom: fan_angle must be in (0, 180)");
        if (!(nozzle_flow_lpm > 0)) throw std::invalid_argument("boom: nozzle_flow must be > 0");
    }

    // Nozzles are laid out symmetrically about y = 0; ids are 1-based.
    double nozzle_y(int nozzle_id) const {
        if (nozzle_id < 1 || nozzle_id > nozzle_count)
            throw std::invalid_argument("nozzle id out of range: " + std::to_string(nozzle_id));
        return (nozzle_id - 1 - (nozzle_count - 1) / 2.0) * nozzle_spacing_m;
    }
};

struct CameraConfig {
    int id = 1;
    double h_fov_deg = 60.0;
    double v_fov_deg = 47.0;
    double mount_height_m = 0.9;
    int image_width = 640;
    int image_height = 480;
    std::array<int, 2> covered_nozzles{1, 2};

    void validate() const {
        if (!(mount_height_m > 0)) throw std::invalid_argument("camera: mount_height must be > 0");
        if (!(h_fov_deg > 0) || !(h_fov_deg < 180))
            throw std::invalid_argument("camera: h_fov must be in (0, 180)");
        if (!(v_fov_deg > 0) || !(v_fov_deg < 180))
            throw std::invalid_argument("camera: v_fov must be in (0, 180)");
        if (image_width < 2 || image_height < 2)
            throw std::invalid_argument("camera: image dimensions too small");
        if (covered_nozzles[0] == covered_nozzles[1])
            throw std::invalid_argument("camera: covered_nozzles must name two distinct nozzles");
    }

    // Ground footprint of the nadir view.
    double ground_width_m() const { return 2.0 * mount_height_m * std::tan(deg_to_rad(h_fov_deg) / 2.0); }
    double ground_length_m() const { return 2.0 * mount_height_m * std::tan(deg_to_rad(v_fov_deg) / 2.0); }
};

struct Gsd {
    double h_um_per_px = 0.0;
    double v_um_per_px = 0.0;
};

// Physical size of one image pixel at the ground plane.
inline Gsd ground_sampling_distance(const CameraConfig& cam) {
    cam.validate();
    Gsd g;
    g.h_um_per_px = cam.ground_width_m() / cam.image_width * 1e6;
    g.v_um_per_px = cam.ground_length_m() / cam.image_height * 1e6;
    return g;
}

// Width of the band an even flat-fan tip paints on the ground.
inline double spray_band_width(const BoomConfig& boom) {
    boom.validate();
    return 2.0 * boom.boom_height_m * std::tan(deg_to_rad(boom.fan_angle_deg) / 2.0);
}

// Left image half maps to the first covered nozzle, right half to the second;
// the exact midpoint pixel belongs to the right sector.
inline int sector_for_pixel(const CameraConfig& cam, int pixel_x) {
    if (pixel_x < 0 || pixel_x >= cam.image_width)
        throw std::invalid_argument("sector_for_pixel: pixel_x out of range");
    return pixel_x < cam.image_width / 2 ? cam.covered_nozzles[0] : cam.covered_nozzles[1];
}

struct EllipseFootprint {
    double center_x = 0.0;  // world meters
    double center_y = 0.0;
    double radius_x = 0.0;  // semi-axis along travel
    double radius_y = 0.0;  // semi-axis along boom

    double area() const { return kPi * radius_x * radius_y; }
    bool contains(double x, double y) const {
        const double dx = (x - center_x) / radius_x;
        const double dy = (y - center_y) / radius_y;
        return dx * dx + dy * dy <= 1.0;
    }
};

struct PolygonFootprint {
    std::vector<Vec2> points;  // world meters, implicit closing edge

    double area() const {
        double twice = 0.0;
        const size_t n = points.size();
        for (size_t i = 0; i < n; ++i) {
            const Vec2& a = points[i];
            const Vec2& b = points[(i + 1) % n];
            twice += a.x * b.y - b.x * a.y;
        }
        return std::abs(twice) / 2.0;
    }

    bool contains(double x, double y) const {  // even-odd rule
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

using Footprint = std::variant<EllipseFootprint, PolygonFootprint>;

struct Plant {
    int id = 0;
    double x_m = 0.0;
    double y_m = 0.0;
    double canopy_area_m2 = 0.0;
    Footprint footprint;

    double footprint_area() const {
        return std::visit([](const auto& f) { return f.area(); }, footprint);
    }

    // Axis-aligned bounds of the footprint, world meters.
    void bounds(double& x0, double& y0, double& x1, double& y1) const {
        if (const auto* e = std::get_if<EllipseFootprint>(&footprint)) {
            x0 = e->center_x - e->radius_x;
            x1 = e->center_x + e->radius_x;
            y0 = e->center_y - e->radius_y;
            y1 = e->center_y + e->radius_y;
        } else {
            const auto& poly = std::get<PolygonFootprint>(footprint);
            x0 = y0 = 1e300;
            x1 = y1 = -1e300;
            for (const Vec2& p : poly.points) {
                x0 = std::min(x0, p.x);
                x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y);
                y1 = std::max(y1, p.y);
            }
        }
    }

    bool footprint_contains(double x, double y) const {
        return std::visit([&](const auto& f) { return f.contains(x, y); }, footprint);
    }

    void validate() const {
        if (!(canopy_area_m2 > 0)) throw std::invalid_argument("plant: canopy_area must be > 0");
        const double fa = footprint_area();
        if (std::abs(fa - canopy_area_m2) > 0.01 * canopy_area_m2)
            throw std::invalid_argument("plant " + std::to_string(id) +
                                        ": footprint area disagrees with canopy_area by more than 1%");
    }
};

// Makes a circular default footprint whose area matches exactly.
inline EllipseFootprint circle_footprint(double cx, double cy, double area_m2) {
    const double r = std::sqrt(area_m2 / kPi);
    return EllipseFootprint{cx, cy, r, r};
}

struct WspPlacement {
    int id = 0;
    double x_m = 0.0;  // center
    double y_m = 0.0;
    double width_mm = 76.2;   // long side, laid along the boom axis (world y)
    double height_mm = 25.4;  // short side, along travel (world x)
    double resolution_um_per_px = 42.3;

    void validate() const {
        if (!(width_mm > 0) || !(height_mm > 0))
            throw std::invalid_argument("paper: dimensions must be > 0");
        if (!(resolution_um_per_px > 0))
            throw std::invalid_argument("paper: resolution must be > 0");
    }

    // Raster columns run along the long side, rows along the short side.
    int cols() const { return int(std::lround(width_mm * 1000.0 / resolution_um_per_px)); }
    int rows() const { return int(std::lround(height_mm * 1000.0 / resolution_um_per_px)); }
};

}  // namespace spraysim
