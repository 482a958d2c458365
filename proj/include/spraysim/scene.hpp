#pragma once

#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spraysim/control.hpp"
#include "spraysim/deposition.hpp"
#include "spraysim/detector.hpp"
#include "spraysim/geometry.hpp"

// Scene: the full simulation input, loaded from a single JSON document with
// sections boom, cameras, plants, papers, control, deposition, seed.
// Unknown keys anywhere in the document are rejected. Immutable after load.

namespace spraysim {

using json = nlohmann::json;

struct Scene {
    BoomConfig boom;
    std::vector<CameraConfig> cameras;
    std::vector<Plant> plants;
    std::vector<WspPlacement> papers;
    ControlConfig control;
    OracleNoise noise;
    DepositionConfig deposition;
    uint64_t seed = 0;

    void validate() const;
    double pass_start_m() const { return deposition.pass_x_start_m; }
    double pass_end_m() const;
    double camera_y(const CameraConfig& cam) const {
        return (boom.nozzle_y(cam.covered_nozzles[0]) + boom.nozzle_y(cam.covered_nozzles[1])) / 2.0;
    }

    static Scene from_json(const json& j);
    static Scene from_file(const std::string& path);
    json to_json() const;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config: " + where + ": " + what);
}

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) config_error(where, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) config_error(where, "unknown key '" + key + "'");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(where, "bad value for '" + key + "'");
    }
}

template <typename T>
T get_required(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) config_error(where, "missing required key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(where, "bad value for '" + key + "'");
    }
}

}  // namespace detail

inline void Scene::validate() const {
    boom.validate();
    control.validate();
    noise.validate();
    deposition.validate();
    for (const CameraConfig& c : cameras) c.validate();
    for (const Plant& p : plants) p.validate();
    for (const WspPlacement& p : papers) p.validate();

    // Every nozzle must be covered by exactly one camera.
    std::map<int, int> coverage;
    for (const CameraConfig& c : cameras)
        for (int n : c.covered_nozzles) {
            if (n < 1 || n > boom.nozzle_count)
                detail::config_error("cameras", "covered nozzle " + std::to_string(n) + " does not exist");
            coverage[n]++;
        }
    for (int n = 1; n <= boom.nozzle_count; ++n) {
        const int cnt = coverage.count(n) ? coverage.at(n) : 0;
        if (cnt != 1)
            detail::config_error("cameras", "nozzle " + std::to_string(n) + " covered by " +
                                                std::to_string(cnt) + " cameras (need exactly 1)");
    }

    std::set<int> plant_ids, paper_ids, camera_ids;
    for (const Plant& p : plants)
        if (!plant_ids.insert(p.id).second) detail::config_error("plants", "duplicate id");
    for (const WspPlacement& p : papers)
        if (!paper_ids.insert(p.id).second) detail::config_error("papers", "duplicate id");
    for (const CameraConfig& c : cameras)
        if (!camera_ids.insert(c.id).second) detail::config_error("cameras", "duplicate id");
}

inline double Scene::pass_end_m() const {
    if (deposition.pass_x_end_m > deposition.pass_x_start_m) return deposition.pass_x_end_m;
    double x = deposition.pass_x_start_m;
    for (const Plant& p : plants) x = std::max(x, p.x_m);
    for (const WspPlacement& p : papers) x = std::max(x, p.x_m + p.height_mm / 2000.0);
    return x + 1.0;
}

inline Scene Scene::from_json(const json& root) {
    Scene s;
    detail::reject_unknown_keys(
        root, {"boom", "cameras", "plants", "papers", "control", "deposition", "seed"}, "top level");

    if (root.contains("boom")) {
        const json& b = root.at("boom");
        detail::reject_unknown_keys(b,
                                    {"nozzle_count", "nozzle_spacing_m", "boom_height_m", "fan_angle_deg",
                                     "nozzle_flow_lpm", "pressure_psi"},
                                    "boom");
        s.boom.nozzle_count = detail::get_or(b, "nozzle_count", s.boom.nozzle_count, "boom");
        s.boom.nozzle_spacing_m = detail::get_or(b, "nozzle_spacing_m", s.boom.nozzle_spacing_m, "boom");
        s.boom.boom_height_m = detail::get_or(b, "boom_height_m", s.boom.boom_height_m, "boom");
        s.boom.fan_angle_deg = detail::get_or(b, "fan_angle_deg", s.boom.fan_angle_deg, "boom");
        s.boom.nozzle_flow_lpm = detail::get_or(b, "nozzle_flow_lpm", s.boom.nozzle_flow_lpm, "boom");
        s.boom.pressure_psi = detail::get_or(b, "pressure_psi", s.boom.pressure_psi, "boom");
    }

    if (root.contains("cameras")) {
        if (!root.at("cameras").is_array()) detail::config_error("cameras", "expected an array");
        for (const json& c : root.at("cameras")) {
            detail::reject_unknown_keys(c,
                                        {"id", "h_fov_deg", "v_fov_deg", "mount_height_m", "image_width",
                                         "image_height", "covered_nozzles"},
                                        "cameras");
            CameraConfig cam;
            cam.id = detail::get_required<int>(c, "id", "cameras");
            cam.h_fov_deg = detail::get_or(c, "h_fov_deg", cam.h_fov_deg, "cameras");
            cam.v_fov_deg = detail::get_or(c, "v_fov_deg", cam.v_fov_deg, "cameras");
            cam.mount_height_m = detail::get_or(c, "mount_height_m", cam.mount_height_m, "cameras");
            cam.image_width = detail::get_or(c, "image_width", cam.image_width, "cameras");
            cam.image_height = detail::get_or(c, "image_height", cam.image_height, "cameras");
            const auto covered = detail::get_required<std::vector<int>>(c, "covered_nozzles", "cameras");
            if (covered.size() != 2) detail::config_error("cameras", "covered_nozzles must list 2 nozzles");
            cam.covered_nozzles = {covered[0], covered[1]};
            s.cameras.push_back(cam);
        }
    }

    if (root.contains("plants")) {
        if (!root.at("plants").is_array()) detail::config_error("plants", "expected an array");
        for (const json& p : root.at("plants")) {
            detail::reject_unknown_keys(p, {"id", "x_m", "y_m", "canopy_area_m2", "ellipse", "polygon"},
                                        "plants");
            Plant plant;
            plant.id = detail::get_required<int>(p, "id", "plants");
            plant.x_m = detail::get_required<double>(p, "x_m", "plants");
            plant.y_m = detail::get_required<double>(p, "y_m", "plants");
            plant.canopy_area_m2 = detail::get_required<double>(p, "canopy_area_m2", "plants");
            if (p.contains("ellipse") && p.contains("polygon"))
                detail::config_error("plants", "give either ellipse or polygon, not both");
            if (p.contains("ellipse")) {
                const json& e = p.at("ellipse");
                detail::reject_unknown_keys(e, {"radius_x_m", "radius_y_m"}, "plants.ellipse");
                EllipseFootprint f;
                f.center_x = plant.x_m;
                f.center_y = plant.y_m;
                f.radius_x = detail::get_required<double>(e, "radius_x_m", "plants.ellipse");
                f.radius_y = detail::get_required<double>(e, "radius_y_m", "plants.ellipse");
                plant.footprint = f;
            } else if (p.contains("polygon")) {
                PolygonFootprint f;
                for (const json& pt : p.at("polygon")) {
                    if (!pt.is_array() || pt.size() != 2) detail::config_error("plants.polygon", "bad point");
                    f.points.push_back(Vec2{pt[0].get<double>(), pt[1].get<double>()});
                }
                if (f.points.size() < 3) detail::config_error("plants.polygon", "need at least 3 points");
                plant.footprint = f;
            } else {
                plant.footprint = circle_footprint(plant.x_m, plant.y_m, plant.canopy_area_m2);
            }
            s.plants.push_back(std::move(plant));
        }
    }

    if (root.contains("papers")) {
        if (!root.at("papers").is_array()) detail::config_error("papers", "expected an array");
        for (const json& p : root.at("papers")) {
            detail::reject_unknown_keys(
                p, {"id", "x_m", "y_m", "width_mm", "height_mm", "resolution_um_per_px"}, "papers");
            WspPlacement w;
            w.id = detail::get_required<int>(p, "id", "papers");
            w.x_m = detail::get_required<double>(p, "x_m", "papers");
            w.y_m = detail::get_required<double>(p, "y_m", "papers");
            w.width_mm = detail::get_or(p, "width_mm", w.width_mm, "papers");
            w.height_mm = detail::get_or(p, "height_mm", w.height_mm, "papers");
            w.resolution_um_per_px = detail::get_or(p, "resolution_um_per_px", w.resolution_um_per_px, "papers");
            s.papers.push_back(w);
        }
    }

    if (root.contains("control")) {
        const json& c = root.at("control");
        detail::reject_unknown_keys(c,
                                    {"area_t1_m2", "area_t2_m2", "duty_levels", "pwm_period_ms",
                                     "min_pulse_ms", "latency_budget_ms", "confidence_threshold",
                                     "frame_interval_ms", "fn_rate", "fp_rate", "area_jitter"},
                                    "control");
        s.control.area_t1_m2 = detail::get_or(c, "area_t1_m2", s.control.area_t1_m2, "control");
        s.control.area_t2_m2 = detail::get_or(c, "area_t2_m2", s.control.area_t2_m2, "control");
        if (c.contains("duty_levels")) {
            const auto lv = detail::get_required<std::vector<int>>(c, "duty_levels", "control");
            if (lv.size() != 3) detail::config_error("control", "duty_levels must list 3 values");
            s.control.duty_levels = {lv[0], lv[1], lv[2]};
        }
        s.control.pwm_period_ms = detail::get_or(c, "pwm_period_ms", s.control.pwm_period_ms, "control");
        s.control.min_pulse_ms = detail::get_or(c, "min_pulse_ms", s.control.min_pulse_ms, "control");
        s.control.latency_budget_ms =
            detail::get_or(c, "latency_budget_ms", s.control.latency_budget_ms, "control");
        s.control.confidence_threshold =
            detail::get_or(c, "confidence_threshold", s.control.confidence_threshold, "control");
        s.control.frame_interval_ms =
            detail::get_or(c, "frame_interval_ms", s.control.frame_interval_ms, "control");
        s.noise.fn_rate = detail::get_or(c, "fn_rate", s.noise.fn_rate, "control");
        s.noise.fp_rate = detail::get_or(c, "fp_rate", s.noise.fp_rate, "control");
        s.noise.area_jitter = detail::get_or(c, "area_jitter", s.noise.area_jitter, "control");
    }

    if (root.contains("deposition")) {
        const json& d = root.at("deposition");
        detail::reject_unknown_keys(d,
                                    {"robot_speed_mps", "droplet_median_um", "droplet_gsigma",
                                     "spread_factor", "step_ms", "pass_x_start_m", "pass_x_end_m"},
                                    "deposition");
        s.deposition.robot_speed_mps =
            detail::get_or(d, "robot_speed_mps", s.deposition.robot_speed_mps, "deposition");
        s.deposition.droplet_median_um =
            detail::get_or(d, "droplet_median_um", s.deposition.droplet_median_um, "deposition");
        s.deposition.droplet_gsigma =
            detail::get_or(d, "droplet_gsigma", s.deposition.droplet_gsigma, "deposition");
        s.deposition.spread_factor =
            detail::get_or(d, "spread_factor", s.deposition.spread_factor, "deposition");
        s.deposition.step_ms = detail::get_or(d, "step_ms", s.deposition.step_ms, "deposition");
        s.deposition.pass_x_start_m =
            detail::get_or(d, "pass_x_start_m", s.deposition.pass_x_start_m, "deposition");
        s.deposition.pass_x_end_m =
            detail::get_or(d, "pass_x_end_m", s.deposition.pass_x_end_m, "deposition");
    }

    s.seed = detail::get_or<uint64_t>(root, "seed", 0, "seed");
    s.validate();
    return s;
}

inline Scene Scene::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + path + ": not valid JSON: " + e.what());
    }
    return from_json(j);
}

inline json Scene::to_json() const {
    json root;
    root["boom"] = {{"nozzle_count", boom.nozzle_count},
                    {"nozzle_spacing_m", boom.nozzle_spacing_m},
                    {"boom_height_m", boom.boom_height_m},
                    {"fan_angle_deg", boom.fan_angle_deg},
                    {"nozzle_flow_lpm", boom.nozzle_flow_lpm},
                    {"pressure_psi", boom.pressure_psi}};
    root["cameras"] = json::array();
    for (const CameraConfig& c : cameras)
        root["cameras"].push_back({{"id", c.id},
                                   {"h_fov_deg", c.h_fov_deg},
                                   {"v_fov_deg", c.v_fov_deg},
                                   {"mount_height_m", c.mount_height_m},
                                   {"image_width", c.image_width},
                                   {"image_height", c.image_height},
                                   {"covered_nozzles", std::vector<int>{c.covered_nozzles[0], c.covered_nozzles[1]}}});
    root["plants"] = json::array();
    for (const Plant& p : plants) {
        json jp = {{"id", p.id}, {"x_m", p.x_m}, {"y_m", p.y_m}, {"canopy_area_m2", p.canopy_area_m2}};
        if (const auto* e = std::get_if<EllipseFootprint>(&p.footprint)) {
            jp["ellipse"] = {{"radius_x_m", e->radius_x}, {"radius_y_m", e->radius_y}};
        } else {
            const auto& poly = std::get<PolygonFootprint>(p.footprint);
            json pts = json::array();
            for (const Vec2& v : poly.points) pts.push_back({v.x, v.y});
            jp["polygon"] = pts;
        }
        root["plants"].push_back(jp);
    }
    root["papers"] = json::array();
    for (const WspPlacement& p : papers)
        root["papers"].push_back({{"id", p.id},
                                  {"x_m", p.x_m},
                                  {"y_m", p.y_m},
                                  {"width_mm", p.width_mm},
                                  {"height_mm", p.height_mm},
                                  {"resolution_um_per_px", p.resolution_um_per_px}});
    root["control"] = {{"area_t1_m2", control.area_t1_m2},
                       {"area_t2_m2", control.area_t2_m2},
                       {"duty_levels", std::vector<int>{control.duty_levels[0], control.duty_levels[1],
                                                        control.duty_levels[2]}},
                       {"pwm_period_ms", control.pwm_period_ms},
                       {"min_pulse_ms", control.min_pulse_ms},
                       {"latency_budget_ms", control.latency_budget_ms},
                       {"confidence_threshold", control.confidence_threshold},
                       {"frame_interval_ms", control.frame_interval_ms},
                       {"fn_rate", noise.fn_rate},
                       {"fp_rate", noise.fp_rate},
                       {"area_jitter", noise.area_jitter}};
    root["deposition"] = {{"robot_speed_mps", deposition.robot_speed_mps},
                          {"droplet_median_um", deposition.droplet_median_um},
                          {"droplet_gsigma", deposition.droplet_gsigma},
                          {"spread_factor", deposition.spread_factor},
                          {"step_ms", deposition.step_ms},
                          {"pass_x_start_m", deposition.pass_x_start_m},
                          {"pass_x_end_m", deposition.pass_x_end_m}};
    root["seed"] = seed;
    return root;
}

}  // namespace spraysim
