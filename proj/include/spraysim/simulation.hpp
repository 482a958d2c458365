#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spraysim/control.hpp"
#include "spraysim/deposition.hpp"
#include "spraysim/netpbm.hpp"
#include "spraysim/scene.hpp"
#include "spraysim/version.hpp"

// End-to-end pass: frames are ticked through detect -> decide -> encode, the
// encoded bytes drive the MCU emulator, and the emulator's valve schedule
// drives droplet deposition onto the scene's papers.

namespace spraysim {

// World -> pixel projection for a nadir camera at robot position `robot_x`.
// Pixel x runs along the boom (world y), pixel y along travel (world x).
struct CameraView {
    const CameraConfig* cam = nullptr;
    double cam_x = 0.0;  // robot x
    double cam_y = 0.0;  // boom-frame center
    double ground_w = 0.0;
    double ground_l = 0.0;

    double px_x(double world_y) const { return (world_y - (cam_y - ground_w / 2)) / ground_w * cam->image_width; }
    double px_y(double world_x) const { return (world_x - (cam_x - ground_l / 2)) / ground_l * cam->image_height; }
    double scale_x() const { return cam->image_width / ground_w; }   // px per meter along boom
    double scale_y() const { return cam->image_height / ground_l; }  // px per meter along travel
};

inline CameraView make_view(const Scene& scene, const CameraConfig& cam, double robot_x) {
    CameraView v;
    v.cam = &cam;
    v.cam_x = robot_x;
    v.cam_y = scene.camera_y(cam);
    v.ground_w = cam.ground_width_m();
    v.ground_l = cam.ground_length_m();
    return v;
}

// Projects every plant whose footprint lies fully inside the camera's ground
// rect; the detector contract requires in-bounds projections, and partially
// visible plants would report clipped canopy areas.
inline std::vector<PlantProjection> project_plants(const Scene& scene, const CameraView& view) {
    std::vector<PlantProjection> out;
    for (const Plant& p : scene.plants) {
        double x0, y0, x1, y1;
        p.bounds(x0, y0, x1, y1);
        if (x0 < view.cam_x - view.ground_l / 2 || x1 > view.cam_x + view.ground_l / 2) continue;
        if (y0 < view.cam_y - view.ground_w / 2 || y1 > view.cam_y + view.ground_w / 2) continue;
        PlantProjection proj;
        proj.plant_id = p.id;
        if (const auto* e = std::get_if<EllipseFootprint>(&p.footprint)) {
            PixelEllipse pe;
            pe.cx = view.px_x(e->center_y);
            pe.cy = view.px_y(e->center_x);
            pe.rx = e->radius_y * view.scale_x();
            pe.ry = e->radius_x * view.scale_y();
            proj.shape = pe;
        } else {
            const auto& poly = std::get<PolygonFootprint>(p.footprint);
            PixelPolygon pp;
            for (const Vec2& w : poly.points) pp.points.push_back(Vec2{view.px_x(w.y), view.px_y(w.x)});
            proj.shape = pp;
        }
        out.push_back(std::move(proj));
    }
    return out;
}

struct TickLogRow {
    int64_t tick = 0;
    double sim_time_ms = 0.0;
    NozzleDecision decision;
};

struct FrameExport {
    int64_t frame = 0;
    std::vector<Detection> detections;            // all cameras, image-frame coords per camera
    std::vector<int> detection_camera;            // camera id per detection
    std::vector<std::pair<int, Box>> truth_boxes; // (camera id, clipped truth box)
};

struct SimRun {
    Scene scene;
    uint64_t seed = 0;
    double duration_ms = 0.0;
    int64_t n_ticks = 0;
    std::vector<TickLogRow> decision_log;
    std::vector<double> tick_wall_latency_ms;
    std::vector<bool> tick_over_budget;
    std::vector<TimedBytes> wire;
    std::vector<FrameExport> frames;
    PassResult pass;
};

// Runs the whole pipeline in memory. The run is a pure function of
// (scene, seed); wall-clock latencies are measured as diagnostics but do not
// influence any output.
inline SimRun simulate(const Scene& scene, uint64_t seed, bool record_droplets = false) {
    scene.validate();
    SimRun run;
    run.scene = scene;
    run.seed = seed;
    const double speed = scene.deposition.robot_speed_mps;
    run.duration_ms = (scene.pass_end_m() - scene.pass_start_m()) / speed * 1000.0;

    const double fi = scene.control.frame_interval_ms;
    for (int64_t tick = 0; tick * fi < run.duration_ms; ++tick) {
        const double t_ms = tick * fi;
        const double robot_x = scene.pass_start_m() + speed * t_ms / 1000.0;

        std::vector<CameraFrameTruth> truths;
        FrameExport fx;
        fx.frame = tick;
        for (const CameraConfig& cam : scene.cameras) {
            const CameraView view = make_view(scene, cam, robot_x);
            CameraFrameTruth ft;
            ft.camera_id = cam.id;
            ft.projections = project_plants(scene, view);
            for (const PlantProjection& pr : ft.projections) {
                auto mask = detail::rasterize_shape(pr.shape, 1.0, cam.image_width, cam.image_height);
                if (mask && mask->count() > 0) fx.truth_boxes.emplace_back(cam.id, detail::tight_box(*mask));
            }
            truths.push_back(std::move(ft));
        }

        TickResult tr;
        try {
            tr = pipeline_tick(truths, scene.boom, scene.cameras, scene.control, scene.noise, seed,
                               uint64_t(tick));
        } catch (const std::exception& e) {
            throw std::runtime_error("tick " + std::to_string(tick) + ": " + e.what());
        }
        for (const CameraDetections& cd : tr.detections)
            for (const Detection& d : cd.detections) {
                fx.detections.push_back(d);
                fx.detection_camera.push_back(cd.camera_id);
            }
        run.frames.push_back(std::move(fx));
        run.wire.push_back(TimedBytes{t_ms, tr.wire_bytes});
        run.tick_wall_latency_ms.push_back(tr.latency_ms);
        run.tick_over_budget.push_back(tr.over_budget);
        for (const NozzleDecision& d : tr.decisions)
            run.decision_log.push_back(TickLogRow{tick, t_ms, d});
        ++run.n_ticks;
    }

    DepositionConfig dep = scene.deposition;
    dep.pass_x_start_m = scene.pass_start_m();
    run.pass = run_pass(scene.boom, scene.papers, run.wire, dep, seed, run.duration_ms,
                        scene.control.pwm_period_ms, record_droplets);
    return run;
}

// --- artifact writing ---------------------------------------------------

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string paper_raster_name(int paper_id, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "paper_%02d.%s", paper_id, ext);
    return buf;
}

// run-length encoding of a detection mask, runs alternate starting at 0
inline std::string rle_encode(const DetectionMask& m) {
    std::string s = std::to_string(m.x0) + "," + std::to_string(m.y0) + "," + std::to_string(m.width) +
                    "," + std::to_string(m.height) + ":";
    uint8_t cur = 0;
    int64_t run = 0;
    bool first = true;
    for (size_t i = 0; i < m.v.size(); ++i) {
        if (m.v[i] == cur) {
            ++run;
        } else {
            s += (first ? "" : ",") + std::to_string(run);
            first = false;
            cur = m.v[i];
            run = 1;
        }
    }
    s += (first ? "" : ",") + std::to_string(run);
    return s;
}

}  // namespace detail

// True canopy class of the plant nearest to a paper (within 0.5 m), or -1.
inline int paper_truth_class(const Scene& scene, const WspPlacement& paper) {
    const Plant* best = nullptr;
    double best_d2 = 0.25;  // (0.5 m)^2
    for (const Plant& p : scene.plants) {
        const double dx = p.x_m - paper.x_m, dy = p.y_m - paper.y_m;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best = &p;
            best_d2 = d2;
        }
    }
    if (!best) return -1;
    return int(classify_canopy(best->canopy_area_m2, scene.control));
}

struct WriteOptions {
    bool write_ppm = false;
    bool write_latency_report = false;
};

// Writes manifest.json, decisions.csv, wire.txt, detections.txt, truths.txt
// and rasters/*.pgm under out_dir. All content is reproducible from
// (config, seed); wall-clock latencies only appear in the optional latency
// report, which is excluded from the reproducibility contract.
inline void write_run(const SimRun& run, const std::filesystem::path& out_dir,
                      const WriteOptions& opt = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "rasters");

    {
        std::ofstream csv(out_dir / "decisions.csv");
        csv << "tick,sim_time_ms,nozzle,action,duty,canopy_class,latency_ms,clamped_flag\n";
        for (const TickLogRow& row : run.decision_log) {
            const NozzleDecision& d = row.decision;
            csv << row.tick << ',' << detail::fmt("%.1f", row.sim_time_ms) << ',' << d.nozzle << ','
                << (d.duty > 0 ? "ON" : "OFF") << ',' << d.duty << ','
                << (d.duty > 0 ? to_string(d.canopy) : "-") << ",0.000," << (d.min_pulse_clamped ? 1 : 0)
                << '\n';
        }
    }
    {
        std::ofstream wire(out_dir / "wire.txt", std::ios::binary);
        for (const TimedBytes& tb : run.wire)
            for (const auto& cmdline : decode(tb.bytes, run.scene.boom.nozzle_count).commands)
                wire << detail::fmt("%.1f", tb.t_ms) << ' ' << encode(cmdline, run.scene.boom.nozzle_count);
    }
    {
        std::ofstream det(out_dir / "detections.txt");
        std::ofstream tru(out_dir / "truths.txt");
        for (const FrameExport& fx : run.frames) {
            for (size_t i = 0; i < fx.detections.size(); ++i) {
                const Detection& d = fx.detections[i];
                // frame ids are (tick, camera) combined so eval treats each
                // camera image independently
                const int64_t image_id = fx.frame * 100 + fx.detection_camera[i];
                det << image_id << ' ' << d.class_id << ' ' << detail::fmt("%.6f", d.confidence) << ' '
                    << detail::fmt("%.2f", d.box.x_min) << ' ' << detail::fmt("%.2f", d.box.y_min) << ' '
                    << detail::fmt("%.2f", d.box.x_max) << ' ' << detail::fmt("%.2f", d.box.y_max);
                if (d.mask) det << ' ' << detail::rle_encode(*d.mask);
                det << '\n';
            }
            for (const auto& [cam_id, box] : fx.truth_boxes) {
                const int64_t image_id = fx.frame * 100 + cam_id;
                tru << image_id << " 0 " << detail::fmt("%.2f", box.x_min) << ' '
                    << detail::fmt("%.2f", box.y_min) << ' ' << detail::fmt("%.2f", box.x_max) << ' '
                    << detail::fmt("%.2f", box.y_max) << '\n';
            }
        }
    }

    json manifest;
    manifest["schema"] = "spraysim-run/1";
    manifest["tool_version"] = kVersion;
    manifest["defaults_version"] = kDefaultsVersion;
    manifest["seed"] = run.seed;
    manifest["config"] = run.scene.to_json();
    manifest["pass"] = {{"duration_ms", run.duration_ms},
                        {"ticks", run.n_ticks},
                        {"x_start_m", run.scene.pass_start_m()},
                        {"x_end_m", run.scene.pass_end_m()}};
    manifest["outputs"] = {{"decisions", "decisions.csv"},
                           {"wire", "wire.txt"},
                           {"detections", "detections.txt"},
                           {"truths", "truths.txt"}};
    json papers = json::array();
    for (size_t i = 0; i < run.scene.papers.size(); ++i) {
        const WspPlacement& p = run.scene.papers[i];
        const int cls = paper_truth_class(run.scene, p);
        json jp = {{"id", p.id},
                   {"file", std::string("rasters/") + detail::paper_raster_name(p.id, "pgm")},
                   {"canopy_class", cls < 0 ? "none" : to_string(CanopyClass(cls))}};
        papers.push_back(jp);
        write_pgm(run.pass.rasters[i].to_gray(), (out_dir / "rasters" / detail::paper_raster_name(p.id, "pgm")).string());
        if (opt.write_ppm)
            write_ppm(run.pass.rasters[i].to_rgb(), (out_dir / "rasters" / detail::paper_raster_name(p.id, "ppm")).string());
    }
    manifest["papers"] = papers;
    json totals = json::array();
    for (const NozzleTotals& t : run.pass.per_nozzle)
        totals.push_back({{"nozzle", t.nozzle},
                          {"open_time_ms", t.open_time_ms},
                          {"emitted_droplets", t.emitted_droplets},
                          {"paper_hits", t.paper_hits},
                          {"expected_volume_ml", t.expected_volume_ml}});
    manifest["nozzle_totals"] = totals;
    {
        std::ofstream mf(out_dir / "manifest.json");
        mf << manifest.dump(2) << '\n';
    }

    if (opt.write_latency_report) {
        std::ofstream lat(out_dir / "latency.csv");
        lat << "tick,wall_latency_ms,over_budget\n";
        for (size_t i = 0; i < run.tick_wall_latency_ms.size(); ++i)
            lat << i << ',' << detail::fmt("%.3f", run.tick_wall_latency_ms[i]) << ','
                << (run.tick_over_budget[i] ? 1 : 0) << '\n';
    }
}

}  // namespace spraysim
