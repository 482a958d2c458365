#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spraysim/detector.hpp"
#include "spraysim/geometry.hpp"
#include "spraysim/protocol.hpp"

// Detection -> actuation decisions: canopy-size classification, duty
// selection, minimum-pulse enforcement, and the per-frame pipeline tick.

namespace spraysim {

struct ControlConfig {
    double area_t1_m2 = 0.01;  // small/medium boundary
    double area_t2_m2 = 0.03;  // medium/large boundary
    std::array<int, 3> duty_levels{85, 170, 255};
    double pwm_period_ms = 100.0;
    double min_pulse_ms = 20.0;
    double latency_budget_ms = 250.0;
    double confidence_threshold = 0.5;
    double frame_interval_ms = 100.0;

    void validate() const {
        if (!(area_t1_m2 > 0) || !(area_t1_m2 < area_t2_m2))
            throw std::invalid_argument("control: need 0 < t1 < t2");
        if (!(duty_levels[0] > 0 && duty_levels[0] < duty_levels[1] && duty_levels[1] < duty_levels[2] &&
              duty_levels[2] <= 255))
            throw std::invalid_argument("control: need 0 < PWM1 < PWM2 < PWM3 <= 255");
        if (!(pwm_period_ms > 0)) throw std::invalid_argument("control: pwm_period must be > 0");
        if (!(min_pulse_ms >= 0) || min_pulse_ms > pwm_period_ms)
            throw std::invalid_argument("control: need 0 <= min_pulse <= pwm_period");
        if (latency_budget_ms < 0) throw std::invalid_argument("control: latency_budget must be >= 0");
        if (confidence_threshold < 0 || confidence_threshold > 1)
            throw std::invalid_argument("control: confidence_threshold must be in [0,1]");
        if (!(frame_interval_ms > 0)) throw std::invalid_argument("control: frame_interval must be > 0");
    }
};

enum class CanopyClass { Small = 0, Medium = 1, Large = 2 };

inline const char* to_string(CanopyClass c) {
    switch (c) {
        case CanopyClass::Small: return "small";
        case CanopyClass::Medium: return "medium";
        default: return "large";
    }
}

// Half-open intervals: [0, t1) small, [t1, t2) medium, [t2, inf) large.
inline CanopyClass classify_canopy(double area_m2, const ControlConfig& cfg) {
    if (area_m2 < 0) throw std::invalid_argument("classify_canopy: negative area");
    if (area_m2 < cfg.area_t1_m2) return CanopyClass::Small;
    if (area_m2 < cfg.area_t2_m2) return CanopyClass::Medium;
    return CanopyClass::Large;
}

struct NozzleDecision {
    int nozzle = 0;
    int duty = 0;  // 0 = OFF
    CanopyClass canopy = CanopyClass::Small;
    bool min_pulse_clamped = false;
    std::vector<int> source_plant_ids;  // truth ids of contributing detections, -1 for spurious
};

// Detections from one camera frame, in that camera's pixel space.
struct CameraDetections {
    int camera_id = 0;
    std::vector<Detection> detections;
};

// Maps each detection to a nozzle via its box-center pixel column; per nozzle
// the largest canopy class wins. Emits exactly one decision per nozzle, in
// nozzle-id order; nozzles without detections are OFF.
inline std::vector<NozzleDecision> decide_frame(const std::vector<CameraDetections>& frames,
                                                const BoomConfig& boom,
                                                const std::vector<CameraConfig>& cameras,
                                                const ControlConfig& cfg) {
    std::vector<NozzleDecision> decisions(size_t(boom.nozzle_count));
    for (int n = 1; n <= boom.nozzle_count; ++n) decisions[size_t(n - 1)].nozzle = n;

    for (const CameraDetections& frame : frames) {
        const CameraConfig* cam = nullptr;
        for (const CameraConfig& c : cameras)
            if (c.id == frame.camera_id) cam = &c;
        if (!cam) throw std::invalid_argument("decide_frame: unknown camera id");
        for (const Detection& d : frame.detections) {
            if (d.confidence < cfg.confidence_threshold) continue;
            const double center_x = (d.box.x_min + d.box.x_max) / 2.0;
            const int px = std::clamp(int(center_x), 0, cam->image_width - 1);
            const int nozzle = sector_for_pixel(*cam, px);
            if (nozzle < 1 || nozzle > boom.nozzle_count) continue;
            const PhysicalArea area = mask_area_physical(d, *cam);
            const CanopyClass cls = classify_canopy(area.area_m2, cfg);
            NozzleDecision& dec = decisions[size_t(nozzle - 1)];
            if (dec.duty == 0 || cls > dec.canopy) {
                dec.canopy = cls;
                dec.duty = cfg.duty_levels[size_t(cls)];
            }
            dec.source_plant_ids.push_back(d.truth_plant_id);
        }
    }
    return decisions;
}

// Raises any nonzero duty whose on-time would undercut the solenoid's
// minimum pulse; the clamp is flagged on the decision.
inline NozzleDecision enforce_min_pulse(NozzleDecision d, const ControlConfig& cfg) {
    if (d.duty <= 0) return d;
    const double on_time_ms = d.duty * cfg.pwm_period_ms / 255.0;
    if (on_time_ms < cfg.min_pulse_ms) {
        d.duty = int(std::ceil(255.0 * cfg.min_pulse_ms / cfg.pwm_period_ms));
        d.min_pulse_clamped = true;
    }
    return d;
}

inline std::string encode_decisions(const std::vector<NozzleDecision>& decisions) {
    std::string wire;
    for (const NozzleDecision& d : decisions) {
        const WireCommand cmd = d.duty > 0 ? WireCommand{Verb::On, d.nozzle, d.duty}
                                           : WireCommand{Verb::Off, d.nozzle, 0};
        wire += encode(cmd, 9);
    }
    return wire;
}

// Plant projections for one camera, ready for the detector.
struct CameraFrameTruth {
    int camera_id = 0;
    std::vector<PlantProjection> projections;
};

struct TickResult {
    std::vector<NozzleDecision> decisions;
    std::vector<CameraDetections> detections;
    std::string wire_bytes;
    double latency_ms = 0.0;  // wall-clock, detect through encode
    bool over_budget = false;
};

using WallClock = std::function<double()>;  // milliseconds, monotone

inline double steady_clock_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// One frame through the full chain: detect -> decide -> min-pulse -> encode.
// Wall latency is measured around the chain and flagged against the budget.
inline TickResult pipeline_tick(const std::vector<CameraFrameTruth>& frame_truths, const BoomConfig& boom,
                                const std::vector<CameraConfig>& cameras, const ControlConfig& cfg,
                                const OracleNoise& noise, uint64_t seed, uint64_t frame_index,
                                const WallClock& clock = steady_clock_ms) {
    const double t0 = clock();
    TickResult r;
    for (const CameraFrameTruth& ft : frame_truths) {
        const CameraConfig* cam = nullptr;
        for (const CameraConfig& c : cameras)
            if (c.id == ft.camera_id) cam = &c;
        if (!cam) throw std::invalid_argument("pipeline_tick: unknown camera id");
        Rng rng = derive_rng(seed, {kStreamDetector, frame_index, uint64_t(ft.camera_id)});
        CameraDetections cd;
        cd.camera_id = ft.camera_id;
        cd.detections = detect(ft.projections, noise, rng, cam->image_width, cam->image_height);
        r.detections.push_back(std::move(cd));
    }
    r.decisions = decide_frame(r.detections, boom, cameras, cfg);
    for (NozzleDecision& d : r.decisions) d = enforce_min_pulse(d, cfg);
    r.wire_bytes = encode_decisions(r.decisions);
    r.latency_ms = clock() - t0;
    r.over_budget = r.latency_ms > cfg.latency_budget_ms;
    return r;
}

}  // namespace spraysim
