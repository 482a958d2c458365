#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spraysim/geometry.hpp"
#include "spraysim/protocol.hpp"
#include "spraysim/raster.hpp"
#include "spraysim/rng.hpp"

// Stochastic droplet deposition. Valve schedules come from the MCU emulator;
// while a valve is open its nozzle emits droplets as a Poisson process at the
// full-flow rate (PWM modulates open time, not instantaneous flow). Each
// droplet lands at the boom's x position at its emission instant, uniformly
// across the nozzle's fan band in y, and stamps a stain disk on any paper it
// hits.

namespace spraysim {

struct DepositionConfig {
    double robot_speed_mps = 0.5;
    double droplet_median_um = 150.0;  // log-normal median diameter
    double droplet_gsigma = 1.6;       // geometric standard deviation
    double spread_factor = 2.1;        // stain diameter / droplet diameter
    double step_ms = 5.0;              // simulation step
    double pass_x_start_m = 0.0;
    double pass_x_end_m = 0.0;  // <= start means "derive from the scene"

    void validate() const {
        if (!(robot_speed_mps > 0)) throw std::invalid_argument("deposition: robot_speed must be > 0");
        if (!(droplet_median_um > 0)) throw std::invalid_argument("deposition: droplet median must be > 0");
        if (!(droplet_gsigma > 1)) throw std::invalid_argument("deposition: droplet gsigma must be > 1");
        if (!(spread_factor >= 1)) throw std::invalid_argument("deposition: spread_factor must be >= 1");
        if (!(step_ms > 0)) throw std::invalid_argument("deposition: step must be > 0");
    }

    double sigma_log() const { return std::log(droplet_gsigma); }

    // Mean droplet volume in mL: E[pi/6 d^3] for log-normal d.
    double mean_droplet_volume_ml() const {
        const double s2 = sigma_log() * sigma_log();
        const double e_d3_um3 = std::pow(droplet_median_um, 3) * std::exp(4.5 * s2);
        return kPi / 6.0 * e_d3_um3 * 1e-12;
    }

    // Droplets per second from one fully open nozzle.
    double emission_rate_full(const BoomConfig& boom) const {
        const double flow_ml_per_s = boom.nozzle_flow_lpm * 1000.0 / 60.0;
        return flow_ml_per_s / mean_droplet_volume_ml();
    }
};

// Spray volume delivered by one nozzle at a constant duty over a duration.
inline double emitted_volume_ml(int duty, double duration_s, const BoomConfig& boom) {
    if (duty < 0 || duty > 255) throw std::invalid_argument("emitted_volume: duty out of range");
    if (duration_s < 0) throw std::invalid_argument("emitted_volume: negative duration");
    const double flow_ml_per_s = boom.nozzle_flow_lpm * 1000.0 / 60.0;
    return flow_ml_per_s * (double(duty) / 255.0) * duration_s;
}

// Wire bytes paired with the simulated instant they reach the MCU.
struct TimedBytes {
    double t_ms = 0.0;
    std::string bytes;
};

struct SimDroplet {
    int nozzle = 0;
    double t_ms = 0.0;
    double x_m = 0.0;
    double y_m = 0.0;
    double diameter_um = 0.0;
    int paper_id = -1;  // -1 when it landed off-paper
};

struct NozzleTotals {
    int nozzle = 0;
    double open_time_ms = 0.0;
    int64_t emitted_droplets = 0;
    int64_t paper_hits = 0;
    double hit_volume_ml = 0.0;       // sum of sampled volumes that struck a paper
    double expected_volume_ml = 0.0;  // analytic: flow * open time
};

struct PassResult {
    std::vector<WspRaster> rasters;  // one per paper, scene order
    std::vector<NozzleTotals> per_nozzle;
    std::vector<SimDroplet> droplets;  // populated only when recording
    double duration_ms = 0.0;
};

namespace detail {

struct PaperExtent {
    const WspPlacement* paper;
    WspRaster* raster;
    double x0, x1, y0, y1;  // world bounds
};

}  // namespace detail

// Runs one pass of the boom over the scene. `wire` must be sorted by time;
// bytes are fed to the MCU emulator at their timestamps. Deterministic given
// (inputs, seed): each nozzle draws from its own stream derived from
// (seed, nozzle id). Set `record_droplets` to collect every droplet's landing
// sample (memory-heavy on long passes).
inline PassResult run_pass(const BoomConfig& boom, const std::vector<WspPlacement>& papers,
                           const std::vector<TimedBytes>& wire, const DepositionConfig& cfg,
                           uint64_t seed, double pass_duration_ms, double pwm_period_ms = 100.0,
                           bool record_droplets = false) {
    boom.validate();
    cfg.validate();
    for (const WspPlacement& p : papers) p.validate();

    PassResult result;
    result.duration_ms = pass_duration_ms;
    result.rasters.reserve(papers.size());
    for (const WspPlacement& p : papers) result.rasters.emplace_back(p);

    const double band_m = spray_band_width(boom);
    const double rate_per_ms = cfg.emission_rate_full(boom) / 1000.0;
    const double sigma = cfg.sigma_log();
    // Hit rectangles are padded so stains whose center lands just off-paper
    // still stamp their overlapping edge pixels.
    const double pad_m = cfg.spread_factor * cfg.droplet_median_um * std::exp(5.0 * sigma) / 2.0 * 1e-6;

    std::vector<detail::PaperExtent> extents;
    extents.reserve(papers.size());
    for (size_t i = 0; i < papers.size(); ++i) {
        const WspPlacement& p = papers[i];
        detail::PaperExtent e;
        e.paper = &p;
        e.raster = &result.rasters[i];
        e.x0 = p.x_m - p.height_mm / 2000.0;  // short side along travel
        e.x1 = p.x_m + p.height_mm / 2000.0;
        e.y0 = p.y_m - p.width_mm / 2000.0;
        e.y1 = p.y_m + p.width_mm / 2000.0;
        extents.push_back(e);
    }

    struct NozzleState {
        Rng rng;
        double nozzle_y = 0.0;
        double next_emit_open_ms = 0.0;  // open-time coordinate of next droplet
        double open_ms_seen = 0.0;
        std::vector<const detail::PaperExtent*> papers_in_band;
    };

    std::vector<NozzleState> nozzles;
    nozzles.reserve(size_t(boom.nozzle_count));
    for (int n = 1; n <= boom.nozzle_count; ++n) {
        NozzleState st{derive_rng(seed, {kStreamDeposition, uint64_t(n)}), boom.nozzle_y(n), 0.0, 0.0, {}};
        st.next_emit_open_ms = st.rng.exponential() / rate_per_ms;
        for (const detail::PaperExtent& e : extents)
            if (e.y1 + pad_m > st.nozzle_y - band_m / 2.0 && e.y0 - pad_m < st.nozzle_y + band_m / 2.0)
                st.papers_in_band.push_back(&e);
        nozzles.push_back(std::move(st));
    }

    McuEmulator mcu(boom.nozzle_count, pwm_period_ms);
    result.per_nozzle.resize(size_t(boom.nozzle_count));
    for (int n = 1; n <= boom.nozzle_count; ++n) result.per_nozzle[size_t(n - 1)].nozzle = n;

    size_t wire_pos = 0;
    const int64_t steps = int64_t(std::ceil(pass_duration_ms / cfg.step_ms));
    for (int64_t step = 0; step < steps; ++step) {
        const double t0 = step * cfg.step_ms;
        const double t1 = std::min(pass_duration_ms, t0 + cfg.step_ms);
        while (wire_pos < wire.size() && wire[wire_pos].t_ms <= t0) {
            mcu.feed(wire[wire_pos].bytes);
            ++wire_pos;
        }
        const auto opens = mcu.advance(t1);
        for (int n = 1; n <= boom.nozzle_count; ++n) {
            NozzleState& st = nozzles[size_t(n - 1)];
            NozzleTotals& tot = result.per_nozzle[size_t(n - 1)];
            for (const OpenInterval& seg : opens[size_t(n - 1)]) {
                const double seg_len = seg.length_ms();
                tot.open_time_ms += seg_len;
                const double seg_open_start = st.open_ms_seen;
                st.open_ms_seen += seg_len;
                while (st.next_emit_open_ms <= st.open_ms_seen) {
                    const double t_emit = seg.begin_ms + (st.next_emit_open_ms - seg_open_start);
                    const double x = cfg.pass_x_start_m + cfg.robot_speed_mps * t_emit / 1000.0;
                    const double y = st.nozzle_y + (st.rng.uniform01() - 0.5) * band_m;
                    ++tot.emitted_droplets;

                    const detail::PaperExtent* hit = nullptr;
                    for (const detail::PaperExtent* e : st.papers_in_band)
                        if (x >= e->x0 - pad_m && x < e->x1 + pad_m && y >= e->y0 - pad_m && y < e->y1 + pad_m) {
                            hit = e;
                            break;
                        }
                    double diameter_um = 0.0;
                    if (hit || record_droplets) {
                        diameter_um = cfg.droplet_median_um * std::exp(sigma * st.rng.normal());
                        if (hit) {
                            const double res = hit->paper->resolution_um_per_px;
                            const double cx_px = (y - hit->y0) * 1e6 / res;  // columns run along y
                            const double cy_px = (x - hit->x0) * 1e6 / res;
                            const double stain_r_px = cfg.spread_factor * diameter_um / 2.0 / res;
                            const int64_t covered = hit->raster->stamp_disk(cx_px, cy_px, stain_r_px);
                            if (covered > 0) {
                                ++tot.paper_hits;
                                tot.hit_volume_ml += kPi / 6.0 * std::pow(diameter_um, 3) * 1e-12;
                            }
                        }
                        if (record_droplets) {
                            SimDroplet d;
                            d.nozzle = n;
                            d.t_ms = t_emit;
                            d.x_m = x;
                            d.y_m = y;
                            d.diameter_um = diameter_um;
                            d.paper_id = hit && hit->paper ? hit->paper->id : -1;
                            result.droplets.push_back(d);
                        }
                    }
                    st.next_emit_open_ms += st.rng.exponential() / rate_per_ms;
                }
            }
        }
    }
    for (int n = 1; n <= boom.nozzle_count; ++n) {
        NozzleTotals& tot = result.per_nozzle[size_t(n - 1)];
        tot.expected_volume_ml = emitted_volume_ml(255, tot.open_time_ms / 1000.0, boom);
    }
    return result;
}

}  // namespace spraysim
