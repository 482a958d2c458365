#include <doctest.h>

#include <cmath>

#include "spraysim/detector.hpp"

using namespace spraysim;

namespace {

// independent pixel-center-in-ellipse rasterizer
std::vector<uint8_t> rasterize_ellipse_oracle(const PixelEllipse& e, int w, int h) {
    std::vector<uint8_t> grid(size_t(w) * h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double dx = (x + 0.5 - e.cx) / e.rx;
            const double dy = (y + 0.5 - e.cy) / e.ry;
            if (dx * dx + dy * dy <= 1.0) grid[size_t(y) * w + x] = 1;
        }
    return grid;
}

std::vector<PlantProjection> two_plants() {
    PlantProjection a;
    a.plant_id = 1;
    a.shape = PixelEllipse{100, 100, 20, 15};
    PlantProjection b;
    b.plant_id = 2;
    b.shape = PixelEllipse{400, 300, 45, 35};
    return {a, b};
}

}  // namespace

TEST_CASE("noiseless oracle reproduces the ground truth exactly") {
    const auto truths = two_plants();
    Rng rng(42);
    const auto dets = detect(truths, OracleNoise{0, 0, 0}, rng, 640, 480);
    REQUIRE(dets.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        const auto& e = std::get<PixelEllipse>(truths[i].shape);
        const auto expect = rasterize_ellipse_oracle(e, 640, 480);
        REQUIRE(dets[i].mask.has_value());
        const DetectionMask& m = *dets[i].mask;
        int64_t expect_count = 0;
        for (uint8_t v : expect) expect_count += v;
        CHECK(m.count() == expect_count);
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                CHECK(int(m.v[size_t(y) * m.width + x]) ==
                      int(expect[size_t(m.y0 + y) * 640 + (m.x0 + x)]));
        CHECK(dets[i].confidence == 1.0);
        CHECK(dets[i].truth_plant_id == truths[i].plant_id);
    }
}

TEST_CASE("fn_rate 1 suppresses all true detections") {
    const auto truths = two_plants();
    Rng rng(1);
    CHECK(detect(truths, OracleNoise{1.0, 0, 0}, rng, 640, 480).empty());
}

TEST_CASE("oracle is deterministic for identical inputs and seed") {
    const auto truths = two_plants();
    const OracleNoise noise{0.3, 1.5, 0.2};
    Rng rng_a(77), rng_b(77);
    const auto a = detect(truths, noise, rng_a, 640, 480);
    const auto b = detect(truths, noise, rng_b, 640, 480);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].confidence == b[i].confidence);
        CHECK(a[i].box.x_min == b[i].box.x_min);
        CHECK(a[i].truth_plant_id == b[i].truth_plant_id);
        REQUIRE(a[i].mask.has_value() == b[i].mask.has_value());
        if (a[i].mask) CHECK(a[i].mask->v == b[i].mask->v);
    }
}

TEST_CASE("miss count over many seeded trials tracks fn_rate") {
    const auto truths = two_plants();
    const double fn = 0.3;
    const int trials = 10000;
    int64_t misses = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = derive_rng(2024, {kStreamDetector, uint64_t(t)});
        const auto dets = detect(truths, OracleNoise{fn, 0, 0}, rng, 640, 480);
        misses += int64_t(truths.size()) - int64_t(dets.size());
    }
    // total misses ~ Binomial(trials * n_plants, fn)
    const double n = double(trials) * double(truths.size());
    const double mean = n * fn;
    const double sigma = std::sqrt(n * fn * (1 - fn));
    CHECK(std::abs(double(misses) - mean) <= 3.0 * sigma);
}

TEST_CASE("false positives are Poisson with the configured rate") {
    const int trials = 4000;
    const double fp = 1.7;
    int64_t total = 0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = derive_rng(5, {kStreamDetector, uint64_t(t)});
        total += int64_t(detect({}, OracleNoise{0, fp, 0}, rng, 640, 480).size());
    }
    const double mean = trials * fp;
    const double sigma = std::sqrt(mean);
    CHECK(std::abs(double(total) - mean) <= 3.0 * sigma);
}

TEST_CASE("mask_area_physical converts pixel counts through the gsd") {
    CameraConfig cam;
    cam.mount_height_m = 0.35;
    cam.image_width = 640;
    cam.image_height = 480;
    const Gsd g = ground_sampling_distance(cam);
    const double px_m2 = g.h_um_per_px * 1e-6 * g.v_um_per_px * 1e-6;

    Detection d;
    d.mask = DetectionMask{0, 0, 40, 25, std::vector<uint8_t>(1000, 1)};
    d.box = Box{0, 0, 40, 25};
    const PhysicalArea a = mask_area_physical(d, cam);
    CHECK_FALSE(a.from_box_fallback);
    CHECK(a.area_m2 == doctest::Approx(1000.0 * px_m2).epsilon(1e-12));
    CHECK(a.area_m2 == doctest::Approx(3.988e-4).epsilon(1e-3));

    d.mask = DetectionMask{0, 0, 4, 4, std::vector<uint8_t>(16, 0)};
    CHECK(mask_area_physical(d, cam).area_m2 == 0.0);

    // full frame
    d.mask = DetectionMask{0, 0, 640, 480, std::vector<uint8_t>(640 * 480, 1)};
    CHECK(mask_area_physical(d, cam).area_m2 == doctest::Approx(640.0 * 480.0 * px_m2).epsilon(1e-12));

    // linear in pixel count
    d.mask = DetectionMask{0, 0, 40, 50, std::vector<uint8_t>(2000, 1)};
    CHECK(mask_area_physical(d, cam).area_m2 == doctest::Approx(2.0 * 1000.0 * px_m2).epsilon(1e-12));
}

TEST_CASE("missing mask falls back to box area with a flag") {
    CameraConfig cam;
    Detection d;
    d.box = Box{10, 10, 30, 40};
    const PhysicalArea a = mask_area_physical(d, cam);
    CHECK(a.from_box_fallback);
    const Gsd g = ground_sampling_distance(cam);
    CHECK(a.area_m2 == doctest::Approx(600.0 * g.h_um_per_px * 1e-6 * g.v_um_per_px * 1e-6));
}

TEST_CASE("area jitter scales the reported mask area log-normally") {
    PlantProjection p;
    p.shape = PixelEllipse{200, 200, 60, 60};
    const double jitter = 0.15;
    double log_sum = 0.0;
    const int trials = 2000;
    Rng base(9);
    const auto clean = detect({p}, OracleNoise{0, 0, 0}, base, 640, 480);
    REQUIRE(clean.size() == 1);
    const double base_area = double(clean[0].mask->count());
    for (int t = 0; t < trials; ++t) {
        Rng rng = derive_rng(31, {kStreamDetector, uint64_t(t)});
        const auto dets = detect({p}, OracleNoise{0, 0, jitter}, rng, 640, 480);
        REQUIRE(dets.size() == 1);
        log_sum += std::log(double(dets[0].mask->count()) / base_area);
    }
    // mean of log factors ~ N(0, jitter/sqrt(trials))
    const double mean_log = log_sum / trials;
    CHECK(std::abs(mean_log) <= 4.0 * jitter / std::sqrt(double(trials)) + 0.01);
}
