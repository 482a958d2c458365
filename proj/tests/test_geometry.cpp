#include <doctest.h>

#include <cmath>

#include "spraysim/geometry.hpp"
#include "spraysim/rng.hpp"

using namespace spraysim;

TEST_CASE("ground sampling distance matches the trig oracle") {
    CameraConfig cam;
    cam.mount_height_m = 0.35;
    cam.h_fov_deg = 60;
    cam.v_fov_deg = 47;
    cam.image_width = 640;
    cam.image_height = 480;
    const Gsd g = ground_sampling_distance(cam);

    // oracle: 2*h*tan(fov/2)/pixels
    const double gsd_h = 2.0 * 0.35 * std::tan(30.0 * kPi / 180.0) / 640.0 * 1e6;
    const double gsd_v = 2.0 * 0.35 * std::tan(23.5 * kPi / 180.0) / 480.0 * 1e6;
    CHECK(g.h_um_per_px == doctest::Approx(gsd_h).epsilon(1e-12));
    CHECK(g.v_um_per_px == doctest::Approx(gsd_v).epsilon(1e-12));
    CHECK(g.h_um_per_px == doctest::Approx(631.5).epsilon(1e-3));
    CHECK(g.v_um_per_px == doctest::Approx(634.1).epsilon(1e-3));
}

TEST_CASE("degenerate camera configs are rejected") {
    CameraConfig cam;
    cam.h_fov_deg = 0;
    CHECK_THROWS_AS(ground_sampling_distance(cam), std::invalid_argument);
    cam.h_fov_deg = 60;
    cam.mount_height_m = 0;
    CHECK_THROWS_AS(ground_sampling_distance(cam), std::invalid_argument);
    cam.mount_height_m = -1;
    CHECK_THROWS_AS(ground_sampling_distance(cam), std::invalid_argument);
}

TEST_CASE("spray band width matches the trig oracle") {
    BoomConfig boom;
    boom.boom_height_m = 0.35;
    boom.fan_angle_deg = 80;
    CHECK(spray_band_width(boom) == doctest::Approx(2 * 0.35 * std::tan(40.0 * kPi / 180.0)).epsilon(1e-12));
    CHECK(spray_band_width(boom) == doctest::Approx(0.587).epsilon(1e-3));

    boom.boom_height_m = 0.5;
    CHECK(spray_band_width(boom) == doctest::Approx(0.839).epsilon(1e-3));

    boom.fan_angle_deg = 0;
    CHECK_THROWS_AS(spray_band_width(boom), std::invalid_argument);
}

TEST_CASE("spray band width is strictly increasing in height and fan angle") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        BoomConfig a;
        a.boom_height_m = rng.uniform(0.05, 2.0);
        a.fan_angle_deg = rng.uniform(5.0, 170.0);
        BoomConfig taller = a;
        taller.boom_height_m += rng.uniform(0.01, 0.5);
        BoomConfig wider = a;
        wider.fan_angle_deg += rng.uniform(0.5, 175.0 - a.fan_angle_deg);
        CHECK(spray_band_width(taller) > spray_band_width(a));
        CHECK(spray_band_width(wider) > spray_band_width(a));
    }
}

TEST_CASE("sector_for_pixel splits the image with the midpoint on the right") {
    CameraConfig cam;
    cam.image_width = 640;
    cam.covered_nozzles = {1, 2};
    CHECK(sector_for_pixel(cam, 100) == 1);
    CHECK(sector_for_pixel(cam, 320) == 2);
    CHECK(sector_for_pixel(cam, 319) == 1);
    cam.covered_nozzles = {3, 4};
    CHECK(sector_for_pixel(cam, 639) == 4);
    CHECK_THROWS_AS(sector_for_pixel(cam, -1), std::invalid_argument);
    CHECK_THROWS_AS(sector_for_pixel(cam, 640), std::invalid_argument);
}

TEST_CASE("sector_for_pixel partitions the image into two contiguous ranges") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        CameraConfig cam;
        cam.image_width = int(rng.uniform(2, 1200));
        cam.covered_nozzles = {1, 2};
        int transitions = 0;
        int prev = sector_for_pixel(cam, 0);
        CHECK(prev == 1);
        for (int x = 1; x < cam.image_width; ++x) {
            const int cur = sector_for_pixel(cam, x);
            if (cur != prev) ++transitions;
            prev = cur;
        }
        CHECK(transitions == 1);
        CHECK(sector_for_pixel(cam, cam.image_width - 1) == 2);
    }
}

TEST_CASE("footprint areas and invariants") {
    const EllipseFootprint e = circle_footprint(1.0, 2.0, 0.05);
    CHECK(e.area() == doctest::Approx(0.05).epsilon(1e-12));

    Plant p;
    p.id = 1;
    p.x_m = 1.0;
    p.y_m = 2.0;
    p.canopy_area_m2 = 0.05;
    p.footprint = e;
    CHECK_NOTHROW(p.validate());

    p.canopy_area_m2 = 0.06;  // more than 1% off the footprint
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    PolygonFootprint square;
    square.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    CHECK(square.area() == doctest::Approx(1.0));
    CHECK(square.contains(0.5, 0.5));
    CHECK_FALSE(square.contains(1.5, 0.5));
}

TEST_CASE("paper raster dimensions match the physical size") {
    WspPlacement p;
    CHECK(p.cols() == 1801);  // 76.2 mm at 42.3 um/px
    CHECK(p.rows() == 600);   // 25.4 mm
    CHECK(std::abs(p.cols() * p.resolution_um_per_px / 1000.0 - p.width_mm) < p.resolution_um_per_px / 1000.0);
    WspPlacement bad;
    bad.width_mm = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("nozzle layout is symmetric about the boom center") {
    BoomConfig boom;
    CHECK(boom.nozzle_y(1) == doctest::Approx(-1.5 * 0.508));
    CHECK(boom.nozzle_y(2) == doctest::Approx(-0.5 * 0.508));
    CHECK(boom.nozzle_y(3) == doctest::Approx(0.5 * 0.508));
    CHECK(boom.nozzle_y(4) == doctest::Approx(1.5 * 0.508));
    CHECK_THROWS_AS(boom.nozzle_y(0), std::invalid_argument);
    CHECK_THROWS_AS(boom.nozzle_y(5), std::invalid_argument);
}
