#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "spraysim/netpbm.hpp"
#include "spraysim/raster.hpp"
#include "spraysim/rng.hpp"
#include "spraysim/wsp_analysis.hpp"

using namespace spraysim;

namespace {

RgbImage solid(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
    RgbImage img{w, h, {}};
    img.pixels.resize(size_t(w) * h * 3);
    for (size_t i = 0; i < size_t(w) * h; ++i) {
        img.pixels[i * 3] = r;
        img.pixels[i * 3 + 1] = g;
        img.pixels[i * 3 + 2] = b;
    }
    return img;
}

}  // namespace

TEST_CASE("hsv conversion puts the card colors where expected") {
    const Hsv yellow = rgb_to_hsv(230, 230, 60);
    CHECK(yellow.h == doctest::Approx(60.0).epsilon(1e-6));
    CHECK(yellow.s == doctest::Approx(1.0 - 60.0 / 230.0).epsilon(1e-6));
    const Hsv blue = rgb_to_hsv(30, 60, 160);
    CHECK(blue.h > 180.0);
    CHECK(blue.h < 280.0);
    CHECK(blue.s > 0.25);
}

TEST_CASE("segmentation of solid cards") {
    const RgbImage yellow = solid(60, 40, 230, 230, 60);
    CHECK(segment_stains(yellow).count() == 0);

    const RgbImage blue = solid(60, 40, 30, 60, 160);
    const BinaryMask full = segment_stains(blue);
    CHECK(full.count() == 60 * 40);
    CHECK(coverage_percent(full) == 100.0);
}

TEST_CASE("segmentation recovers stamped disks within 2 percent") {
    WspRaster raster;
    raster.resolution_um_per_px = 42.3;
    raster.mask = BinaryMask(400, 300);
    int64_t stamped = 0;
    stamped += raster.stamp_disk(60, 60, 8);
    stamped += raster.stamp_disk(200, 150, 12);
    stamped += raster.stamp_disk(330, 80, 6);
    stamped += raster.stamp_disk(100, 240, 10);
    const BinaryMask seg = segment_stains(raster.to_rgb());
    CHECK(std::abs(double(seg.count()) - double(stamped)) <= 0.02 * double(stamped));
}

TEST_CASE("coverage percent is exact integer arithmetic") {
    BinaryMask m(100, 50);
    for (int i = 0; i < 2000; ++i) m.v[size_t(i)] = 1;
    CHECK(coverage_percent(m) == doctest::Approx(40.0).epsilon(1e-12));
    BinaryMask empty(10, 10);
    CHECK(coverage_percent(empty) == 0.0);
    CHECK_THROWS_AS(coverage_percent(BinaryMask{}), std::invalid_argument);

    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        BinaryMask r(1 + int(rng.uniform01() * 80), 1 + int(rng.uniform01() * 80));
        int64_t brute = 0;
        for (auto& v : r.v) {
            v = rng.uniform01() < 0.3 ? 1 : 0;
            brute += v;
        }
        CHECK(coverage_percent(r) == 100.0 * double(brute) / double(r.width * r.height));
    }
}

TEST_CASE("droplet extraction on the stated shapes") {
    SUBCASE("single 5x5 square") {
        BinaryMask m(20, 20);
        for (int y = 5; y < 10; ++y)
            for (int x = 7; x < 12; ++x) m.set(x, y, 1);
        const auto drops = extract_droplets(m, 100.0);
        REQUIRE(drops.size() == 1);
        CHECK(drops[0].area_px == 25);
        CHECK(drops[0].area_um2 == doctest::Approx(25 * 100.0 * 100.0));
        CHECK(drops[0].centroid_x_px == doctest::Approx(9.5));
        CHECK(drops[0].centroid_y_px == doctest::Approx(7.5));
        CHECK(drops[0].eq_diameter_um ==
              doctest::Approx(2.0 * std::sqrt(drops[0].area_um2 / kPi)).epsilon(1e-12));
    }
    SUBCASE("two disjoint disks") {
        WspRaster r;
        r.mask = BinaryMask(100, 60);
        r.stamp_disk(20, 30, 6);
        r.stamp_disk(70, 30, 6);
        CHECK(extract_droplets(r.mask, 42.3).size() == 2);
    }
    SUBCASE("disks joined by one pixel merge under 8-connectivity") {
        BinaryMask m(30, 30);
        // two plus-shapes touching diagonally
        for (int i = 3; i < 8; ++i) {
            m.set(i, 5, 1);
            m.set(5, i, 1);
        }
        for (int i = 8; i < 13; ++i) {
            m.set(i, 10, 1);
            m.set(10, i, 1);
        }
        m.set(7, 8, 1);  // bridge within diagonal reach of both
        m.set(8, 9, 1);
        const auto one = extract_droplets(m, 100.0, 1);
        const auto areas = oracle::flood_fill_areas(m, 1);
        CHECK(one.size() == areas.size());
    }
    SUBCASE("components below min_area are discarded") {
        BinaryMask m(10, 10);
        m.set(2, 2, 1);  // single pixel
        m.set(6, 6, 1);
        m.set(7, 6, 1);  // two pixels
        CHECK(extract_droplets(m, 100.0, 2).size() == 1);
        CHECK(extract_droplets(m, 100.0, 1).size() == 2);
    }
}

TEST_CASE("droplet extraction matches the flood-fill oracle on random masks") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = 8 + int(rng.uniform01() * 56);
        const int h = 8 + int(rng.uniform01() * 56);
        BinaryMask m(w, h);
        for (auto& v : m.v) v = rng.uniform01() < 0.35 ? 1 : 0;
        const auto got = extract_droplets(m, 100.0, 1);
        auto areas = oracle::flood_fill_areas(m, 1);
        REQUIRE(got.size() == areas.size());
        std::vector<int64_t> got_areas;
        for (const auto& d : got) got_areas.push_back(d.area_px);
        std::sort(got_areas.begin(), got_areas.end());
        std::sort(areas.begin(), areas.end());
        CHECK(got_areas == areas);
        int64_t total = 0;
        for (int64_t a : areas) total += a;
        CHECK(total == m.count());
    }
}

TEST_CASE("droplet statistics on hand-computed samples") {
    auto mk = [](std::vector<double> areas) {
        std::vector<DropletRecord> v;
        int id = 1;
        for (double a : areas) {
            DropletRecord d;
            d.id = id++;
            d.area_um2 = a;
            v.push_back(d);
        }
        return v;
    };

    SUBCASE("mean, median, population sigma") {
        const DropletStats s = droplet_stats(mk({1, 2, 3, 4, 5}));
        CHECK(s.mean_um2 == doctest::Approx(3.0));
        CHECK(s.median_um2 == doctest::Approx(3.0));
        CHECK(s.stddev_um2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
    SUBCASE("nearest-rank percentiles and bins on 1..9") {
        const DropletStats s = droplet_stats(mk({1, 2, 3, 4, 5, 6, 7, 8, 9}));
        CHECK(s.p33_um2 == 3.0);
        CHECK(s.p66_um2 == 6.0);
        CHECK(s.bin_small == 2);
        CHECK(s.bin_medium == 3);
        CHECK(s.bin_large == 4);
    }
    SUBCASE("empty input is an empty result, not an error") {
        const DropletStats s = droplet_stats({});
        CHECK(s.n == 0);
        CHECK(s.bin_small + s.bin_medium + s.bin_large == 0);
    }
    SUBCASE("bins sum to n and are order-invariant") {
        Rng rng(6);
        std::vector<double> areas;
        for (int i = 0; i < 57; ++i) areas.push_back(std::floor(rng.uniform(1, 400)));
        const DropletStats a = droplet_stats(mk(areas));
        std::reverse(areas.begin(), areas.end());
        const DropletStats b = droplet_stats(mk(areas));
        CHECK(a.bin_small + a.bin_medium + a.bin_large == a.n);
        CHECK(a.bin_small == b.bin_small);
        CHECK(a.bin_medium == b.bin_medium);
        CHECK(a.p33_um2 == b.p33_um2);
    }
    SUBCASE("single droplet lands in the large bin") {
        const DropletStats s = droplet_stats(mk({7.0}));
        CHECK(s.n == 1);
        CHECK(s.bin_large == 1);
        CHECK(s.bin_small + s.bin_medium == 0);
    }
}

TEST_CASE("kde heatmap properties") {
    SUBCASE("single droplet: peak at its cell, unit mass") {
        DropletRecord d;
        d.centroid_x_mm = 30.0;
        d.centroid_y_mm = 12.0;
        const KdeGrid g = kde_heatmap({d}, 76.2, 25.4, 60, 20);
        CHECK(g.mass() == doctest::Approx(1.0).epsilon(0.01));
        int best_ix = -1, best_iy = -1;
        double best = -1;
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix)
                if (g.at(ix, iy) > best) {
                    best = g.at(ix, iy);
                    best_ix = ix;
                    best_iy = iy;
                }
        CHECK(best_ix == int(30.0 / g.cell_w_mm));
        CHECK(best_iy == int(12.0 / g.cell_h_mm));
    }
    SUBCASE("two distant droplets with a small bandwidth give two maxima") {
        DropletRecord a, b;
        a.centroid_x_mm = 15.0;
        a.centroid_y_mm = 12.0;
        b.centroid_x_mm = 60.0;
        b.centroid_y_mm = 12.0;
        const KdeGrid g = kde_heatmap({a, b}, 76.2, 25.4, 60, 20, 1.0);
        const int iy = int(12.0 / g.cell_h_mm);
        const int ia = int(15.0 / g.cell_w_mm), ib = int(60.0 / g.cell_w_mm);
        CHECK(g.at(ia, iy) > 10.0 * g.at((ia + ib) / 2, iy));
        CHECK(g.at(ib, iy) > 10.0 * g.at((ia + ib) / 2, iy));
        CHECK(g.mass() == doctest::Approx(2.0).epsilon(0.01));
    }
    SUBCASE("uniform scatter is flat within 3.5 sigma per cell") {
        Rng rng(12);
        std::vector<DropletRecord> drops(10000);
        for (auto& d : drops) {
            d.centroid_x_mm = rng.uniform(0, 76.2);
            d.centroid_y_mm = rng.uniform(0, 25.4);
        }
        const int nx = 12, ny = 4;
        const KdeGrid g = kde_heatmap(drops, 76.2, 25.4, nx, ny);
        CHECK(g.mass() == doctest::Approx(10000.0).epsilon(0.01));
        const double expect_mass = 10000.0 / (nx * ny);
        // smoothing shrinks per-cell variance below the multinomial bound
        const double sigma = std::sqrt(expect_mass);
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx; ++ix) {
                const double cell_mass = g.at(ix, iy) * g.cell_w_mm * g.cell_h_mm;
                CHECK(std::abs(cell_mass - expect_mass) <= 3.5 * sigma);
            }
    }
    SUBCASE("no droplets yield an all-zero grid") {
        const KdeGrid g = kde_heatmap({}, 76.2, 25.4);
        CHECK(g.mass() == 0.0);
    }
}

TEST_CASE("uniformity report") {
    SUBCASE("a perfectly uniform stain has cv 0 and drift 1") {
        BinaryMask m(90, 30);
        for (auto& v : m.v) v = 1;
        const UniformityReport u = uniformity(m);
        CHECK(u.grid_cv == doctest::Approx(0.0));
        CHECK(u.drift_index == doctest::Approx(1.0));
        CHECK_FALSE(u.drift_undefined);
    }
    SUBCASE("stain only in the center third has drift 0") {
        BinaryMask m(90, 30);
        for (int y = 0; y < 30; ++y)
            for (int x = 30; x < 60; ++x) m.set(x, y, 1);
        const UniformityReport u = uniformity(m);
        CHECK(u.drift_index == doctest::Approx(0.0));
        CHECK_FALSE(u.drift_undefined);
    }
    SUBCASE("stain only on the sides is flagged as undefined drift") {
        BinaryMask m(90, 30);
        for (int y = 0; y < 30; ++y) m.set(0, y, 1);
        const UniformityReport u = uniformity(m);
        CHECK(u.drift_undefined);
    }
    SUBCASE("hand-computed 8x8 half-stained toy mask") {
        BinaryMask m(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 4; ++x) m.set(x, y, 1);
        const UniformityReport u = uniformity(m, 2, 2);
        // cells: left pair fully stained, right pair empty
        // mean 0.5, population sigma 0.5 -> cv = 1
        CHECK(u.grid_cv == doctest::Approx(1.0).epsilon(1e-12));
        // thirds of 8 columns: center = cols 2..4 (3 cols), sides = 5 cols
        // center coverage 2/3, sides coverage 2/5
        CHECK(u.drift_index == doctest::Approx((2.0 / 5.0) / (2.0 / 3.0)).epsilon(1e-12));
        CHECK(u.coverage_percent == doctest::Approx(50.0));
    }
    SUBCASE("empty mask reports drift 1 with no flag") {
        const UniformityReport u = uniformity(BinaryMask(90, 30));
        CHECK(u.drift_index == doctest::Approx(1.0));
        CHECK_FALSE(u.drift_undefined);
        CHECK(u.grid_cv == 0.0);
    }
}

TEST_CASE("golden regression on the bundled sample raster") {
    const std::string path = std::string(SPRAYSIM_SOURCE_DIR) + "/data/sample_wsp.pgm";
    const GrayImage img = read_pgm(path);
    REQUIRE(img.width == 1801);
    REQUIRE(img.height == 600);
    const BinaryMask mask = binarize_gray(img);
    const PaperReport rep = analyze_mask(mask, 42.3);
    CHECK(rep.coverage_percent == doctest::Approx(24.9794).epsilon(1e-5));
    CHECK(rep.stats.n == 2417);
    CHECK(rep.stats.mean_um2 == doctest::Approx(199824.53).epsilon(1e-6));
    CHECK(rep.stats.median_um2 == doctest::Approx(87675.21).epsilon(1e-6));
    CHECK(rep.stats.stddev_um2 == doctest::Approx(334593.95).epsilon(1e-6));
    CHECK(rep.stats.p33_um2 == doctest::Approx(53678.70).epsilon(1e-6));
    CHECK(rep.stats.p66_um2 == doctest::Approx(150300.36).epsilon(1e-6));
    CHECK(rep.stats.bin_small == 793);
    CHECK(rep.stats.bin_medium == 799);
    CHECK(rep.stats.bin_large == 825);
    CHECK(rep.uniformity.grid_cv == doctest::Approx(0.1315).epsilon(1e-3));
    CHECK(rep.uniformity.drift_index == doctest::Approx(0.9521).epsilon(1e-3));
}

TEST_CASE("analyzer inverts the stamper at low density") {
    Rng rng(71);
    for (int trial = 0; trial < 5; ++trial) {
        WspRaster raster;
        raster.resolution_um_per_px = 42.3;
        raster.mask = BinaryMask(600, 300);
        std::vector<std::pair<double, double>> centers;
        std::vector<int64_t> stamped;
        const int k = 3 + int(rng.uniform01() * 10);
        for (int i = 0; i < k;) {
            const double r = rng.uniform(5, 12);
            const double cx = rng.uniform(r + 2, 600 - r - 2);
            const double cy = rng.uniform(r + 2, 300 - r - 2);
            bool clash = false;
            for (const auto& [ox, oy] : centers)
                if (std::hypot(cx - ox, cy - oy) < r + 14 + 6) clash = true;
            if (clash) continue;
            centers.emplace_back(cx, cy);
            stamped.push_back(raster.stamp_disk(cx, cy, r));
            ++i;
        }
        const auto drops = extract_droplets(raster.mask, raster.resolution_um_per_px);
        REQUIRE(drops.size() == size_t(k));
        std::vector<int64_t> got;
        for (const auto& d : drops) got.push_back(d.area_px);
        std::sort(got.begin(), got.end());
        std::sort(stamped.begin(), stamped.end());
        CHECK(got == stamped);
    }
}
