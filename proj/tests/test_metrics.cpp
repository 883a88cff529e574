#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "viscosim/metrics.hpp"

using namespace viscosim;

TEST_CASE("force tracking error is the absolute resultant mismatch") {
    TaxelFrame frame;
    frame.active = {{0.0, 0.0, 0.2}, {1.0, 0.0, 0.3}, {0.0, 1.0, 0.1}};
    CHECK(force_tracking_error(frame, 0.5) == Catch::Approx(0.1).margin(1e-15));
    CHECK(force_tracking_error(frame, 0.6) == Catch::Approx(0.0).margin(1e-15));
    CHECK(force_tracking_error(frame, 1.0) == Catch::Approx(0.4).margin(1e-15));
    TaxelFrame empty;
    CHECK(force_tracking_error(empty, 2.0) == 2.0);
}

TEST_CASE("convex hull area") {
    const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    SECTION("unit square") {
        CHECK(convex_hull_area(square) == Catch::Approx(1.0));
    }
    SECTION("interior points do not change the hull") {
        auto pts = square;
        pts.push_back({0.5, 0.5});
        pts.push_back({0.25, 0.75});
        CHECK(convex_hull_area(pts) == Catch::Approx(1.0));
    }
    SECTION("duplicates and ordering are irrelevant") {
        auto pts = square;
        pts.insert(pts.end(), square.begin(), square.end());
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 10; ++trial) {
            std::shuffle(pts.begin(), pts.end(), rng);
            CHECK(convex_hull_area(pts) == Catch::Approx(1.0));
        }
    }
    SECTION("triangle") {
        CHECK(convex_hull_area({{0, 0}, {4, 0}, {0, 3}}) == Catch::Approx(6.0));
    }
    SECTION("degenerate inputs enclose nothing") {
        CHECK(convex_hull_area({}) == 0.0);
        CHECK(convex_hull_area({{1, 2}}) == 0.0);
        CHECK(convex_hull_area({{1, 2}, {3, 4}}) == 0.0);
        CHECK(convex_hull_area({{0, 0}, {1, 1}, {2, 2}, {3, 3}}) == 0.0);
        CHECK(convex_hull_area({{5, 5}, {5, 5}, {5, 5}}) == 0.0);
    }
}

TEST_CASE("pointwise distance error is a quadratic mean") {
    const std::vector<Point2> ref{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    SECTION("uniform shift") {
        std::vector<Point2> shifted;
        for (const auto& p : ref)
            shifted.push_back({p.y, p.z + 0.5});
        CHECK(pointwise_distance_error(ref, shifted) == Catch::Approx(0.5));
    }
    SECTION("identical lists give zero") {
        CHECK(pointwise_distance_error(ref, ref) == 0.0);
        CHECK(pointwise_distance_error({}, {}) == 0.0);
    }
    SECTION("length mismatch throws") {
        CHECK_THROWS_AS(pointwise_distance_error(ref, {{0, 0}}), std::invalid_argument);
    }
}

TEST_CASE("composite deformation error mixes distance and area at 0.4/0.6") {
    const std::vector<Point2> ref{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    SECTION("pure translation: areas match, only distance contributes") {
        std::vector<Point2> shifted;
        for (const auto& p : ref)
            shifted.push_back({p.y, p.z + 0.5});
        const auto e = composite_deformation_error(ref, shifted, convex_hull_area(ref),
                                                   convex_hull_area(shifted));
        CHECK(e.eps_dist == Catch::Approx(0.5));
        CHECK(e.eps_area == Catch::Approx(0.0).margin(1e-15));
        CHECK(e.eps_total == Catch::Approx(0.2));
    }
    SECTION("dilation: unit square doubled in side length") {
        std::vector<Point2> doubled;
        for (const auto& p : ref)
            doubled.push_back({2.0 * p.y, 2.0 * p.z});
        // paired distances 0, 1, sqrt(2), 1 -> RMS = 1;  |4 - 1| = 3
        const auto e = composite_deformation_error(ref, doubled, convex_hull_area(ref),
                                                   convex_hull_area(doubled));
        CHECK(e.eps_dist == Catch::Approx(1.0));
        CHECK(e.eps_area == Catch::Approx(3.0));
        CHECK(e.eps_total == Catch::Approx(2.2));
    }
    SECTION("custom weights") {
        const auto e = composite_deformation_error(ref, ref, 2.0, 5.0, CdeWeights{1.0, 0.5});
        CHECK(e.eps_dist == 0.0);
        CHECK(e.eps_area == Catch::Approx(3.0));
        CHECK(e.eps_total == Catch::Approx(1.5));
    }
}
