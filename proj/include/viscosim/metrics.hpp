#pragma once

// Evaluation metrics over tactile-array frames: resultant-force tracking
// error and a composite deformation error that mixes pointwise distance with
// contact-patch (convex hull) area mismatch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace viscosim {

struct Point2 {
    double y = 0.0, z = 0.0;
};

struct TaxelPoint {
    double y = 0.0, z = 0.0; // taxel center [mm]
    double force = 0.0;      // sensed normal force [N]
};

struct TaxelFrame {
    double t = 0.0;
    std::vector<TaxelPoint> active;
};

// |sum of sensed forces - target resultant|
inline double force_tracking_error(const TaxelFrame& frame, double target_resultant) {
    double sum = 0.0;
    for (const TaxelPoint& p : frame.active)
        sum += p.force;
    return std::abs(sum - target_resultant);
}

namespace detail {
inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.y - o.y) * (b.z - o.z) - (a.z - o.z) * (b.y - o.y);
}
} // namespace detail

// Convex hull (monotone chain) area via the shoelace formula.  Fewer than
// three distinct non-collinear points enclose nothing and yield 0.
inline double convex_hull_area(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point2& a, const Point2& b) {
        return a.y < b.y || (a.y == b.y && a.z < b.z);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point2& a, const Point2& b) {
                              return a.y == b.y && a.z == b.z;
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3)
        return 0.0;

    std::vector<Point2> hull(2 * n);
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) { // lower chain
        while (h >= 2 && detail::cross(hull[h - 2], hull[h - 1], pts[i]) <= 0.0)
            --h;
        hull[h++] = pts[i];
    }
    for (std::size_t i = n - 1, lower = h + 1; i-- > 0;) { // upper chain
        while (h >= lower && detail::cross(hull[h - 2], hull[h - 1], pts[i]) <= 0.0)
            --h;
        hull[h++] = pts[i];
    }
    hull.resize(h > 0 ? h - 1 : 0);

    double area2 = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Point2& a = hull[i];
        const Point2& b = hull[(i + 1) % hull.size()];
        area2 += a.y * b.z - b.y * a.z;
    }
    return std::abs(area2) / 2.0;
}

struct CdeWeights {
    double alpha = 0.4; // pointwise-distance weight
    double beta = 0.6;  // area-mismatch weight
};

// eps_dist: quadratic mean of the pairwise distances between corresponding
// reference and actual points (the lists must align index-by-index).
inline double pointwise_distance_error(const std::vector<Point2>& ref,
                                       const std::vector<Point2>& actual) {
    if (ref.size() != actual.size())
        throw std::invalid_argument("pointwise_distance_error: point lists differ in length");
    if (ref.empty())
        return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double dy = ref[i].y - actual[i].y;
        const double dz = ref[i].z - actual[i].z;
        acc += dy * dy + dz * dz;
    }
    return std::sqrt(acc / static_cast<double>(ref.size()));
}

struct CompositeError {
    double eps_dist = 0.0;
    double eps_area = 0.0;
    double eps_total = 0.0;
};

inline CompositeError composite_deformation_error(const std::vector<Point2>& ref,
                                                  const std::vector<Point2>& actual,
                                                  double ref_area, double actual_area,
                                                  const CdeWeights& w = {}) {
    CompositeError e;
    e.eps_dist = pointwise_distance_error(ref, actual);
    e.eps_area = std::abs(ref_area - actual_area);
    e.eps_total = w.alpha * e.eps_dist + w.beta * e.eps_area;
    return e;
}

} // namespace viscosim
