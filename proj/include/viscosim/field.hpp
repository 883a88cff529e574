#pragma once

// Finite-difference scalar fields over the box (0,delta) x (0,ly) x (0,lz).
// The grid stores interior points only; every boundary face is homogeneous
// Dirichlet except the actuated face x = delta, whose data live in a separate
// ny*nz plane owned by the field.  The x axis is the depth (actuation) axis.
//
// With `transverse = false` the stencil drops the y/z terms, reducing the
// model to independent 1D columns; this is how the one-dimensional control
// benchmarks reuse the same machinery.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace viscosim {

struct GridSpec {
    std::size_t nx = 1, ny = 1, nz = 1; // interior point counts per axis
    double delta = 1.0;                 // depth extent [mm]
    double ly = 1.0, lz = 1.0;          // transverse extents [mm]
    bool transverse = true;             // include y/z second differences

    double hx() const noexcept { return delta / static_cast<double>(nx + 1); }
    double hy() const noexcept { return ly / static_cast<double>(ny + 1); }
    double hz() const noexcept { return lz / static_cast<double>(nz + 1); }

    double x(std::size_t i) const noexcept { return static_cast<double>(i + 1) * hx(); }
    double y(std::size_t j) const noexcept { return static_cast<double>(j + 1) * hy(); }
    double z(std::size_t k) const noexcept { return static_cast<double>(k + 1) * hz(); }

    std::size_t interior_count() const noexcept { return nx * ny * nz; }
    std::size_t face_count() const noexcept { return ny * nz; }
    double cell_volume() const noexcept { return hx() * hy() * hz(); }

    void validate() const {
        if (nx < 1 || ny < 1 || nz < 1)
            throw std::invalid_argument("GridSpec: interior counts must be >= 1");
        if (!(delta > 0.0) || !(ly > 0.0) || !(lz > 0.0))
            throw std::invalid_argument("GridSpec: extents must be positive");
    }

    bool operator==(const GridSpec&) const = default;
};

class ScalarField {
public:
    ScalarField() = default;

    explicit ScalarField(const GridSpec& spec)
        : spec_(spec), v_(spec.interior_count(), 0.0), face_(spec.face_count(), 0.0) {
        spec.validate();
    }

    const GridSpec& spec() const noexcept { return spec_; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return (i * spec_.ny + j) * spec_.nz + k;
    }

    double& at(std::size_t i, std::size_t j, std::size_t k) noexcept { return v_[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const noexcept { return v_[index(i, j, k)]; }

    double& face(std::size_t j, std::size_t k) noexcept { return face_[j * spec_.nz + k]; }
    double face(std::size_t j, std::size_t k) const noexcept { return face_[j * spec_.nz + k]; }

    std::vector<double>& values() noexcept { return v_; }
    const std::vector<double>& values() const noexcept { return v_; }
    std::vector<double>& face_values() noexcept { return face_; }
    const std::vector<double>& face_values() const noexcept { return face_; }

    void fill(double v) noexcept { std::fill(v_.begin(), v_.end(), v); }

private:
    GridSpec spec_;
    std::vector<double> v_;
    std::vector<double> face_;
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b, const char* op) {
    if (!(a.spec() == b.spec()))
        throw std::invalid_argument(std::string(op) + ": fields live on different grids");
}

// Seven-point (or three-point, when transverse is off) second-difference
// Laplacian.  Boundary closure: zero at x=0 and all y/z faces, the stored
// face data at x=delta.  The returned field's own face plane is zeroed.
inline ScalarField laplacian(const ScalarField& f) {
    const GridSpec& g = f.spec();
    ScalarField out(g);
    const double ihx2 = 1.0 / (g.hx() * g.hx());
    const double ihy2 = 1.0 / (g.hy() * g.hy());
    const double ihz2 = 1.0 / (g.hz() * g.hz());
    for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t k = 0; k < g.nz; ++k) {
                const double c = f.at(i, j, k);
                const double xm = (i > 0) ? f.at(i - 1, j, k) : 0.0;
                const double xp = (i + 1 < g.nx) ? f.at(i + 1, j, k) : f.face(j, k);
                double lap = (xp - 2.0 * c + xm) * ihx2;
                if (g.transverse) {
                    const double ym = (j > 0) ? f.at(i, j - 1, k) : 0.0;
                    const double yp = (j + 1 < g.ny) ? f.at(i, j + 1, k) : 0.0;
                    const double zm = (k > 0) ? f.at(i, j, k - 1) : 0.0;
                    const double zp = (k + 1 < g.nz) ? f.at(i, j, k + 1) : 0.0;
                    lap += (yp - 2.0 * c + ym) * ihy2 + (zp - 2.0 * c + zm) * ihz2;
                }
                out.at(i, j, k) = lap;
            }
        }
    }
    return out;
}

// Same stencil evaluated at a single interior point (cheap probe
// measurements); arithmetic mirrors laplacian() exactly so probe readings
// agree with the full-field operator to the last bit.
inline double laplacian_at(const ScalarField& f, std::size_t i, std::size_t j, std::size_t k) {
    const GridSpec& g = f.spec();
    const double ihx2 = 1.0 / (g.hx() * g.hx());
    const double c = f.at(i, j, k);
    const double xm = (i > 0) ? f.at(i - 1, j, k) : 0.0;
    const double xp = (i + 1 < g.nx) ? f.at(i + 1, j, k) : f.face(j, k);
    double lap = (xp - 2.0 * c + xm) * ihx2;
    if (g.transverse) {
        const double ihy2 = 1.0 / (g.hy() * g.hy());
        const double ihz2 = 1.0 / (g.hz() * g.hz());
        const double ym = (j > 0) ? f.at(i, j - 1, k) : 0.0;
        const double yp = (j + 1 < g.ny) ? f.at(i, j + 1, k) : 0.0;
        const double zm = (k > 0) ? f.at(i, j, k - 1) : 0.0;
        const double zp = (k + 1 < g.nz) ? f.at(i, j, k + 1) : 0.0;
        lap += (yp - 2.0 * c + ym) * ihy2 + (zp - 2.0 * c + zm) * ihz2;
    }
    return lap;
}

// Replace the Dirichlet data on the actuated face; returns the updated field.
inline ScalarField set_actuated_face(ScalarField f, const std::vector<double>& face) {
    if (face.size() != f.spec().face_count())
        throw std::invalid_argument("set_actuated_face: face data has wrong dimensions");
    f.face_values() = face;
    return f;
}

struct FieldNorms {
    double l2 = 0.0;   // volume-weighted: sqrt(sum v^2 * hx*hy*hz)
    double linf = 0.0; // max |v| over interior points
};

inline FieldNorms norms(const ScalarField& f) {
    double sq = 0.0, mx = 0.0;
    for (double v : f.values()) {
        sq += v * v;
        mx = std::max(mx, std::abs(v));
    }
    return FieldNorms{std::sqrt(sq * f.spec().cell_volume()), mx};
}

inline bool all_finite(const ScalarField& f) {
    for (double v : f.values())
        if (!std::isfinite(v))
            return false;
    for (double v : f.face_values())
        if (!std::isfinite(v))
            return false;
    return true;
}

// ---- elementwise arithmetic (interior and face planes together) ----

inline void scale_in_place(ScalarField& f, double s) noexcept {
    for (double& v : f.values())
        v *= s;
    for (double& v : f.face_values())
        v *= s;
}

// y += alpha * x
inline void add_scaled(ScalarField& y, const ScalarField& x, double alpha) {
    require_same_grid(y, x, "add_scaled");
    for (std::size_t n = 0; n < y.values().size(); ++n)
        y.values()[n] += alpha * x.values()[n];
    for (std::size_t n = 0; n < y.face_values().size(); ++n)
        y.face_values()[n] += alpha * x.face_values()[n];
}

inline ScalarField scaled(ScalarField f, double s) {
    scale_in_place(f, s);
    return f;
}

inline ScalarField difference(const ScalarField& a, const ScalarField& b) {
    ScalarField out = a;
    add_scaled(out, b, -1.0);
    return out;
}

// Volume integral over the interior (midpoint-style cell weighting).
inline double volume_integral(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values())
        s += v;
    return s * f.spec().cell_volume();
}

} // namespace viscosim
