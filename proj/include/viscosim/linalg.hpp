#pragma once

// Tiny fixed-size linear algebra used by the online estimator: 4-vectors for
// the regressor/parameter space and symmetric 4x4 matrices for the sliding
// excitation Gram.  A cyclic Jacobi sweep gives the eigenvalues; at this size
// it converges to machine precision in a handful of sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

namespace viscosim {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

inline double dot(const Vec4& a, const Vec4& b) noexcept {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double norm(const Vec4& a) noexcept { return std::sqrt(dot(a, a)); }

inline Vec4 scaled(const Vec4& a, double s) noexcept {
    return {a[0] * s, a[1] * s, a[2] * s, a[3] * s};
}

inline Vec4 add(const Vec4& a, const Vec4& b) noexcept {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

inline Vec4 sub(const Vec4& a, const Vec4& b) noexcept {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

// accum += v v^T * w
inline void add_outer(Mat4& accum, const Vec4& v, double w) noexcept {
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            accum[i][j] += w * v[i] * v[j];
}

inline void sub_outer(Mat4& accum, const Vec4& v, double w) noexcept {
    add_outer(accum, v, -w);
}

inline void add_mat(Mat4& accum, const Mat4& m, double w = 1.0) noexcept {
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            accum[i][j] += w * m[i][j];
}

// Eigenvalues of a symmetric 4x4, ascending.  Cyclic Jacobi rotations; the
// off-diagonal mass drops quadratically per sweep.
inline std::array<double, 4> sym_eigenvalues(Mat4 a) {
    constexpr int max_sweeps = 64;
    double scale = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            scale = std::max(scale, std::abs(a[i][j]));
    if (scale == 0.0)
        return {0.0, 0.0, 0.0, 0.0};

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t q = p + 1; q < 4; ++q)
                off += a[p][q] * a[p][q];
        if (off <= 1e-30 * scale * scale)
            break;

        for (std::size_t p = 0; p < 4; ++p) {
            for (std::size_t q = p + 1; q < 4; ++q) {
                const double apq = a[p][q];
                if (std::abs(apq) <= 1e-300)
                    continue;
                const double tau = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for (std::size_t k = 0; k < 4; ++k) {
                    if (k == p || k == q)
                        continue;
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[p][k] = a[k][p];
                    a[k][q] = s * akp + c * akq;
                    a[q][k] = a[k][q];
                }
            }
        }
    }

    std::array<double, 4> ev{a[0][0], a[1][1], a[2][2], a[3][3]};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3 - i; ++j)
            if (ev[j] > ev[j + 1])
                std::swap(ev[j], ev[j + 1]);
    return ev;
}

inline double min_eigenvalue(const Mat4& m) { return sym_eigenvalues(m)[0]; }

} // namespace viscosim
