#pragma once

// Artifact writers for fields: CSV snapshots and SVG slice heatmaps.  All
// numeric output goes through %.17g so reruns with identical inputs produce
// byte-identical files.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "viscosim/field.hpp"

namespace viscosim {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_field_csv(const ScalarField& f, std::ostream& os) {
    const GridSpec& g = f.spec();
    os << "ix,iy,iz,x,y,z,value\n";
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t k = 0; k < g.nz; ++k)
                os << i << ',' << j << ',' << k << ',' << fmt_g17(g.x(i)) << ','
                   << fmt_g17(g.y(j)) << ',' << fmt_g17(g.z(k)) << ','
                   << fmt_g17(f.at(i, j, k)) << '\n';
}

inline void write_field_csv(const ScalarField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open for writing: " + path);
    write_field_csv(f, os);
}

// Constant-x slice as a [j][k] table (the view a tactile array would see).
inline std::vector<std::vector<double>> slice_at_x(const ScalarField& f, std::size_t i) {
    const GridSpec& g = f.spec();
    if (i >= g.nx)
        throw std::invalid_argument("slice_at_x: index out of range");
    std::vector<std::vector<double>> out(g.ny, std::vector<double>(g.nz, 0.0));
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t k = 0; k < g.nz; ++k)
            out[j][k] = f.at(i, j, k);
    return out;
}

namespace detail {
// Diverging blue-white-red map on [-1, 1].
inline std::string heat_color(double u) {
    if (u > 1.0) u = 1.0;
    if (u < -1.0) u = -1.0;
    int r, g, b;
    if (u >= 0.0) {
        r = 255;
        g = static_cast<int>(255.0 * (1.0 - u));
        b = g;
    } else {
        b = 255;
        g = static_cast<int>(255.0 * (1.0 + u));
        r = g;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}
} // namespace detail

// Heatmap of a 2D table; rows run top to bottom, columns left to right.
inline void write_heatmap_svg(const std::vector<std::vector<double>>& cells,
                              const std::string& title, std::ostream& os) {
    if (cells.empty() || cells.front().empty())
        throw std::invalid_argument("write_heatmap_svg: empty table");
    const std::size_t rows = cells.size();
    const std::size_t cols = cells.front().size();
    double amax = 0.0;
    for (const auto& row : cells) {
        if (row.size() != cols)
            throw std::invalid_argument("write_heatmap_svg: ragged table");
        for (double v : row)
            amax = std::max(amax, std::abs(v));
    }
    if (amax == 0.0)
        amax = 1.0;

    constexpr int cell = 16, margin = 24, header = 28;
    const int w = margin * 2 + static_cast<int>(cols) * cell;
    const int h = margin + header + static_cast<int>(rows) * cell;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\">\n";
    os << "<text x=\"" << margin << "\" y=\"18\" font-family=\"monospace\" font-size=\"12\">"
       << title << " (|max|=" << fmt_g17(amax) << ")</text>\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            os << "<rect x=\"" << margin + static_cast<int>(c) * cell << "\" y=\""
               << header + static_cast<int>(r) * cell << "\" width=\"" << cell << "\" height=\""
               << cell << "\" fill=\"" << detail::heat_color(cells[r][c] / amax) << "\"/>\n";
        }
    }
    os << "</svg>\n";
}

inline void write_heatmap_svg(const std::vector<std::vector<double>>& cells,
                              const std::string& title, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open for writing: " + path);
    write_heatmap_svg(cells, title, os);
}

} // namespace viscosim
