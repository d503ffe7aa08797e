#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dinf/errors.hpp"

namespace dinf {

// Oriented surface samples: positions and unit outward normals, interleaved
// per point in two flat arrays.
struct oriented_points {
    int dim = 0;
    std::vector<double> x;  // count * dim
    std::vector<double> n;  // count * dim

    std::size_t count() const { return dim == 0 ? 0 : x.size() / std::size_t(dim); }
    std::span<const double> point(std::size_t i) const {
        return {x.data() + i * std::size_t(dim), std::size_t(dim)};
    }
    std::span<const double> normal(std::size_t i) const {
        return {n.data() + i * std::size_t(dim), std::size_t(dim)};
    }
};

// Text format: one point per line, "x y nx ny" in 2d or "x y z nx ny nz" in
// 3d; blank lines and '#' comments are skipped. Normals must be unit within
// 1e-3 and are renormalized exactly; anything else is rejected with the line
// number.
inline oriented_points read_pointcloud(const std::string& path, int dim) {
    if (dim < 2 || dim > 3) throw config_error("pointcloud: dim must be 2 or 3");
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path + " for reading");

    oriented_points pts;
    pts.dim = dim;
    std::string line;
    long lineno = 0;
    auto fail = [&](const std::string& what) {
        throw data_error(path + ": line " + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> vals;
        double v;
        while (ls >> v) vals.push_back(v);
        std::string trailing;
        if (ls.fail() && !ls.eof() && (ls.clear(), ls >> trailing))
            fail("not a number: '" + trailing + "'");
        if (int(vals.size()) != 2 * dim)
            fail("expected " + std::to_string(2 * dim) + " values, got " +
                 std::to_string(vals.size()));
        double norm2 = 0.0;
        for (int k = 0; k < dim; ++k) norm2 += vals[std::size_t(dim + k)] * vals[std::size_t(dim + k)];
        double norm = std::sqrt(norm2);
        if (std::fabs(norm - 1.0) > 1e-3)
            fail("normal length " + std::to_string(norm) + " is not unit within 1e-3");
        // skip the division when the norm is unit to machine precision so
        // re-reading a file we wrote does not perturb last bits
        bool renorm = std::fabs(norm - 1.0) > 4e-16;
        for (int k = 0; k < dim; ++k) {
            pts.x.push_back(vals[std::size_t(k)]);
            pts.n.push_back(renorm ? vals[std::size_t(dim + k)] / norm : vals[std::size_t(dim + k)]);
        }
    }
    if (in.bad()) throw io_error("read failure on " + path);
    if (pts.x.empty()) throw data_error(path + ": no points");
    return pts;
}

inline void write_pointcloud(const std::string& path, const oriented_points& pts) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    char buf[64];
    for (std::size_t i = 0; i < pts.count(); ++i) {
        for (int k = 0; k < pts.dim; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", pts.x[i * std::size_t(pts.dim) + std::size_t(k)]);
            out << buf << ' ';
        }
        for (int k = 0; k < pts.dim; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", pts.n[i * std::size_t(pts.dim) + std::size_t(k)]);
            out << buf << (k + 1 == pts.dim ? '\n' : ' ');
        }
    }
    if (!out) throw io_error("write failure on " + path);
}

// Evenly spaced circle samples with outward normals.
inline oriented_points circle_points(std::size_t count, std::span<const double> center,
                                     double radius) {
    constexpr double pi = 3.14159265358979323846;
    oriented_points pts;
    pts.dim = 2;
    for (std::size_t i = 0; i < count; ++i) {
        double th = 2.0 * pi * double(i) / double(count);
        double nx = std::cos(th), ny = std::sin(th);
        pts.x.push_back(center[0] + radius * nx);
        pts.x.push_back(center[1] + radius * ny);
        pts.n.push_back(nx);
        pts.n.push_back(ny);
    }
    return pts;
}

// Fibonacci-lattice sphere samples with outward normals.
inline oriented_points sphere_points(std::size_t count, std::span<const double> center,
                                     double radius) {
    constexpr double pi = 3.14159265358979323846;
    const double golden = pi * (3.0 - std::sqrt(5.0));
    oriented_points pts;
    pts.dim = 3;
    for (std::size_t i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (double(i) + 0.5) / double(count);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = golden * double(i);
        double nx = r * std::cos(th), ny = r * std::sin(th);
        pts.x.push_back(center[0] + radius * nx);
        pts.x.push_back(center[1] + radius * ny);
        pts.x.push_back(center[2] + radius * z);
        pts.n.push_back(nx);
        pts.n.push_back(ny);
        pts.n.push_back(z);
    }
    return pts;
}

}  // namespace dinf
