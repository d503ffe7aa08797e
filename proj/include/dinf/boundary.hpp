#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <span>

#include "dinf/domain.hpp"
#include "dinf/errors.hpp"
#include "dinf/jet.hpp"

namespace dinf {

// Hard-constraint composition of the raw network output with prescribed data:
//   u = raw * window + offset
// where window vanishes exactly on the constraint set (so u equals the data
// there no matter what the parameters are) and rises to ~1 away from it over
// a width set by sigma. Window and offset depend on coordinates only, so they
// never touch the tape.
enum class blend_mode { none, spatial, initial, initial_spatial };
enum class initial_profile { zero, sine_pi, gauss };

struct boundary_config {
    blend_mode mode = blend_mode::none;
    double sigma_spatial = 0.05;  // blend widths, normalized units, B = 1 - exp(-d^2/sigma)
    double sigma_initial = 0.05;
    initial_profile profile = initial_profile::zero;
    std::array<double, 3> profile_center{};  // gauss center, physical units per spatial axis
    double profile_width = 0.1;              // gauss width, physical units
    double profile_amp = 1.0;
};

inline void validate_boundary(const boundary_config& bc, int dim) {
    if (bc.mode == blend_mode::none) return;
    if (!(bc.sigma_spatial > 0.0) || !(bc.sigma_initial > 0.0))
        throw config_error("boundary: blend widths must be positive");
    if ((bc.mode == blend_mode::initial || bc.mode == blend_mode::initial_spatial) && dim < 2)
        throw config_error("boundary: an initial-time blend needs a time axis (dim >= 2)");
    if (bc.profile == initial_profile::gauss && !(bc.profile_width > 0.0))
        throw config_error("boundary: gauss profile width must be positive");
}

// Distance to the nearest face of the normalized box over the first
// spatial_dims axes: min_k min(1 - x_k, x_k + 1).
inline double box_face_distance(std::span<const double> xn, int spatial_dims) {
    double d = 2.0;
    for (int k = 0; k < spatial_dims; ++k)
        d = std::min(d, std::min(1.0 - xn[std::size_t(k)], xn[std::size_t(k)] + 1.0));
    return d;
}

template <int P>
jet<double, P> box_face_distance_jet(std::span<const double> xn, int dim, int spatial_dims) {
    jet<double, P> best = jet_const<double, P>(dim, 2.0);
    for (int k = 0; k < spatial_dims; ++k) {
        jet<double, P> lo;  // x_k + 1, gradient e_k
        lo.dim = dim;
        lo.v = xn[std::size_t(k)] + 1.0;
        lo.g[std::size_t(k)] = 1.0;
        jet<double, P> hi;  // 1 - x_k
        hi.dim = dim;
        hi.v = 1.0 - xn[std::size_t(k)];
        hi.g[std::size_t(k)] = -1.0;
        if (lo.v < best.v) best = lo;
        if (hi.v < best.v) best = hi;
    }
    return best;
}

template <int P>
jet<double, P> blend_window(const jet<double, P>& dist, double sigma) {
    return 1.0 - exp(-(dist * dist) / sigma);
}

// Initial data pulled back over time: evaluated on the physical spatial
// coordinates only, constant along the time axis.
template <int P>
jet<double, P> initial_profile_jet(const boundary_config& bc, const domain_map& dom,
                                   std::span<const double> xn, int spatial_dims) {
    switch (bc.profile) {
        case initial_profile::zero:
            return jet_const<double, P>(dom.dim, 0.0);
        case initial_profile::sine_pi: {
            auto xp = phys_coord_jet<P>(dom, 0, xn);
            return sin(xp * 3.14159265358979323846);
        }
        case initial_profile::gauss: {
            jet<double, P> q = jet_const<double, P>(dom.dim, 0.0);
            for (int k = 0; k < spatial_dims; ++k) {
                auto d = phys_coord_jet<P>(dom, k, xn) - bc.profile_center[std::size_t(k)];
                q = q + d * d;
            }
            double inv2w2 = 1.0 / (2.0 * bc.profile_width * bc.profile_width);
            return bc.profile_amp * exp(-(q * inv2w2));
        }
    }
    return jet_const<double, P>(dom.dim, 0.0);
}

template <int P>
struct blend_parts {
    bool identity = true;
    jet<double, P> window;
    jet<double, P> offset;
};

template <int P>
blend_parts<P> boundary_parts(const boundary_config& bc, const domain_map& dom,
                              std::span<const double> xn) {
    blend_parts<P> parts;
    if (bc.mode == blend_mode::none) return parts;
    parts.identity = false;
    const int dim = dom.dim;
    if (bc.mode == blend_mode::spatial) {
        parts.window = blend_window(box_face_distance_jet<P>(xn, dim, dim), bc.sigma_spatial);
        parts.offset = jet_const<double, P>(dim, 0.0);
        return parts;
    }
    const int spatial = dim - 1;  // time is the last axis
    jet<double, P> dt;            // distance to the initial face t_norm = -1
    dt.dim = dim;
    dt.v = xn[std::size_t(spatial)] + 1.0;
    dt.g[std::size_t(spatial)] = 1.0;
    jet<double, P> bt = blend_window(dt, bc.sigma_initial);
    jet<double, P> h0 = initial_profile_jet<P>(bc, dom, xn, spatial);
    parts.offset = h0 * (1.0 - bt);
    if (bc.mode == blend_mode::initial) {
        parts.window = bt;
    } else {
        parts.window =
            bt * blend_window(box_face_distance_jet<P>(xn, dim, spatial), bc.sigma_spatial);
    }
    return parts;
}

// u = raw * window + offset; the mixed products promote to the recorded
// component type while the parts stay plain doubles.
template <class T, int Order>
jet<T, Order> apply_boundary(const jet<T, Order>& raw, const blend_parts<Order>& parts) {
    if (parts.identity) return raw;
    return raw * parts.window + parts.offset;
}

}  // namespace dinf
