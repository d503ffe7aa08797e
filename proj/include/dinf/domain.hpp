#pragma once

#include <array>
#include <cassert>
#include <span>

#include "dinf/errors.hpp"
#include "dinf/jet.hpp"

namespace dinf {

// Per-axis affine map between a physical interval [lo, hi] and the normalized
// interval [-1, 1] the grids live on. Derivatives taken in normalized
// coordinates convert to physical units by one factor of dnorm_dphys per
// differentiation order.
struct axis_range {
    double lo = -1.0;
    double hi = 1.0;
};

struct domain_map {
    int dim = 0;
    std::array<axis_range, 3> axes{};

    double to_norm(int k, double xp) const {
        const axis_range& a = axes[std::size_t(k)];
        return -1.0 + 2.0 * (xp - a.lo) / (a.hi - a.lo);
    }
    double to_phys(int k, double xn) const {
        const axis_range& a = axes[std::size_t(k)];
        return a.lo + 0.5 * (xn + 1.0) * (a.hi - a.lo);
    }
    // d(normalized)/d(physical); multiplies first derivatives once, second
    // derivatives twice
    double dnorm_dphys(int k) const {
        const axis_range& a = axes[std::size_t(k)];
        return 2.0 / (a.hi - a.lo);
    }
};

inline domain_map make_domain(int dim, std::span<const axis_range> axes) {
    if (dim < 1 || dim > 3 || axes.size() != std::size_t(dim))
        throw config_error("domain: need one axis range per dimension (1..3)");
    domain_map d;
    d.dim = dim;
    for (int k = 0; k < dim; ++k) {
        if (!(axes[std::size_t(k)].hi > axes[std::size_t(k)].lo))
            throw config_error("domain: axis " + std::to_string(k) + " has hi <= lo");
        d.axes[std::size_t(k)] = axes[std::size_t(k)];
    }
    return d;
}

inline domain_map unit_domain(int dim) {
    domain_map d;
    d.dim = dim;
    return d;
}

// Rescales the derivative components of a jet taken in normalized coordinates
// so they read in physical units. The value is unchanged.
template <class T, int P>
jet<T, P> to_physical(const jet<T, P>& a, const domain_map& d) {
    assert(a.dim == d.dim);
    jet<T, P> out = a;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] * d.dnorm_dphys(k);
    if constexpr (P == 2) {
        for (int l = 0; l < a.dim; ++l)
            for (int k = 0; k <= l; ++k)
                out.h[hess_index(k, l)] =
                    a.h[hess_index(k, l)] * (d.dnorm_dphys(k) * d.dnorm_dphys(l));
    }
    return out;
}

// Physical coordinate of axis k as a jet of the normalized inputs, for
// composing closed-form profiles with grid-space evaluation.
template <int P = 2>
jet<double, P> phys_coord_jet(const domain_map& d, int k, std::span<const double> xn) {
    assert(k >= 0 && k < d.dim && xn.size() == std::size_t(d.dim));
    jet<double, P> out;
    out.dim = d.dim;
    out.v = d.to_phys(k, xn[std::size_t(k)]);
    out.g[std::size_t(k)] = 1.0 / d.dnorm_dphys(k);
    return out;
}

}  // namespace dinf
