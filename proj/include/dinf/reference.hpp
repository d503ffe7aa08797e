#pragma once

#include <cmath>
#include <span>
#include <string>

#include "dinf/bessel.hpp"
#include "dinf/errors.hpp"
#include "dinf/jet.hpp"

namespace dinf {

// Closed-form solutions and data generators used for held-out metrics and for
// validating residual operators independently of any trained model. All
// solution formulas are generic over double or jet arguments so they can be
// pushed through the same operators the model sees.

// u(x, t) = exp(-alpha pi^2 t) sin(pi x): solves u_t = alpha u_xx on [-1, 1]
// with u(x, 0) = sin(pi x) and zero ends.
template <class S>
S heat_solution(const S& x, const S& t, double alpha) {
    using std::exp;
    using std::sin;
    constexpr double pi = 3.14159265358979323846;
    return exp(t * (-alpha * pi * pi)) * sin(x * pi);
}

// Transported Gaussian pulse: solves u_t + vel . grad u = 0.
template <class S>
S advect_solution(const S& x, const S& t, double vel, double center, double width,
                  double amp = 1.0) {
    using std::exp;
    S d = x - t * vel - center;
    return exp(-(d * d) * (1.0 / (2.0 * width * width))) * amp;
}

template <class S>
S advect_solution_nd(std::span<const S> x, const S& t, std::span<const double> vel,
                     std::span<const double> center, double width, double amp = 1.0) {
    S q = detail::like_const(x[0], 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
        S d = x[k] - t * vel[k] - center[k];
        q = q + d * d;
    }
    using std::exp;
    return exp(q * (-1.0 / (2.0 * width * width))) * amp;
}

// Signed distance to a sphere (circle in 2d).
inline double sphere_sdf(std::span<const double> x, std::span<const double> center,
                         double radius) {
    double q = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = x[k] - center[k];
        q += d * d;
    }
    return std::sqrt(q) - radius;
}

// Unit-mass isotropic Gaussian density in d = x.size() dimensions.
inline double gauss_source(std::span<const double> x, double variance) {
    constexpr double pi = 3.14159265358979323846;
    double q = 0.0;
    for (double c : x) q += c * c;
    double norm = std::pow(2.0 * pi * variance, -0.5 * double(x.size()));
    return norm * std::exp(-q / (2.0 * variance));
}

struct complex_value {
    double re = 0.0;
    double im = 0.0;
};

// Outgoing free-space response to a unit point source at the origin for
// (lapl + omega^2) u = -g in 2d, evaluated at radius r: the radiating Hankel
// solution, singular at the source, so callers must stay outside r_min.
inline complex_value helmholtz_green(double omega, double r, double r_min = 0.05) {
    if (!(omega > 0.0)) throw numeric_error("helmholtz_green: omega must be positive");
    if (!(r >= r_min))
        throw numeric_error("helmholtz_green: radius " + std::to_string(r) +
                            " is inside the near-source cutoff " + std::to_string(r_min));
    return {-0.25 * bessel_y0(omega * r), 0.25 * bessel_j0(omega * r)};
}

}  // namespace dinf
