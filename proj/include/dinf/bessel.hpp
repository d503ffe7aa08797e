#pragma once

#include <cmath>
#include <string>

#include "dinf/errors.hpp"
#include "dinf/jet.hpp"

namespace dinf {

// J0 and Y0 accurate to ~1e-10 absolute over (0, 1e3]: power series up to the
// split point x = 12, Hankel asymptotic expansion beyond it. The routines are
// generic over double or jet arguments; running the series in jet arithmetic
// differentiates it term by term, so derivatives inherit the same accuracy.

namespace detail {

inline double sval(double x) { return x; }
template <int P>
double sval(const jet<double, P>& x) {
    return x.v;
}

inline double like_const(double, double c) { return c; }
template <int P>
jet<double, P> like_const(const jet<double, P>& x, double c) {
    return jet_const<double, P>(x.dim, c);
}

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286;

template <class S>
S j0_series(const S& x) {
    S q = x * x * 0.25;
    S sum = like_const(x, 1.0);
    S term = like_const(x, 1.0);
    for (int m = 1; m <= 80; ++m) {
        term = term * q * (-1.0 / (double(m) * double(m)));
        sum = sum + term;
        if (std::fabs(sval(term)) < 1e-20) break;
    }
    return sum;
}

template <class S>
S y0_series(const S& x) {
    using std::log;
    S q = x * x * 0.25;
    S j0 = j0_series(x);
    S sum = like_const(x, 0.0);
    S term = like_const(x, 1.0);
    double harmonic = 0.0;
    double sign = 1.0;  // (-1)^{m+1} starting at m = 1
    for (int m = 1; m <= 80; ++m) {
        term = term * q * (1.0 / (double(m) * double(m)));
        harmonic += 1.0 / double(m);
        sum = sum + term * (sign * harmonic);
        sign = -sign;
        if (std::fabs(sval(term)) * harmonic < 1e-20) break;
    }
    return ((log(x * 0.5) + euler_gamma) * j0 + sum) * (2.0 / pi);
}

// Hankel expansion pieces: J0 = amp (P cos chi - Q sin chi),
//                          Y0 = amp (P sin chi + Q cos chi).
template <class S>
struct hankel_parts {
    S p, q, chi, amp;
};

template <class S>
hankel_parts<S> hankel(const S& x) {
    using std::sqrt;
    S z = 1.0 / x;
    S p = like_const(x, 0.0);
    S q = like_const(x, 0.0);
    S zk = like_const(x, 1.0);
    double ak = 1.0;  // prod (2i-1)^2 / (k! 8^k)
    for (int k = 0; k <= 15; ++k) {
        if (k > 0) {
            ak *= double(2 * k - 1) * double(2 * k - 1) / (8.0 * double(k));
            zk = zk * z;
        }
        double sign = (((k + 1) >> 1) & 1) ? -1.0 : 1.0;  // +, -, -, +, ...
        if (k % 2 == 0)
            p = p + zk * (sign * ak);
        else
            q = q + zk * (sign * ak);
    }
    return {p, q, x - pi / 4.0, sqrt(z * (2.0 / pi))};
}

}  // namespace detail

template <class S>
S bessel_j0(const S& x) {
    using std::cos;
    using std::sin;
    double xv = detail::sval(x);
    if (!(xv >= 0.0) || !std::isfinite(xv))
        throw numeric_error("bessel_j0: argument must be finite and nonnegative, got " +
                            std::to_string(xv));
    if (xv <= 12.0) return detail::j0_series(x);
    auto hp = detail::hankel(x);
    return hp.amp * (hp.p * cos(hp.chi) - hp.q * sin(hp.chi));
}

template <class S>
S bessel_y0(const S& x) {
    using std::cos;
    using std::sin;
    double xv = detail::sval(x);
    if (!(xv > 0.0) || !std::isfinite(xv))
        throw numeric_error("bessel_y0: argument must be finite and positive, got " +
                            std::to_string(xv));
    if (xv <= 12.0) return detail::y0_series(x);
    auto hp = detail::hankel(x);
    return hp.amp * (hp.p * sin(hp.chi) + hp.q * cos(hp.chi));
}

}  // namespace dinf
