#pragma once

// Independent reference computations used by the test suite. Everything here
// is deliberately brute-force and kept free of the library's evaluation code
// so that agreement between the two is meaningful: derivatives come from
// central differences on plain function evaluation, and the RBF reference
// sums over the full node set with no neighborhood truncation.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

using scalar_field = std::function<double(std::span<const double>)>;

inline double shifted(const scalar_field& f, std::span<const double> x, int k, double dk,
                      int l = -1, double dl = 0.0) {
    std::array<double, 4> p{};
    for (std::size_t i = 0; i < x.size(); ++i) p[i] = x[i];
    p[k] += dk;
    if (l >= 0) p[l] += dl;
    return f(std::span<const double>(p.data(), x.size()));
}

// first derivative, O(h^2) central stencil
inline double diff1(const scalar_field& f, std::span<const double> x, int k, double h = 1e-4) {
    return (shifted(f, x, k, h) - shifted(f, x, k, -h)) / (2.0 * h);
}

// second derivative: pure along one axis, or mixed via the 4-point stencil
inline double diff2(const scalar_field& f, std::span<const double> x, int k, int l,
                    double h = 1e-4) {
    if (k == l)
        return (shifted(f, x, k, h) - 2.0 * f(x) + shifted(f, x, k, -h)) / (h * h);
    return (shifted(f, x, k, h, l, h) - shifted(f, x, k, h, l, -h) -
            shifted(f, x, k, -h, l, h) + shifted(f, x, k, -h, l, -h)) /
           (4.0 * h * h);
}

inline double rel_err(double got, double want, double floor = 1e-2) {
    double denom = std::max({std::fabs(got), std::fabs(want), floor});
    return std::fabs(got - want) / denom;
}

// Normalized Gaussian-RBF interpolation over the FULL node lattice of one
// scale (no truncation): nodes at -1 + 2i/n per axis, kernel exp(-eps^2 r^2)
// with r measured in cell widths. features holds one value per node,
// row-major with the last axis fastest.
inline double dense_rbf(std::span<const double> features, int dim, int n, double eps,
                        std::span<const double> x) {
    double h = 2.0 / n;
    int nodes_per_axis = n + 1;
    std::size_t total = 1;
    for (int k = 0; k < dim; ++k) total *= nodes_per_axis;

    double num = 0.0, den = 0.0;
    std::array<int, 3> idx{};
    for (std::size_t lin = 0; lin < total; ++lin) {
        std::size_t rest = lin;
        for (int k = dim - 1; k >= 0; --k) {
            idx[k] = int(rest % nodes_per_axis);
            rest /= nodes_per_axis;
        }
        double r2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            double c = -1.0 + 2.0 * double(idx[k]) / double(n);
            double d = (x[k] - c) / h;
            r2 += d * d;
        }
        double w = std::exp(-eps * eps * r2);
        num += w * features[lin];
        den += w;
    }
    return num / den;
}

// Frozen special-function reference values (standard tables, 17 significant
// digits). Used to pin the Bessel implementation and the distance-to-zero
// test without depending on the code under test.
constexpr double j0_first_zero = 2.4048255576957729;

struct bessel_sample {
    double x, j0, y0;
};
inline constexpr bessel_sample bessel_table[] = {
    {0.5, 0.93846980724081286, -0.44451873350670656},
    {1.0, 0.76519768655796661, 0.088256964215676956},
    {2.0, 0.22389077914123567, 0.51037567264974515},
    {5.0, -0.17759677131433829, -0.30851762524903376},
    {8.0, 0.1716508071375539, 0.22352148938756622},
    {11.9, 0.025049441699589645, -0.22983321394337505},
    {12.1, 0.069666773606807314, -0.21843838055092549},
    {20.0, 0.16702466434058316, 0.062640596809383831},
    {50.0, 0.055812327669251816, -0.098064995470077077},
    {60.0, -0.091471804089061873, 0.047358952209449398},
};

// Power-series J0 for the bisection oracle; independent of the library's
// split series/asymptotic implementation. Reliable for |x| <= 13.
inline double j0_series(double x) {
    double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m <= 60; ++m) {
        term *= -q / double(m * m);
        sum += term;
        if (std::fabs(term) < 1e-19 * std::fabs(sum) + 1e-300) break;
    }
    return sum;
}

}  // namespace oracle
