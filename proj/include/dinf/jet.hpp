#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>

namespace dinf {

// Second-order forward-mode number: value, gradient and symmetric Hessian
// with respect to up to three spatial inputs (dim is runtime, storage is
// fixed-capacity). Order 1 drops the Hessian entirely, which roughly halves
// the work for first-order losses.
//
// The component type T is double for plain evaluation; it can also be a tape
// variable, in which case every component expression below is recorded and
// parameter gradients of any jet component become available by reverse
// sweep. Arithmetic between mixed component types promotes to the recorded
// one, so constants stay out of the tape.

// packed upper-triangle index, k <= l: (0,0) (0,1) (1,1) (0,2) (1,2) (2,2)
constexpr int hess_index(int k, int l) { return l * (l + 1) / 2 + k; }
constexpr int hess_count(int dim) { return dim * (dim + 1) / 2; }

struct empty_hess {};

template <class T, int Order = 2>
struct jet {
    static_assert(Order == 1 || Order == 2);
    static constexpr int order = Order;
    using value_type = T;

    int dim = 0;
    T v{};
    std::array<T, 3> g{};
    [[no_unique_address]] std::conditional_t<Order == 2, std::array<T, 6>, empty_hess> h{};

    const T& hess(int k, int l) const
        requires(Order == 2)
    {
        return k <= l ? h[hess_index(k, l)] : h[hess_index(l, k)];
    }
    T& hess(int k, int l)
        requires(Order == 2)
    {
        return k <= l ? h[hess_index(k, l)] : h[hess_index(l, k)];
    }
};

template <class X>
inline constexpr bool is_jet_v = false;
template <class T, int P>
inline constexpr bool is_jet_v<jet<T, P>> = true;

template <class X>
concept jet_scalar = !is_jet_v<std::remove_cvref_t<X>>;

template <class A, class B>
using op_t = decltype(std::declval<A>() * std::declval<B>());

template <class T, int P = 2>
jet<T, P> jet_const(int dim, T value) {
    jet<T, P> out;
    out.dim = dim;
    out.v = value;
    return out;
}

// seeds x as the identity map: g = e_k, h = 0
template <class T = double, int P = 2>
std::array<jet<T, P>, 3> jet_seed(std::span<const double> x) {
    assert(x.size() >= 1 && x.size() <= 3);
    std::array<jet<T, P>, 3> out;
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k].dim = int(x.size());
        out[k].v = T(x[k]);
        out[k].g[k] = T(1.0);
    }
    return out;
}

// ---- linear ops ------------------------------------------------------------

template <class A, class B, int P>
jet<op_t<A, B>, P> operator+(const jet<A, P>& a, const jet<B, P>& b) {
    assert(a.dim == b.dim);
    jet<op_t<A, B>, P> out;
    out.dim = a.dim;
    out.v = a.v + b.v;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] + b.g[k];
    if constexpr (P == 2)
        for (int i = 0; i < hess_count(a.dim); ++i) out.h[i] = a.h[i] + b.h[i];
    return out;
}

template <class A, class B, int P>
jet<op_t<A, B>, P> operator-(const jet<A, P>& a, const jet<B, P>& b) {
    assert(a.dim == b.dim);
    jet<op_t<A, B>, P> out;
    out.dim = a.dim;
    out.v = a.v - b.v;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] - b.g[k];
    if constexpr (P == 2)
        for (int i = 0; i < hess_count(a.dim); ++i) out.h[i] = a.h[i] - b.h[i];
    return out;
}

template <class A, int P>
jet<A, P> operator-(const jet<A, P>& a) {
    jet<A, P> out;
    out.dim = a.dim;
    out.v = -a.v;
    for (int k = 0; k < a.dim; ++k) out.g[k] = -a.g[k];
    if constexpr (P == 2)
        for (int i = 0; i < hess_count(a.dim); ++i) out.h[i] = -a.h[i];
    return out;
}

template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator+(const jet<A, P>& a, const S& s) {
    jet<op_t<A, S>, P> out;
    out.dim = a.dim;
    out.v = a.v + s;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] * 1.0;
    if constexpr (P == 2)
        for (int i = 0; i < hess_count(a.dim); ++i) out.h[i] = a.h[i] * 1.0;
    return out;
}
template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator+(const S& s, const jet<A, P>& a) {
    return a + s;
}
template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator-(const jet<A, P>& a, const S& s) {
    return a + (-1.0 * s);
}
template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator-(const S& s, const jet<A, P>& a) {
    return (-a) + s;
}

template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator*(const jet<A, P>& a, const S& s) {
    jet<op_t<A, S>, P> out;
    out.dim = a.dim;
    out.v = a.v * s;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] * s;
    if constexpr (P == 2)
        for (int i = 0; i < hess_count(a.dim); ++i) out.h[i] = a.h[i] * s;
    return out;
}
template <class A, int P, jet_scalar S>
jet<op_t<A, S>, P> operator*(const S& s, const jet<A, P>& a) {
    return a * s;
}
template <class A, int P>
jet<A, P> operator/(const jet<A, P>& a, double s) {
    return a * (1.0 / s);
}

// ---- product / quotient ----------------------------------------------------

template <class A, class B, int P>
jet<op_t<A, B>, P> operator*(const jet<A, P>& a, const jet<B, P>& b) {
    assert(a.dim == b.dim);
    jet<op_t<A, B>, P> out;
    out.dim = a.dim;
    out.v = a.v * b.v;
    for (int k = 0; k < a.dim; ++k) out.g[k] = a.g[k] * b.v + a.v * b.g[k];
    if constexpr (P == 2) {
        for (int l = 0; l < a.dim; ++l)
            for (int k = 0; k <= l; ++k) {
                int i = hess_index(k, l);
                out.h[i] = a.h[i] * b.v + a.g[k] * b.g[l] + a.g[l] * b.g[k] + a.v * b.h[i];
            }
    }
    return out;
}

// unary chain: out = f(x) given f, f' and f'' evaluated at x.v
template <class T, int P, class F0, class F1, class F2>
jet<T, P> jet_chain(const jet<T, P>& x, const F0& f, const F1& fp, const F2& fpp) {
    jet<T, P> out;
    out.dim = x.dim;
    out.v = f;
    for (int k = 0; k < x.dim; ++k) out.g[k] = fp * x.g[k];
    if constexpr (P == 2) {
        for (int l = 0; l < x.dim; ++l)
            for (int k = 0; k <= l; ++k)
                out.h[hess_index(k, l)] = fpp * (x.g[k] * x.g[l]) + fp * x.h[hess_index(k, l)];
    }
    return out;
}

template <class T, int P>
jet<T, P> recip(const jet<T, P>& x) {
    using std::abs;
    auto r = 1.0 / x.v;  // d(1/x) = -1/x^2, d2 = 2/x^3
    auto r2 = r * r;
    if constexpr (P == 2)
        return jet_chain(x, r, -1.0 * r2, 2.0 * (r2 * r));
    else
        return jet_chain(x, r, -1.0 * r2, 0.0);
}

template <class A, class B, int P>
jet<op_t<A, B>, P> operator/(const jet<A, P>& a, const jet<B, P>& b) {
    return a * recip(b);
}
template <class B, int P, jet_scalar S>
jet<op_t<S, B>, P> operator/(const S& s, const jet<B, P>& b) {
    return recip(b) * s;
}

// ---- transcendentals -------------------------------------------------------

template <class T, int P>
jet<T, P> exp(const jet<T, P>& x) {
    using std::exp;
    auto e = exp(x.v);  // d(exp) = exp
    return jet_chain(x, e, e, e);
}

template <class T, int P>
jet<T, P> log(const jet<T, P>& x) {
    using std::log;
    auto r = 1.0 / x.v;  // d(log x) = 1/x, d2 = -1/x^2
    if constexpr (P == 2)
        return jet_chain(x, log(x.v), r, -1.0 * (r * r));
    else
        return jet_chain(x, log(x.v), r, 0.0);
}

template <class T, int P>
jet<T, P> sin(const jet<T, P>& x) {
    using std::cos;
    using std::sin;
    auto s = sin(x.v);
    auto c = cos(x.v);
    return jet_chain(x, s, c, -1.0 * s);
}

template <class T, int P>
jet<T, P> cos(const jet<T, P>& x) {
    using std::cos;
    using std::sin;
    auto s = sin(x.v);
    auto c = cos(x.v);
    return jet_chain(x, c, -1.0 * s, -1.0 * c);
}

template <class T, int P>
jet<T, P> tanh(const jet<T, P>& x) {
    using std::tanh;
    auto t = tanh(x.v);
    auto tp = 1.0 - t * t;              // d(tanh) = 1 - tanh^2
    if constexpr (P == 2)
        return jet_chain(x, t, tp, -2.0 * (t * tp));
    else
        return jet_chain(x, t, tp, 0.0);
}

template <class T, int P>
jet<T, P> sqrt(const jet<T, P>& x) {
    using std::sqrt;
    auto s = sqrt(x.v);
    auto half_r = 0.5 / s;  // d(sqrt) = 1/(2 sqrt)
    if constexpr (P == 2)
        return jet_chain(x, s, half_r, -0.5 * (half_r / x.v));
    else
        return jet_chain(x, s, half_r, 0.0);
}

template <class T, int P>
jet<T, P> pow(const jet<T, P>& x, double p) {
    using std::pow;
    auto f = pow(x.v, p);
    auto fp = p * pow(x.v, p - 1.0);
    if constexpr (P == 2)
        return jet_chain(x, f, fp, p * (p - 1.0) * pow(x.v, p - 2.0));
    else
        return jet_chain(x, f, fp, 0.0);
}

// C-infinity stand-in for |x| used where a spatial derivative may pass
// through: sqrt(x^2 + delta). The default delta keeps the kink rounded at
// ~1e-6 scale while leaving values above 1e-4 essentially exact.
template <class T, int P>
jet<T, P> abs_smooth(const jet<T, P>& x, double delta = 1e-12) {
    return sqrt(x * x + delta);
}

template <class T, int P>
jet<T, P> sigmoid(const jet<T, P>& x) {
    return recip(exp(-x) + 1.0);
}

// trace of the Hessian
template <class T>
T lap(const jet<T, 2>& x) {
    T out = x.h[hess_index(0, 0)] * 1.0;
    for (int k = 1; k < x.dim; ++k) out = out + x.h[hess_index(k, k)];
    return out;
}

}  // namespace dinf
