#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dinf/errors.hpp"

namespace dinf {

class tape;

// Scalar recorded on a tape. A null tape pointer marks a constant, and every
// operator folds constants eagerly, so expressions that never touch a
// parameter cost no tape nodes at all. That property is what keeps the
// spatial-weight math (a function of coordinates only) out of the tape even
// when the surrounding code is instantiated for recorded arithmetic.
struct var {
    tape* t = nullptr;
    std::uint32_t id = 0;
    double v = 0.0;

    var() = default;
    var(double c) : v(c) {}  // implicit: doubles are constants
};

// Reverse-mode tape. Nodes hold (parent, partial) edges; values live on the
// vars themselves. Topological order is construction order, so the reverse
// sweep is a single backward pass. One tape per worker thread; reset() keeps
// capacity so per-chunk reuse does not allocate.
class tape {
  public:
    var leaf(double value, std::int64_t param = -1) {
        nodes_.push_back({edge_count(), 0, std::int32_t(param)});
        return make(value);
    }

    var record1(double value, const var& p, double d) {
        assert(p.t == this && p.id < nodes_.size());
        parent_.push_back(p.id);
        partial_.push_back(d);
        nodes_.push_back({edge_count() - 1, 1, -1});
        return make(value);
    }

    var record2(double value, const var& p0, double d0, const var& p1, double d1) {
        assert(p0.t == this && p1.t == this && p0.id < nodes_.size() && p1.id < nodes_.size());
        parent_.push_back(p0.id);
        parent_.push_back(p1.id);
        partial_.push_back(d0);
        partial_.push_back(d1);
        nodes_.push_back({edge_count() - 2, 2, -1});
        return make(value);
    }

    // general node: value was computed by the caller, partials are exact local
    // derivatives with respect to each parent; constant parents must already
    // be folded into value
    var fused(double value, std::span<const var> parents, std::span<const double> partials) {
        assert(parents.size() == partials.size());
        std::uint32_t begin = edge_count();
        for (std::size_t i = 0; i < parents.size(); ++i) {
            if (parents[i].t == nullptr) continue;
            if (parents[i].t != this || parents[i].id >= nodes_.size())
                throw internal_error("tape: unknown parent id in fused record");
            parent_.push_back(parents[i].id);
            partial_.push_back(partials[i]);
        }
        nodes_.push_back({begin, edge_count() - begin, -1});
        return make(value);
    }

    // d(seed)/d(param) accumulated into grad for every parameter leaf
    void reverse(const var& seed, std::span<double> grad) {
        assert(seed.t == this && seed.id < nodes_.size());
        adj_.assign(nodes_.size(), 0.0);
        adj_[seed.id] = 1.0;
        for (std::size_t i = nodes_.size(); i-- > 0;) {
            double a = adj_[i];
            if (a == 0.0) continue;
            const node& nd = nodes_[i];
            for (std::uint32_t e = nd.begin; e < nd.begin + nd.count; ++e)
                adj_[parent_[e]] += a * partial_[e];
            if (nd.param >= 0) {
                assert(std::size_t(nd.param) < grad.size());
                grad[nd.param] += a;
            }
        }
    }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_total() const { return parent_.size(); }

    void reset() {
        nodes_.clear();
        parent_.clear();
        partial_.clear();
    }

  private:
    struct node {
        std::uint32_t begin;
        std::uint32_t count;
        std::int32_t param;
    };

    std::uint32_t edge_count() const { return std::uint32_t(parent_.size()); }

    var make(double value) {
        var out;
        out.t = this;
        out.id = std::uint32_t(nodes_.size() - 1);
        out.v = value;
        return out;
    }

    std::vector<node> nodes_;
    std::vector<std::uint32_t> parent_;
    std::vector<double> partial_;
    std::vector<double> adj_;
};

// ---- scalar arithmetic on vars ----------------------------------------------
// Every operator folds when all operands are constants, records a one-edge
// node when one side is constant, and a two-edge node otherwise.

namespace detail {
inline tape* owner(const var& a, const var& b) {
    assert(a.t == nullptr || b.t == nullptr || a.t == b.t);
    return a.t ? a.t : b.t;
}
}  // namespace detail

inline var operator+(const var& a, const var& b) {
    tape* t = detail::owner(a, b);
    if (!t) return var(a.v + b.v);
    if (!a.t) return t->record1(a.v + b.v, b, 1.0);
    if (!b.t) return t->record1(a.v + b.v, a, 1.0);
    return t->record2(a.v + b.v, a, 1.0, b, 1.0);
}

inline var operator-(const var& a, const var& b) {
    tape* t = detail::owner(a, b);
    if (!t) return var(a.v - b.v);
    if (!a.t) return t->record1(a.v - b.v, b, -1.0);
    if (!b.t) return t->record1(a.v - b.v, a, 1.0);
    return t->record2(a.v - b.v, a, 1.0, b, -1.0);
}

inline var operator-(const var& a) {
    if (!a.t) return var(-a.v);
    return a.t->record1(-a.v, a, -1.0);
}

inline var operator*(const var& a, const var& b) {
    tape* t = detail::owner(a, b);
    if (!t) return var(a.v * b.v);
    if (!a.t) return t->record1(a.v * b.v, b, a.v);
    if (!b.t) return t->record1(a.v * b.v, a, b.v);
    return t->record2(a.v * b.v, a, b.v, b, a.v);
}

inline var operator/(const var& a, const var& b) {
    tape* t = detail::owner(a, b);
    double inv = 1.0 / b.v;
    if (!t) return var(a.v * inv);
    if (!a.t) return t->record1(a.v * inv, b, -a.v * inv * inv);
    if (!b.t) return t->record1(a.v * inv, a, inv);
    return t->record2(a.v * inv, a, inv, b, -a.v * inv * inv);
}

inline var exp(const var& a) {
    double e = std::exp(a.v);
    if (!a.t) return var(e);
    return a.t->record1(e, a, e);
}

inline var log(const var& a) {
    if (!a.t) return var(std::log(a.v));
    return a.t->record1(std::log(a.v), a, 1.0 / a.v);
}

inline var sin(const var& a) {
    if (!a.t) return var(std::sin(a.v));
    return a.t->record1(std::sin(a.v), a, std::cos(a.v));
}

inline var cos(const var& a) {
    if (!a.t) return var(std::cos(a.v));
    return a.t->record1(std::cos(a.v), a, -std::sin(a.v));
}

inline var tanh(const var& a) {
    double th = std::tanh(a.v);
    if (!a.t) return var(th);
    return a.t->record1(th, a, 1.0 - th * th);
}

inline var sqrt(const var& a) {
    double s = std::sqrt(a.v);
    if (!a.t) return var(s);
    return a.t->record1(s, a, 0.5 / s);
}

inline var pow(const var& a, double p) {
    double f = std::pow(a.v, p);
    if (!a.t) return var(f);
    return a.t->record1(f, a, p * std::pow(a.v, p - 1.0));
}

// |x| with subgradient 0 at the kink; used only at loss level where no
// spatial derivative passes through
inline var abs_sub(const var& a) {
    double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    if (!a.t) return var(std::fabs(a.v));
    return a.t->record1(std::fabs(a.v), a, s);
}
inline double abs_sub(double a) { return std::fabs(a); }

// sum_i a_i * b_i as one node; partials are the opposite factor values
inline var dot_pairs(std::span<const var> a, std::span<const var> b) {
    assert(a.size() == b.size());
    tape* t = nullptr;
    double value = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        value += a[i].v * b[i].v;
        if (!t) t = a[i].t ? a[i].t : b[i].t;
    }
    if (!t) return var(value);
    thread_local std::vector<var> ps;
    thread_local std::vector<double> ds;
    ps.clear();
    ds.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].t) {
            ps.push_back(a[i]);
            ds.push_back(b[i].v);
        }
        if (b[i].t) {
            ps.push_back(b[i]);
            ds.push_back(a[i].v);
        }
    }
    return t->fused(value, ps, ds);
}

inline double dot_pairs(std::span<const double> a, std::span<const double> b) {
    double value = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) value += a[i] * b[i];
    return value;
}

}  // namespace dinf
