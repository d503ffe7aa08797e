#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "dinf/jet.hpp"
#include "dinf/rng.hpp"
#include "dinf/tape.hpp"
#include "oracles.hpp"

using dinf::jet;
using dinf::tape;
using dinf::var;

TEST_CASE("reverse of a square recovers 2x") {
    tape t;
    var x = t.leaf(3.0, 0);
    var y = x * x;
    REQUIRE(y.v == 9.0);
    std::vector<double> grad(1, 0.0);
    t.reverse(y, grad);
    REQUIRE(grad[0] == 6.0);
}

TEST_CASE("sum node carries unit partials") {
    tape t;
    var a = t.leaf(1.5, 0);
    var b = t.leaf(-0.5, 1);
    var s = a + b;
    std::vector<double> grad(2, 0.0);
    t.reverse(s, grad);
    REQUIRE(grad[0] == 1.0);
    REQUIRE(grad[1] == 1.0);
}

TEST_CASE("parameters off the recorded graph get exactly zero") {
    tape t;
    var a = t.leaf(1.0, 0);
    t.leaf(2.0, 1);  // recorded but unused
    var y = dinf::exp(a);
    std::vector<double> grad(3, 0.0);
    t.reverse(y, grad);
    REQUIRE(grad[1] == 0.0);
    REQUIRE(grad[2] == 0.0);
}

TEST_CASE("reverse is linear in the seed") {
    tape t;
    var p = t.leaf(0.7, 0);
    var q = t.leaf(-1.2, 1);
    var l1 = dinf::sin(p * q) + p;
    var l2 = dinf::exp(q) * p;
    var combo = l1 * 2.5 + l2 * (-0.75);

    std::vector<double> g1(2, 0.0), g2(2, 0.0), gc(2, 0.0);
    t.reverse(l1, g1);
    t.reverse(l2, g2);
    t.reverse(combo, gc);
    for (int i = 0; i < 2; ++i)
        REQUIRE(std::fabs(gc[i] - (2.5 * g1[i] - 0.75 * g2[i])) < 1e-12);
}

TEST_CASE("constants fold: no nodes recorded for parameter-free math") {
    tape t;
    var a = 2.0, b = 3.5;
    var c = dinf::exp(a * b) + dinf::sin(b) / a;
    REQUIRE(c.t == nullptr);
    REQUIRE(t.node_count() == 0);

    // mixing a constant with a recorded var costs a single one-edge node
    var p = t.leaf(1.0, 0);
    std::size_t before = t.node_count();
    var d = p * 4.0;
    REQUIRE(d.t == &t);
    REQUIRE(t.node_count() == before + 1);
}

TEST_CASE("unknown parent id is rejected") {
    tape t;
    t.leaf(1.0, 0);
    var fake;
    fake.t = &t;
    fake.id = 999;
    fake.v = 1.0;
    double partial = 1.0;
    REQUIRE_THROWS_AS(t.fused(1.0, std::span<const var>(&fake, 1),
                              std::span<const double>(&partial, 1)),
                      dinf::internal_error);
}

TEST_CASE("gradients of a composite graph match finite differences") {
    dinf::rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(4);
        for (auto& v : p) v = rng.uniform(0.3, 1.5);

        auto eval = [](std::span<const double> q) {
            double s = std::sin(q[0] * q[1]) + std::exp(-q[2]) * q[3];
            return std::tanh(s) + std::sqrt(q[0] + q[3]) / (q[1] + 2.0) + std::log(q[2] + 1.0);
        };

        tape t;
        std::vector<var> vs(4);
        for (int i = 0; i < 4; ++i) vs[i] = t.leaf(p[i], i);
        var s = dinf::sin(vs[0] * vs[1]) + dinf::exp(-vs[2]) * vs[3];
        var loss = dinf::tanh(s) + dinf::sqrt(vs[0] + vs[3]) / (vs[1] + 2.0) +
                   dinf::log(vs[2] + 1.0);
        REQUIRE(oracle::rel_err(loss.v, eval(p)) < 1e-14);

        std::vector<double> grad(4, 0.0);
        t.reverse(loss, grad);
        for (int i = 0; i < 4; ++i) {
            double fd = oracle::diff1(eval, p, i, 1e-5);
            REQUIRE(oracle::rel_err(grad[i], fd, 1e-3) < 1e-6);
        }
    }
}

TEST_CASE("fused linear combination and dot nodes match their expanded forms") {
    tape t;
    std::vector<var> leaves;
    std::vector<double> coeff = {0.5, -1.5, 2.0};
    double value = 0.0;
    for (int i = 0; i < 3; ++i) {
        leaves.push_back(t.leaf(double(i + 1), i));
        value += coeff[i] * leaves[i].v;
    }
    var lc = t.fused(value, leaves, coeff);
    std::vector<double> grad(3, 0.0);
    t.reverse(lc, grad);
    for (int i = 0; i < 3; ++i) REQUIRE(grad[i] == coeff[i]);

    t.reset();
    leaves.clear();
    std::vector<var> ws, xs;
    for (int i = 0; i < 3; ++i) {
        ws.push_back(t.leaf(0.5 * (i + 1), i));
        xs.push_back(t.leaf(-1.0 + i, 3 + i));
    }
    var d = dinf::dot_pairs(std::span<const var>(ws), std::span<const var>(xs));
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) expect += ws[i].v * xs[i].v;
    REQUIRE(std::fabs(d.v - expect) < 1e-15);
    std::vector<double> g(6, 0.0);
    t.reverse(d, g);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(g[i] == xs[i].v);
        REQUIRE(g[3 + i] == ws[i].v);
    }
}

TEST_CASE("jets of recorded vars: parameter derivatives of spatial derivatives") {
    // u(x; p) = p0 * sin(p1 * x); every mixed derivative is known in closed form
    double p0 = 1.3, p1 = 0.9, x0 = 0.62;

    tape t;
    var vp0 = t.leaf(p0, 0);
    var vp1 = t.leaf(p1, 1);
    auto xs = dinf::jet_seed<var, 2>(std::span<const double>(&x0, 1));
    jet<var, 2> u = vp0 * dinf::sin(xs[0] * vp1);

    REQUIRE(oracle::rel_err(u.v.v, p0 * std::sin(p1 * x0)) < 1e-14);
    REQUIRE(oracle::rel_err(u.g[0].v, p0 * p1 * std::cos(p1 * x0)) < 1e-14);
    REQUIRE(oracle::rel_err(u.h[0].v, -p0 * p1 * p1 * std::sin(p1 * x0)) < 1e-14);

    std::vector<double> grad(2, 0.0);
    t.reverse(u.g[0], grad);  // d(u_x)/dp
    REQUIRE(oracle::rel_err(grad[0], p1 * std::cos(p1 * x0)) < 1e-13);
    REQUIRE(oracle::rel_err(grad[1],
                            p0 * std::cos(p1 * x0) - p0 * p1 * x0 * std::sin(p1 * x0)) < 1e-13);

    grad.assign(2, 0.0);
    t.reverse(u.h[0], grad);  // d(u_xx)/dp
    REQUIRE(oracle::rel_err(grad[0], -p1 * p1 * std::sin(p1 * x0)) < 1e-13);
    REQUIRE(oracle::rel_err(grad[1], -2.0 * p0 * p1 * std::sin(p1 * x0) -
                                         p0 * p1 * p1 * x0 * std::cos(p1 * x0)) < 1e-13);
}

TEST_CASE("reset clears nodes and keeps the tape usable") {
    tape t;
    var a = t.leaf(1.0, 0);
    (void)(a * a);
    REQUIRE(t.node_count() > 0);
    t.reset();
    REQUIRE(t.node_count() == 0);
    var b = t.leaf(2.0, 0);
    var c = b * b;
    std::vector<double> grad(1, 0.0);
    t.reverse(c, grad);
    REQUIRE(grad[0] == 4.0);
}
