#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dinf/optim.hpp"
#include "dinf/pde.hpp"
#include "oracles.hpp"

namespace {

dinf::field_model fit_model(dinf::param_store& store, int n_max, int scales, int feat,
                            std::uint64_t seed = 7) {
    dinf::rng gen(seed);
    dinf::field_model fm;
    fm.mg = dinf::create_multigrid(store, 2, n_max, scales, feat, gen);
    fm.dec = dinf::create_decoder(store, scales * feat, dinf::decoder_config{}, gen);
    fm.dom = dinf::unit_domain(2);
    dinf::validate_field(fm);
    return fm;
}

dinf::image smooth_image(int w, int h) {
    dinf::image im = dinf::make_image(w, h);
    constexpr double pi = 3.14159265358979323846;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            im.at(i, j) = 0.5 + 0.25 * std::sin(2.0 * pi * double(j) / double(w)) *
                                    std::cos(2.0 * pi * double(i) / double(h));
    return im;
}

// independent mean-loss evaluation through the plain double path
template <class P>
double direct_loss(P& prob, const dinf::param_store& store) {
    dinf::direct_params dp{&store};
    std::vector<dinf::jet<double, P::order>> u(std::size_t(prob.fm.dec.out_width));
    double acc = 0.0;
    for (std::size_t i = 0; i < prob.batch_size(); ++i) {
        dinf::eval_field<P::order>(prob.fm, dp, prob.sample_point(i), prob.sample_rings(i),
                                   std::span<dinf::jet<double, P::order>>(u));
        acc += prob.sample_loss(std::span<const dinf::jet<double, P::order>>(u), i);
    }
    return acc / double(prob.batch_size());
}

// whole-batch gradient on one tape, for locating structurally untouched params
template <class P>
std::vector<double> one_tape_grad(P& prob, const dinf::param_store& store) {
    dinf::tape tp;
    dinf::tape_params pp{&store, &tp};
    pp.cache_range(prob.fm.dec.param_begin, prob.fm.dec.param_count);
    std::vector<dinf::jet<dinf::var, P::order>> u(std::size_t(prob.fm.dec.out_width));
    dinf::var sum;
    for (std::size_t i = 0; i < prob.batch_size(); ++i) {
        dinf::eval_field<P::order>(prob.fm, pp, prob.sample_point(i), prob.sample_rings(i),
                                   std::span<dinf::jet<dinf::var, P::order>>(u));
        sum = sum + prob.sample_loss(std::span<const dinf::jet<dinf::var, P::order>>(u), i);
    }
    std::vector<double> grad(store.size(), 0.0);
    tp.reverse(sum, grad);
    return grad;
}

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("adam leaves zero-gradient parameters bit-identical") {
    dinf::adam_state opt(3, dinf::adam_config{});
    std::vector<double> p{1.5, 0.25, 0.0};
    std::vector<double> g{0.0, 0.0, 0.0};
    for (int s = 0; s < 10; ++s) {
        g[1] = 0.1 + 0.01 * double(s);
        opt.step(p, g);
    }
    CHECK(same_bits(p[0], 1.5));
    CHECK(same_bits(p[2], 0.0));
    CHECK(p[1] != 0.25);
    CHECK(opt.steps() == 10);
}

TEST_CASE("the first adam step moves by the learning rate against the gradient sign") {
    dinf::adam_config cfg;
    SECTION("order-one gradient") {
        dinf::adam_state opt(1, cfg);
        std::vector<double> p{0.2};
        std::vector<double> g{0.7};
        opt.step(p, g);
        CHECK(std::fabs((p[0] - 0.2) + cfg.lr) <= 2e-8 * cfg.lr);
    }
    SECTION("small negative gradient") {
        dinf::adam_state opt(1, cfg);
        std::vector<double> p{0.2};
        std::vector<double> g{-0.003};
        opt.step(p, g);
        CHECK(std::fabs((p[0] - 0.2) - cfg.lr) <= 1e-5 * cfg.lr);
    }
}

TEST_CASE("adam drives a quadratic bowl to the bottom") {
    dinf::adam_config cfg;
    cfg.lr = 1e-2;
    dinf::adam_state opt(3, cfg);
    std::vector<double> p{0.8, -0.5, 0.3};
    std::vector<double> g(3);
    for (int s = 0; s < 500; ++s) {
        for (int i = 0; i < 3; ++i) g[std::size_t(i)] = p[std::size_t(i)];
        opt.step(p, g);
    }
    for (double v : p) CHECK(std::fabs(v) < 1e-3);
}

TEST_CASE("adam rejects mismatched buffer sizes") {
    dinf::adam_state opt(3, dinf::adam_config{});
    std::vector<double> p{1.0, 2.0, 3.0};
    std::vector<double> g{0.1, 0.2};
    CHECK_THROWS_AS(opt.step(p, g), dinf::internal_error);
}

TEST_CASE("a zero-iteration run reports the initial state and touches nothing") {
    dinf::param_store store;
    auto fm = fit_model(store, 8, 2, 2);
    dinf::signal_fit_problem prob(fm, smooth_image(8, 8));
    std::vector<double> before(store.values().begin(), store.values().end());
    double want = direct_loss(prob, store);

    dinf::train_config cfg;
    cfg.iterations = 0;
    auto result = dinf::train(prob, store, cfg);

    CHECK(result.iterations == 0);
    REQUIRE(result.history.size() == 1);
    CHECK(result.history[0].iteration == 0);
    CHECK(result.final_loss == result.initial_loss);
    CHECK(result.initial_loss == Catch::Approx(want).epsilon(1e-12));
    REQUIRE(store.size() == before.size());
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(same_bits(store[i], before[i]));
}

TEST_CASE("chunked recording reproduces the whole-batch loss") {
    dinf::param_store store;
    auto fm = fit_model(store, 8, 2, 2, 11);
    dinf::rng noise(13);
    for (double& v : store.values()) v = noise.uniform(-0.4, 0.4);
    dinf::signal_fit_problem prob(fm, smooth_image(16, 16));
    double want = direct_loss(prob, store);

    for (std::size_t chunk : {std::size_t(7), std::size_t(64), std::size_t(1000)}) {
        dinf::param_store copy = store;
        dinf::signal_fit_problem p2(fm, smooth_image(16, 16));
        dinf::train_config cfg;
        cfg.iterations = 0;
        cfg.chunk = chunk;
        auto result = dinf::train(p2, copy, cfg);
        CHECK(result.initial_loss == Catch::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("training a small fit drops the loss tenfold") {
    dinf::param_store store;
    auto fm = fit_model(store, 8, 2, 2);
    dinf::signal_fit_problem prob(fm, smooth_image(16, 16));

    dinf::train_config cfg;
    cfg.iterations = 400;
    cfg.adam.lr = 1e-2;
    cfg.metric_every = 100;
    auto result = dinf::train(prob, store, cfg);

    CHECK(result.initial_loss > 0.1);
    CHECK(result.final_loss <= result.initial_loss / 10.0);
    CHECK(result.final_metric > 20.0);  // psnr against a smooth target
    CHECK(result.history.back().iteration == 400);
}

TEST_CASE("parameters outside the sampled neighborhoods never move") {
    dinf::param_store store;
    auto fm = fit_model(store, 16, 1, 1);
    dinf::image one = dinf::make_image(1, 1);
    one.at(0, 0) = 0.8;
    dinf::signal_fit_problem prob(fm, one);

    auto g0 = one_tape_grad(prob, store);
    std::vector<std::size_t> frozen;
    for (std::size_t i = 0; i < g0.size(); ++i)
        if (g0[i] == 0.0) frozen.push_back(i);
    REQUIRE(frozen.size() > 100);  // a single pixel touches one ring of the 16x16 grid

    std::vector<double> before(store.values().begin(), store.values().end());
    dinf::train_config cfg;
    cfg.iterations = 30;
    cfg.adam.lr = 1e-2;
    dinf::train(prob, store, cfg);

    bool moved = false;
    for (std::size_t i = 0; i < before.size(); ++i)
        if (store[i] != before[i]) moved = true;
    CHECK(moved);
    for (std::size_t i : frozen) CHECK(same_bits(store[i], before[i]));
}

TEST_CASE("a rerun with the same seed reproduces the trajectory bit for bit") {
    auto run = [] {
        dinf::param_store store;
        dinf::rng gen(7);
        dinf::field_model fm;
        fm.mg = dinf::create_multigrid(store, 2, 16, 2, 2, gen);
        fm.dec = dinf::create_decoder(store, 4, dinf::decoder_config{}, gen);
        fm.dom = dinf::make_domain(2, std::array<dinf::axis_range, 2>{{{-1.0, 1.0}, {0.0, 4.0}}});
        fm.bc.mode = dinf::blend_mode::initial_spatial;
        fm.bc.profile = dinf::initial_profile::sine_pi;
        dinf::validate_field(fm);
        std::array<int, 2> res{5, 5};
        dinf::heat_problem prob(fm, 1.0, res);
        dinf::train_config cfg;
        cfg.iterations = 40;
        cfg.seed = 9;
        cfg.chunk = 16;
        cfg.metric_every = 10;
        auto result = dinf::train(prob, store, cfg);
        return std::pair<std::vector<double>, dinf::train_result>(
            std::vector<double>(store.values().begin(), store.values().end()),
            std::move(result));
    };

    auto [p1, r1] = run();
    auto [p2, r2] = run();
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) REQUIRE(same_bits(p1[i], p2[i]));
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].iteration == r2.history[i].iteration);
        CHECK(same_bits(r1.history[i].loss, r2.history[i].loss));
        CHECK(same_bits(r1.history[i].metric, r2.history[i].metric));
    }
    CHECK(same_bits(r1.final_loss, r2.final_loss));
}

TEST_CASE("worker count changes the reduction order but not the result materially") {
    auto run = [](int threads) {
        dinf::param_store store;
        auto fm = fit_model(store, 8, 2, 2);
        dinf::signal_fit_problem prob(fm, smooth_image(16, 16));
        dinf::train_config cfg;
        cfg.iterations = 5;
        cfg.chunk = 16;
        cfg.threads = threads;
        cfg.metric_every = 1;
        return dinf::train(prob, store, cfg);
    };
    auto r1 = run(1);
    auto r3 = run(3);
    CHECK(r1.initial_loss == Catch::Approx(r3.initial_loss).epsilon(1e-12));
    CHECK(r1.final_loss == Catch::Approx(r3.final_loss).epsilon(1e-9));
}

TEST_CASE("a poisoned parameter surfaces as a divergence with its location") {
    dinf::param_store store;
    auto fm = fit_model(store, 8, 2, 2);
    store[fm.dec.param_begin] = std::numeric_limits<double>::infinity();
    dinf::signal_fit_problem prob(fm, smooth_image(8, 8));
    dinf::train_config cfg;
    cfg.iterations = 3;
    bool threw = false;
    try {
        dinf::train(prob, store, cfg);
    } catch (const dinf::diverged_error& e) {
        threw = true;
        std::string msg = e.what();
        CHECK(msg.find("iteration") != std::string::npos);
        CHECK(msg.find("sample") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("history follows the logging cadence") {
    dinf::param_store store;
    auto fm = fit_model(store, 8, 2, 2);
    dinf::signal_fit_problem prob(fm, smooth_image(8, 8));

    SECTION("every fourth iteration plus the endpoints") {
        dinf::train_config cfg;
        cfg.iterations = 10;
        cfg.metric_every = 4;
        auto result = dinf::train(prob, store, cfg);
        std::vector<std::uint64_t> got;
        for (const auto& r : result.history) got.push_back(r.iteration);
        CHECK(got == std::vector<std::uint64_t>{0, 4, 8, 10});
        for (std::size_t i = 1; i < result.history.size(); ++i)
            CHECK(result.history[i].seconds >= result.history[i - 1].seconds);
    }

    SECTION("cadence zero logs only the endpoints") {
        dinf::train_config cfg;
        cfg.iterations = 5;
        cfg.metric_every = 0;
        auto result = dinf::train(prob, store, cfg);
        REQUIRE(result.history.size() == 2);
        CHECK(result.history[0].iteration == 0);
        CHECK(result.history[1].iteration == 5);
    }

    SECTION("an exhausted time budget stops after the current iteration") {
        dinf::train_config cfg;
        cfg.iterations = 1000000;
        cfg.metric_every = 0;
        cfg.time_budget = 1e-9;
        auto result = dinf::train(prob, store, cfg);
        REQUIRE(result.history.size() == 2);
        CHECK(result.history[1].iteration == 1);
        CHECK(result.iterations == 1);
        CHECK(result.history.back().iteration == result.iterations);
    }
}

TEST_CASE("the history file round-trips through the csv reader") {
    std::vector<dinf::history_row> rows{
        {0, 1.0 / 3.0, 20.25, 0.0},
        {123456, 1.2345678901234567e-17, -4.75, 9876543.21},
        {250, 0.1 + 0.2, 5e-324, 1.5},
    };
    std::string path = temp_path("dinf_test_history.csv");
    dinf::write_history_csv(path, rows);
    auto data = dinf::read_csv(path);
    REQUIRE(data.header == std::vector<std::string>{"iteration", "loss", "metric", "seconds"});
    REQUIRE(data.rows.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(same_bits(data.rows[i][0], double(rows[i].iteration)));
        CHECK(same_bits(data.rows[i][1], rows[i].loss));
        CHECK(same_bits(data.rows[i][2], rows[i].metric));
        CHECK(same_bits(data.rows[i][3], rows[i].seconds));
    }
    std::filesystem::remove(path);
}
