#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <string>
#include <vector>

#include "dinf/csv.hpp"
#include "dinf/errors.hpp"
#include "dinf/field.hpp"
#include "dinf/params.hpp"
#include "dinf/rng.hpp"
#include "dinf/tape.hpp"
#include "dinf/threads.hpp"

namespace dinf {

struct adam_config {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Diagonal-moment optimizer with bias correction. A parameter whose gradient
// is exactly zero keeps its exact bit pattern: both moments stay zero, so the
// update subtracts 0.0.
class adam_state {
  public:
    explicit adam_state(std::size_t n, adam_config cfg = {})
        : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::span<double> p, std::span<const double> g) {
        if (p.size() != m_.size() || g.size() != m_.size())
            throw internal_error("adam: parameter/gradient size mismatch");
        ++t_;
        double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
        double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
        for (std::size_t i = 0; i < m_.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            p[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
        }
    }

    std::uint64_t steps() const { return t_; }
    const adam_config& config() const { return cfg_; }

  private:
    adam_config cfg_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

struct train_config {
    std::uint64_t iterations = 1000;
    adam_config adam;
    std::uint64_t seed = 1;
    std::size_t chunk = 64;            // samples recorded per tape
    int threads = 1;
    std::uint64_t metric_every = 100;  // history cadence; iteration 0 and the last always log
    double time_budget = 0.0;          // wall seconds; 0 disables the cutoff
};

struct history_row {
    std::uint64_t iteration = 0;
    double loss = 0.0;
    double metric = 0.0;
    double seconds = 0.0;
};

struct train_result {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double final_metric = 0.0;
    std::uint64_t iterations = 0;  // actually run
    double seconds = 0.0;
    std::vector<history_row> history;
};

inline void write_history_csv(const std::string& path, std::span<const history_row> rows) {
    const std::array<std::string, 4> header{"iteration", "loss", "metric", "seconds"};
    csv_writer out(path, std::span<const std::string>(header));
    for (const auto& r : rows)
        out.row(std::array<double, 4>{double(r.iteration), r.loss, r.metric, r.seconds});
    out.close();
}

// Runs the optimization loop: every iteration draws the problem's batch,
// records per-chunk tapes, reverses them into a mean gradient, and applies one
// optimizer step. The chunk partition and the worker merge order are fixed
// functions of (batch, chunk, threads), so a rerun with the same seed and
// thread count reproduces the trajectory exactly. Throws diverged_error when
// the field or the loss stops being finite.
template <class Problem>
train_result train(Problem& prob, param_store& store, const train_config& cfg) {
    validate_field(prob.fm);
    if (cfg.chunk < 1) throw config_error("train: chunk size must be positive");
    constexpr int order = Problem::order;
    const int workers = std::max(1, cfg.threads);
    const std::size_t out_width = std::size_t(prob.fm.dec.out_width);
    const std::size_t dec_offset = prob.fm.dec.param_begin;
    const std::size_t dec_count = prob.fm.dec.param_count;

    const std::size_t nw = std::size_t(workers);
    std::vector<tape> tapes(nw);
    std::vector<std::vector<double>> wgrad(nw);
    std::vector<double> wloss(nw, 0.0);
    std::vector<std::exception_ptr> werr(nw);
    std::vector<double> grad(store.size(), 0.0);
    rng gen(cfg.seed);

    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // mean loss over the current batch; fills grad with the mean gradient
    auto pass = [&](bool want_grad) -> double {
        std::size_t batch = prob.batch_size();
        if (batch == 0) throw internal_error("train: the problem produced an empty batch");
        std::size_t chunks = (batch + cfg.chunk - 1) / cfg.chunk;
        if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
        for (int w = 0; w < workers; ++w) {
            wloss[std::size_t(w)] = 0.0;
            werr[std::size_t(w)] = nullptr;
            if (want_grad && workers > 1) wgrad[std::size_t(w)].assign(store.size(), 0.0);
        }
        parallel_blocks(chunks, workers, [&](int w, std::size_t cb, std::size_t ce) {
            try {
                tape& tp = tapes[std::size_t(w)];
                tape_params pp{&store, &tp};
                std::vector<jet<var, order>> u(out_width);
                std::span<double> gout = workers == 1 ? std::span<double>(grad)
                                                      : std::span<double>(wgrad[std::size_t(w)]);
                double local = 0.0;
                for (std::size_t c = cb; c < ce; ++c) {
                    tp.reset();
                    pp.cache_range(dec_offset, dec_count);
                    std::size_t lo = c * cfg.chunk;
                    std::size_t hi = std::min(batch, lo + cfg.chunk);
                    var sum;
                    for (std::size_t i = lo; i < hi; ++i) {
                        eval_field<order>(prob.fm, pp, prob.sample_point(i), prob.sample_rings(i),
                                          std::span<jet<var, order>>(u));
                        ensure_finite(std::span<const jet<var, order>>(u), i);
                        sum = sum + prob.sample_loss(std::span<const jet<var, order>>(u), i);
                    }
                    local += sum.v;
                    if (want_grad && sum.t) tp.reverse(sum, gout);
                }
                wloss[std::size_t(w)] = local;
            } catch (...) {
                werr[std::size_t(w)] = std::current_exception();
            }
        });
        for (auto& e : werr)
            if (e) std::rethrow_exception(e);
        double loss = 0.0;
        for (int w = 0; w < workers; ++w) loss += wloss[std::size_t(w)];
        if (want_grad) {
            if (workers > 1)
                for (int w = 0; w < workers; ++w) {
                    const auto& g = wgrad[std::size_t(w)];
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
                }
            double inv = 1.0 / double(batch);
            for (double& v : grad) v *= inv;
        }
        return loss / double(batch);
    };

    auto guarded_pass = [&](bool want_grad, std::uint64_t it) -> double {
        double loss;
        try {
            loss = pass(want_grad);
        } catch (const diverged_error& e) {
            throw diverged_error("iteration " + std::to_string(it) + ": " + e.what());
        }
        if (!std::isfinite(loss))
            throw diverged_error("training loss is not finite at iteration " + std::to_string(it));
        return loss;
    };

    train_result result;
    // the pre-update snapshot; a zero-iteration run reports exactly this
    prob.begin_iteration(0, gen);
    result.initial_loss = guarded_pass(false, 0);
    result.final_loss = result.initial_loss;
    result.final_metric = prob.metric(store);
    result.history.push_back({0, result.initial_loss, result.final_metric, elapsed()});

    adam_state opt(store.size(), cfg.adam);
    for (std::uint64_t it = 1; it <= cfg.iterations; ++it) {
        prob.begin_iteration(it, gen);
        double loss = guarded_pass(true, it);
        opt.step(store.values(), grad);
        result.iterations = it;
        result.final_loss = loss;
        bool due = cfg.metric_every != 0 && it % cfg.metric_every == 0;
        bool last = it == cfg.iterations;
        bool out_of_time = cfg.time_budget > 0.0 && elapsed() >= cfg.time_budget;
        if (due || last || out_of_time) {
            result.final_metric = prob.metric(store);
            result.history.push_back({it, loss, result.final_metric, elapsed()});
        }
        if (out_of_time) break;
    }
    result.seconds = elapsed();
    return result;
}

}  // namespace dinf
