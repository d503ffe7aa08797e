#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dinf/errors.hpp"
#include "dinf/interp.hpp"
#include "dinf/jet.hpp"
#include "dinf/params.hpp"
#include "dinf/rng.hpp"
#include "dinf/tape.hpp"

namespace dinf {

enum class decoder_kind { linear, mlp };
enum class activation { tanh_act, swish };

struct decoder_config {
    decoder_kind kind = decoder_kind::linear;
    std::vector<int> hidden;  // mlp only; layer widths, e.g. {64}
    activation act = activation::tanh_act;
    int out = 1;
    double output_scale = 1.0;  // constant factor on the decoder output
};

// x * sigmoid(x) through the chain rule; the scalar pieces stay in the
// component type so a recorded component records exactly the scalar graph.
template <class T, int P>
jet<T, P> swish(const jet<T, P>& x) {
    using std::exp;
    auto s = 1.0 / (exp(-x.v) + 1.0);
    auto sp = s * (1.0 - s);
    auto f = x.v * s;
    auto fp = s + x.v * sp;
    if constexpr (P == 2)
        return jet_chain(x, f, fp, 2.0 * sp + x.v * (sp * (1.0 - 2.0 * s)));
    else
        return jet_chain(x, f, fp, 0.0);
}

// One dense layer: weights row-major [out][in], then biases [out], in a single
// parameter segment.
struct decoder_layer {
    int in = 0;
    int out = 0;
    std::size_t offset = 0;
};

struct decoder {
    int in_width = 0;
    int out_width = 0;
    activation act = activation::tanh_act;
    double output_scale = 1.0;
    std::vector<decoder_layer> layers;
    std::size_t param_begin = 0;  // layers occupy [param_begin, param_begin + param_count)
    std::size_t param_count = 0;
};

// Xavier-uniform weights, zero biases.
inline decoder create_decoder(param_store& store, int in_width, const decoder_config& cfg,
                              rng& r) {
    if (in_width < 1) throw config_error("decoder: input width must be positive");
    if (cfg.out < 1) throw config_error("decoder: output width must be positive");
    if (!(cfg.output_scale > 0.0) || !std::isfinite(cfg.output_scale))
        throw config_error("decoder: output scale must be positive and finite");
    std::vector<int> widths{in_width};
    if (cfg.kind == decoder_kind::mlp) {
        if (cfg.hidden.empty()) throw config_error("decoder: mlp needs at least one hidden width");
        for (int hw : cfg.hidden) {
            if (hw < 1) throw config_error("decoder: hidden width must be positive");
            widths.push_back(hw);
        }
    }
    widths.push_back(cfg.out);

    decoder d;
    d.in_width = in_width;
    d.out_width = cfg.out;
    d.act = cfg.act;
    d.output_scale = cfg.output_scale;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        decoder_layer layer;
        layer.in = widths[l];
        layer.out = widths[l + 1];
        std::size_t count = std::size_t(layer.in) * std::size_t(layer.out) + std::size_t(layer.out);
        layer.offset = store.add_segment("dec" + std::to_string(l), count);
        double limit = std::sqrt(6.0 / double(layer.in + layer.out));
        for (std::size_t i = 0; i < std::size_t(layer.in) * std::size_t(layer.out); ++i)
            store[layer.offset + i] = r.uniform(-limit, limit);
        // biases stay zero
        d.layers.push_back(layer);
    }
    d.param_begin = d.layers.front().offset;
    d.param_count = d.layers.back().offset - d.param_begin +
                    std::size_t(d.layers.back().in) * std::size_t(d.layers.back().out) +
                    std::size_t(d.layers.back().out);
    return d;
}

namespace detail {

template <class T, int Order>
T get_component(const jet<T, Order>& j, int c) {
    if (c == 0) return j.v;
    if (c <= j.dim) return j.g[std::size_t(c - 1)];
    if constexpr (Order == 2)
        return j.h[std::size_t(c - 1 - j.dim)];
    else
        return T{};
}

}  // namespace detail

// Applies the decoder to a feature vector of jets. Each jet component runs
// through the same affine maps, so one dense layer is one fused dot product
// per (unit, component) on the recorded path.
template <int Order, class Params>
void decode(const decoder& dec, Params& params,
            std::span<const jet<typename Params::value_type, Order>> in,
            std::span<jet<typename Params::value_type, Order>> out) {
    using T = typename Params::value_type;
    assert(int(in.size()) == dec.in_width && int(out.size()) == dec.out_width);
    const int dim = in[0].dim;
    const int ncomp = detail::jet_components<Order>(dim);

    thread_local std::vector<T> weights;
    thread_local std::vector<T> biases;
    thread_local std::vector<T> xin;
    thread_local std::vector<jet<T, Order>> cur;
    thread_local std::vector<jet<T, Order>> nxt;

    cur.assign(in.begin(), in.end());
    for (std::size_t l = 0; l < dec.layers.size(); ++l) {
        const decoder_layer& layer = dec.layers[l];
        const bool last = l + 1 == dec.layers.size();
        std::size_t wn = std::size_t(layer.in) * std::size_t(layer.out);
        weights.clear();
        biases.clear();
        for (std::size_t i = 0; i < wn; ++i) weights.push_back(params.get(layer.offset + i));
        for (int j = 0; j < layer.out; ++j)
            biases.push_back(params.get(layer.offset + wn + std::size_t(j)));

        nxt.assign(std::size_t(layer.out), jet<T, Order>{});
        for (int j = 0; j < layer.out; ++j) nxt[std::size_t(j)].dim = dim;
        for (int c = 0; c < ncomp; ++c) {
            xin.clear();
            for (int i = 0; i < layer.in; ++i)
                xin.push_back(detail::get_component(cur[std::size_t(i)], c));
            for (int j = 0; j < layer.out; ++j) {
                T z = dot_pairs(std::span<const T>(weights).subspan(std::size_t(j) * layer.in,
                                                                    std::size_t(layer.in)),
                                std::span<const T>(xin));
                if (c == 0) z = z + biases[std::size_t(j)];
                detail::set_component(nxt[std::size_t(j)], c, z);
            }
        }
        if (!last) {
            for (auto& j : nxt)
                j = dec.act == activation::tanh_act ? tanh(j) : swish(j);
        }
        cur.swap(nxt);
    }
    for (int j = 0; j < dec.out_width; ++j)
        out[std::size_t(j)] = dec.output_scale == 1.0 ? cur[std::size_t(j)]
                                                      : cur[std::size_t(j)] * dec.output_scale;
}

}  // namespace dinf
