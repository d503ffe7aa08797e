#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dinf/boundary.hpp"
#include "dinf/decoder.hpp"
#include "dinf/domain.hpp"
#include "dinf/errors.hpp"
#include "dinf/grid.hpp"
#include "dinf/interp.hpp"
#include "dinf/params.hpp"

namespace dinf {

// The complete field: multi-resolution features, interpolation kernel, decoder
// head, the physical-domain map, and the hard-constraint blend. Parameters
// live in an external store; the struct only holds layout and hyperparameters,
// so it is cheap to copy and share between threads.
struct field_model {
    multigrid mg;
    decoder dec;
    rbf_config rbf;
    domain_map dom;
    boundary_config bc;
};

inline void validate_field(const field_model& fm) {
    if (fm.dom.dim != fm.mg.dim)
        throw config_error("field: domain dimension does not match the grid dimension");
    if (fm.dec.in_width != fm.mg.scales * fm.mg.feat)
        throw config_error("field: decoder input width must equal scales * features");
    validate_boundary(fm.bc, fm.mg.dim);
}

namespace detail {
inline double comp_value(double x) { return x; }
inline double comp_value(const var& x) { return x.v; }
}  // namespace detail

template <class T, int Order>
bool jet_finite(const jet<T, Order>& j) {
    if (!std::isfinite(detail::comp_value(j.v))) return false;
    for (int k = 0; k < j.dim; ++k)
        if (!std::isfinite(detail::comp_value(j.g[std::size_t(k)]))) return false;
    if constexpr (Order == 2) {
        for (int i = 0; i < hess_count(j.dim); ++i)
            if (!std::isfinite(detail::comp_value(j.h[std::size_t(i)]))) return false;
    }
    return true;
}

template <class T, int Order>
void ensure_finite(std::span<const jet<T, Order>> out, std::size_t sample_index) {
    for (const auto& j : out)
        if (!jet_finite(j))
            throw diverged_error("field evaluation produced a non-finite value at sample " +
                                 std::to_string(sample_index));
}

// Evaluates the field at one normalized point with precomputed rings. Output
// jets carry derivatives with respect to the normalized coordinates; callers
// that need physical units apply to_physical afterwards.
template <int Order, class Params>
void eval_field(const field_model& fm, Params& params, std::span<const double> xn,
                std::span<const cell_ring> rings,
                std::span<jet<typename Params::value_type, Order>> out) {
    using T = typename Params::value_type;
    thread_local std::vector<jet<T, Order>> feats;
    feats.assign(std::size_t(fm.mg.scales) * std::size_t(fm.mg.feat), jet<T, Order>{});
    interpolate<Order>(fm.mg, params, fm.rbf, xn, rings, feats.data());
    decode<Order>(fm.dec, params, std::span<const jet<T, Order>>(feats), out);
    if (fm.bc.mode != blend_mode::none) {
        auto parts = boundary_parts<Order>(fm.bc, fm.dom, xn);
        for (auto& u : out) u = apply_boundary(u, parts);
    }
}

// Single-point convenience for inference and tests: builds the rings itself.
template <int Order = 2>
std::vector<jet<double, Order>> eval_field_at(const field_model& fm, const param_store& store,
                                              std::span<const double> xn) {
    std::array<cell_ring, 8> rings;
    for (int s = 0; s < fm.mg.scales; ++s) rings[std::size_t(s)] = scale_ring(fm.mg, s, xn, fm.rbf.ring);
    direct_params dp{&store};
    std::vector<jet<double, Order>> out(std::size_t(fm.dec.out_width));
    eval_field<Order>(fm, dp, xn,
                      std::span<const cell_ring>(rings.data(), std::size_t(fm.mg.scales)),
                      std::span<jet<double, Order>>(out));
    return out;
}

// Value-only helper used by writers and metrics.
inline std::vector<double> field_values(const field_model& fm, const param_store& store,
                                        std::span<const double> xn) {
    auto jets = eval_field_at<1>(fm, store, xn);
    std::vector<double> v(jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) v[i] = jets[i].v;
    return v;
}

}  // namespace dinf
