#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dinf/grid.hpp"
#include "dinf/jet.hpp"
#include "dinf/params.hpp"
#include "dinf/rng.hpp"

namespace dinf {

struct rbf_config {
    double epsilon = 1.0;  // kernel sharpness in units of the cell width
    int ring = 3;          // Chebyshev neighborhood half-width in cells
};

// unnormalized Gaussian kernel on squared distance in cell units; feeding r^2
// directly avoids the sqrt singularity at node centers
inline double rbf_weight(double r2_cells, double epsilon) {
    return std::exp(-epsilon * epsilon * r2_cells);
}

// Per-axis node index ranges [lo, hi] of one scale's neighborhood. Clamped
// rings stay contiguous, so ranges describe the node set exactly.
struct cell_ring {
    std::array<int, 3> lo{};
    std::array<int, 3> hi{};

    std::size_t count(int dim) const {
        std::size_t c = 1;
        for (int k = 0; k < dim; ++k) c *= std::size_t(hi[k] - lo[k] + 1);
        return c;
    }
};

// Ring around the grid cells covered by the box [lo, hi] on scale s: nodes
// j_lo-ring+1 .. j_hi+ring, clamped to the lattice. A box inside one interior
// grid cell sees exactly (2*ring)^dim nodes; a box spanning several grid
// cells (sampler coarser than the scale) widens so every point in it keeps
// the full ring on each side. Pass lo == hi for a point query.
inline cell_ring scale_ring(const multigrid& mg, int s, std::span<const double> lo,
                            std::span<const double> hi, int ring) {
    cell_ring out;
    int n = mg.levels[s].n;
    for (int k = 0; k < mg.dim; ++k) {
        int j_lo = int(std::floor((lo[k] + 1.0) * 0.5 * double(n)));
        int j_hi = int(std::ceil((hi[k] + 1.0) * 0.5 * double(n))) - 1;
        j_lo = std::clamp(j_lo, 0, n - 1);
        j_hi = std::clamp(std::max(j_hi, j_lo), 0, n - 1);
        out.lo[k] = std::max(0, j_lo - ring + 1);
        out.hi[k] = std::min(n, j_hi + ring);
    }
    return out;
}

inline cell_ring scale_ring(const multigrid& mg, int s, std::span<const double> point,
                            int ring) {
    return scale_ring(mg, s, point, point, ring);
}

// Precomputed neighborhoods for a regular sampling grid: one ring per
// (sampling cell, scale), derived from the grid cell containing the sampling
// cell's center. A sample's node set therefore depends only on its sampling
// cell index, never on the position within the cell.
class neighbor_table {
  public:
    static neighbor_table build(const multigrid& mg, std::span<const int> res, int ring) {
        neighbor_table t;
        t.dim_ = mg.dim;
        t.scales_ = mg.scales;
        std::size_t cells = 1;
        for (int k = 0; k < mg.dim; ++k) {
            assert(res[k] >= 1);
            t.res_[k] = res[k];
            cells *= std::size_t(res[k]);
        }
        t.rings_.resize(cells * std::size_t(mg.scales));
        std::array<double, 3> lo{}, hi{};
        std::array<int, 3> idx{};
        for (std::size_t cell = 0; cell < cells; ++cell) {
            std::size_t rest = cell;
            for (int k = mg.dim - 1; k >= 0; --k) {
                idx[k] = int(rest % std::size_t(t.res_[k]));
                rest /= std::size_t(t.res_[k]);
            }
            for (int k = 0; k < mg.dim; ++k) {
                lo[k] = -1.0 + 2.0 * double(idx[k]) / double(t.res_[k]);
                hi[k] = -1.0 + 2.0 * double(idx[k] + 1) / double(t.res_[k]);
            }
            for (int s = 0; s < mg.scales; ++s)
                t.rings_[cell * std::size_t(mg.scales) + s] =
                    scale_ring(mg, s, std::span<const double>(lo.data(), mg.dim),
                               std::span<const double>(hi.data(), mg.dim), ring);
        }
        return t;
    }

    std::span<const cell_ring> rings(std::size_t cell) const {
        return {rings_.data() + cell * std::size_t(scales_), std::size_t(scales_)};
    }

    std::size_t cell_count() const { return rings_.size() / std::size_t(scales_); }

    std::size_t cell_of(std::span<const double> x) const {
        std::size_t lin = 0;
        for (int k = 0; k < dim_; ++k) {
            int c = int(std::floor((x[k] + 1.0) * 0.5 * double(res_[k])));
            c = std::clamp(c, 0, res_[k] - 1);
            lin = lin * std::size_t(res_[k]) + std::size_t(c);
        }
        return lin;
    }

    std::span<const int> res() const { return {res_.data(), std::size_t(dim_)}; }

  private:
    int dim_ = 0;
    int scales_ = 0;
    std::array<int, 3> res_{};
    std::vector<cell_ring> rings_;
};

// ---- sampling ---------------------------------------------------------------

struct sample_batch {
    int dim = 0;
    std::size_t count = 0;
    std::vector<double> x;                // count * dim, normalized coords
    std::vector<std::uint32_t> cell;      // sampling-cell index per sample

    std::span<const double> at(std::size_t i) const {
        return {x.data() + i * std::size_t(dim), std::size_t(dim)};
    }
};

namespace detail {
template <class Gen>
sample_batch grid_samples(std::span<const int> res, Gen&& coord) {
    sample_batch b;
    b.dim = int(res.size());
    b.count = 1;
    for (int r : res) b.count *= std::size_t(r);
    b.x.resize(b.count * res.size());
    b.cell.resize(b.count);
    std::array<int, 3> idx{};
    for (std::size_t i = 0; i < b.count; ++i) {
        std::size_t rest = i;
        for (int k = b.dim - 1; k >= 0; --k) {
            idx[k] = int(rest % std::size_t(res[k]));
            rest /= std::size_t(res[k]);
        }
        b.cell[i] = std::uint32_t(i);
        for (int k = 0; k < b.dim; ++k) b.x[i * res.size() + k] = coord(k, idx[k], res[k]);
    }
    return b;
}
}  // namespace detail

// one uniform draw per cell, cells in row-major order (deterministic for a
// fixed seed)
inline sample_batch stratified_sample(std::span<const int> res, rng& gen) {
    return detail::grid_samples(res, [&gen](int, int i, int n) {
        return -1.0 + 2.0 * (double(i) + gen.uniform01()) / double(n);
    });
}

// cell centers; used for fixed-grid supervision and held-out evaluation
inline sample_batch regular_sample(std::span<const int> res) {
    return detail::grid_samples(
        res, [](int, int i, int n) { return -1.0 + 2.0 * (double(i) + 0.5) / double(n); });
}

// ---- interpolation ----------------------------------------------------------

namespace detail {

// squared distance to a node in cell units, as a jet in x
template <int Order>
jet<double, Order> cell_r2(std::span<const double> x, std::span<const double> node, double inv_h,
                           int dim) {
    jet<double, Order> r2;
    r2.dim = dim;
    r2.v = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = (x[k] - node[k]) * inv_h;
        r2.v += d * d;
        r2.g[k] = 2.0 * d * inv_h;
        if constexpr (Order == 2) r2.h[hess_index(k, k)] = 2.0 * inv_h * inv_h;
    }
    return r2;
}

template <int Order>
int jet_components(int dim) {
    return 1 + dim + (Order == 2 ? hess_count(dim) : 0);
}

template <int Order>
double jet_component(const jet<double, Order>& j, int c) {
    if (c == 0) return j.v;
    if (c <= j.dim) return j.g[c - 1];
    if constexpr (Order == 2) return j.h[c - 1 - j.dim];
    return 0.0;
}

template <int Order>
void set_component(jet<double, Order>& j, int c, double v) {
    if (c == 0)
        j.v = v;
    else if (c <= j.dim)
        j.g[c - 1] = v;
    else if constexpr (Order == 2)
        j.h[c - 1 - j.dim] = v;
}
template <int Order>
void set_component(jet<var, Order>& j, int c, var v) {
    if (c == 0)
        j.v = v;
    else if (c <= j.dim)
        j.g[c - 1] = v;
    else if constexpr (Order == 2)
        j.h[c - 1 - j.dim] = v;
}

}  // namespace detail

// Normalized-RBF interpolation of all scales' features at x. Weights are a
// function of coordinates only, so they are computed in plain double jets;
// parameters enter through the final linear combination, which for recorded
// arithmetic becomes one fused tape node per jet component. out must hold
// scales*feat jets, ordered finest scale first, feature-major within a scale.
template <int Order, class Params>
void interpolate(const multigrid& mg, Params& params, const rbf_config& rbf,
                 std::span<const double> x, std::span<const cell_ring> rings,
                 jet<typename Params::value_type, Order>* out) {
    using T = typename Params::value_type;
    constexpr bool recorded = std::is_same_v<T, var>;
    const int dim = mg.dim;
    const double eps2 = rbf.epsilon * rbf.epsilon;

    thread_local std::vector<jet<double, Order>> w;
    thread_local std::vector<std::size_t> rows;
    thread_local std::vector<var> leaves;
    thread_local std::vector<double> partials;

    for (int s = 0; s < mg.scales; ++s) {
        const cell_ring& ring = rings[s];
        const std::size_t n_nodes = ring.count(dim);
        const double inv_h = double(mg.levels[s].n) * 0.5;  // 1 / cell width

        w.clear();
        rows.clear();
        w.reserve(n_nodes);
        rows.reserve(n_nodes);

        jet<double, Order> den = jet_const<double, Order>(dim, 0.0);
        std::array<int, 3> idx{ring.lo[0], ring.lo[1], ring.lo[2]};
        std::array<double, 3> node{};
        for (;;) {
            for (int k = 0; k < dim; ++k) node[k] = mg.node_coord(s, idx[k]);
            auto r2 = detail::cell_r2<Order>(x, std::span<const double>(node.data(), dim),
                                             inv_h, dim);
            auto phi = exp(r2 * (-eps2));
            den = den + phi;
            w.push_back(phi);
            rows.push_back(mg.row(s, mg.node_linear(s, std::span<const int>(idx.data(), dim))));

            int k = dim - 1;
            while (k >= 0 && ++idx[k] > ring.hi[k]) idx[k] = ring.lo[k], --k;
            if (k < 0) break;
        }

        auto winv = recip(den);
        for (auto& wi : w) wi = wi * winv;  // partition of unity by construction

        const int ncomp = detail::jet_components<Order>(dim);
        for (int c = 0; c < mg.feat; ++c) {
            jet<T, Order> acc;
            acc.dim = dim;
            if constexpr (recorded) {
                leaves.clear();
                for (std::size_t i = 0; i < n_nodes; ++i)
                    leaves.push_back(params.get(rows[i] + std::size_t(c)));
                partials.resize(n_nodes);
                for (int comp = 0; comp < ncomp; ++comp) {
                    double value = 0.0;
                    for (std::size_t i = 0; i < n_nodes; ++i) {
                        partials[i] = detail::jet_component(w[i], comp);
                        value += partials[i] * leaves[i].v;
                    }
                    detail::set_component(acc, comp,
                                          params.tp->fused(value, leaves, partials));
                }
            } else {
                for (int comp = 0; comp < ncomp; ++comp) {
                    double value = 0.0;
                    for (std::size_t i = 0; i < n_nodes; ++i)
                        value += detail::jet_component(w[i], comp) *
                                 params.get(rows[i] + std::size_t(c));
                    detail::set_component(acc, comp, value);
                }
            }
            out[s * mg.feat + c] = acc;
        }
    }
}

// Multi-linear interpolation over the enclosing cell of one scale; comparison
// baseline for the smoothness tests. Along any single axis the second
// derivative vanishes inside a cell and the first derivative jumps at nodes.
template <int Order = 2>
jet<double, Order> linear_interp(const multigrid& mg, const param_store& store, int s, int c,
                                 std::span<const double> x) {
    const int dim = mg.dim;
    const int n = mg.levels[s].n;
    const double inv_h = double(n) * 0.5;

    std::array<int, 3> j{};
    std::array<jet<double, Order>, 3> t{};
    for (int k = 0; k < dim; ++k) {
        j[k] = std::clamp(int(std::floor((x[k] + 1.0) * 0.5 * double(n))), 0, n - 1);
        t[k].dim = dim;
        t[k].v = (x[k] - mg.node_coord(s, j[k])) * inv_h;
        t[k].g[k] = inv_h;
    }

    jet<double, Order> acc = jet_const<double, Order>(dim, 0.0);
    for (int corner = 0; corner < (1 << dim); ++corner) {
        jet<double, Order> wgt = jet_const<double, Order>(dim, 1.0);
        std::array<int, 3> idx{};
        for (int k = 0; k < dim; ++k) {
            bool hi = corner & (1 << k);
            idx[k] = j[k] + (hi ? 1 : 0);
            wgt = wgt * (hi ? t[k] : 1.0 - t[k]);
        }
        double f = store[mg.row(s, mg.node_linear(s, std::span<const int>(idx.data(), dim))) +
                         std::size_t(c)];
        acc = acc + wgt * f;
    }
    return acc;
}

}  // namespace dinf
