#pragma once

#include <array>
#include <cassert>
#include <cstddef>
#include <string>

#include "dinf/errors.hpp"
#include "dinf/params.hpp"
#include "dinf/rng.hpp"

namespace dinf {

// Multi-resolution feature lattice over the normalized domain [-1,1]^dim.
// Scale s has n_max / 2^s cells per axis and (n+1)^dim nodes; each node owns
// a row of `feat` parameters. Scale 0 is the finest; interpolated features
// are concatenated finest-first. Node storage is row-major with the last
// axis fastest.
struct grid_level {
    int n;               // cells per axis
    std::size_t offset;  // param index of node (0,..,0), feature 0
};

struct multigrid {
    int dim = 0;
    int feat = 0;
    int n_max = 0;
    int scales = 0;
    std::array<grid_level, 8> levels{};

    std::size_t nodes_per_axis(int s) const { return std::size_t(levels[s].n) + 1; }

    std::size_t node_count(int s) const {
        std::size_t total = 1;
        for (int k = 0; k < dim; ++k) total *= nodes_per_axis(s);
        return total;
    }

    std::size_t param_count() const {
        std::size_t total = 0;
        for (int s = 0; s < scales; ++s) total += node_count(s) * feat;
        return total;
    }

    // node lattice coordinate; exact at the box faces and center
    double node_coord(int s, int i) const {
        assert(i >= 0 && i <= levels[s].n);
        return -1.0 + 2.0 * double(i) / double(levels[s].n);
    }

    std::size_t node_linear(int s, std::span<const int> idx) const {
        std::size_t lin = 0;
        for (int k = 0; k < dim; ++k) {
            assert(idx[k] >= 0 && idx[k] <= levels[s].n);
            lin = lin * nodes_per_axis(s) + std::size_t(idx[k]);
        }
        return lin;
    }

    // param index of a node's feature row
    std::size_t row(int s, std::size_t node_lin) const {
        return levels[s].offset + node_lin * std::size_t(feat);
    }
};

inline constexpr std::size_t default_grid_cap_bytes = std::size_t(1) << 30;

inline multigrid create_multigrid(param_store& store, int dim, int n_max, int scales, int feat,
                                  rng& gen, double init_range = 1e-4,
                                  std::size_t cap_bytes = default_grid_cap_bytes) {
    if (dim < 1 || dim > 3) throw config_error("grid: dim must be 1, 2 or 3");
    if (feat < 1) throw config_error("grid: features per node must be >= 1");
    if (scales < 1 || scales > 8) throw config_error("grid: scales must be in 1..8");
    int divisor = 1 << (scales - 1);
    if (n_max < divisor || n_max % divisor != 0)
        throw config_error("grid: n_max=" + std::to_string(n_max) +
                           " is not divisible by 2^(scales-1)=" + std::to_string(divisor));

    multigrid mg;
    mg.dim = dim;
    mg.feat = feat;
    mg.n_max = n_max;
    mg.scales = scales;
    for (int s = 0; s < scales; ++s) mg.levels[s].n = n_max >> s;

    std::size_t bytes = mg.param_count() * sizeof(double);
    if (bytes > cap_bytes)
        throw config_error("grid: feature tables need " + std::to_string(bytes / (1 << 20)) +
                           " MiB, above the cap of " + std::to_string(cap_bytes / (1 << 20)) +
                           " MiB");

    for (int s = 0; s < scales; ++s) {
        std::size_t count = mg.node_count(s) * std::size_t(feat);
        mg.levels[s].offset = store.add_segment("grid" + std::to_string(s), count);
        for (std::size_t i = 0; i < count; ++i)
            store[mg.levels[s].offset + i] = gen.uniform(-init_range, init_range);
    }
    return mg;
}

}  // namespace dinf
