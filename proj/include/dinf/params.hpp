#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dinf/errors.hpp"
#include "dinf/tape.hpp"

namespace dinf {

// Flat f64 parameter vector with named segments. Grid feature tables and
// decoder layers each claim one contiguous segment; gradients and optimizer
// state use the same indexing, and checkpoints serialize the vector in
// segment order.
class param_store {
  public:
    struct segment {
        std::string name;
        std::size_t offset;
        std::size_t size;
    };

    std::size_t add_segment(std::string name, std::size_t size) {
        std::size_t offset = values_.size();
        segments_.push_back({std::move(name), offset, size});
        values_.resize(offset + size, 0.0);
        return offset;
    }

    const segment& find(std::string_view name) const {
        for (const auto& s : segments_)
            if (s.name == name) return s;
        throw internal_error("param_store: no segment named " + std::string(name));
    }

    const segment& segment_of(std::size_t index) const {
        for (const auto& s : segments_)
            if (index >= s.offset && index < s.offset + s.size) return s;
        throw internal_error("param_store: index outside any segment");
    }

    std::span<const param_store::segment> segments() const { return segments_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

  private:
    std::vector<double> values_;
    std::vector<segment> segments_;
};

// Parameter access adapters: the evaluation pipeline is generic over these.
// direct_params reads plain values (no derivative tracking); tape_params
// creates one leaf per access so a reverse sweep yields parameter gradients.

struct direct_params {
    using value_type = double;
    const param_store* store;

    double get(std::size_t index) const { return (*store)[index]; }
};

struct tape_params {
    using value_type = var;
    const param_store* store;
    tape* tp;

    // contiguous range (the decoder segment) leafed once per tape lifetime
    std::size_t cache_offset = 0;
    std::vector<var> cache;

    var get(std::size_t index) {
        if (index >= cache_offset && index < cache_offset + cache.size())
            return cache[index - cache_offset];
        return tp->leaf((*store)[index], std::int64_t(index));
    }

    void cache_range(std::size_t offset, std::size_t size) {
        cache_offset = offset;
        cache.clear();
        cache.reserve(size);
        for (std::size_t i = 0; i < size; ++i)
            cache.push_back(tp->leaf((*store)[offset + i], std::int64_t(offset + i)));
    }
};

}  // namespace dinf
