#pragma once

#include <cstdint>
#include <random>

namespace dinf {

// Seeded RNG with a fixed bit-to-double mapping. std::uniform_real_distribution
// is not pinned down by the standard, so reproducibility across compilers
// requires drawing raw 64-bit words from mt19937_64 (which is fully specified)
// and converting them ourselves.
class rng {
  public:
    explicit rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is < 2^-40 for the n used here (grid/batch sizes); fine for tests
        return gen_() % n;
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace dinf
