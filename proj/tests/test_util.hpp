#pragma once

#include "advfv/cli_io.hpp"
#include "advfv/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace advfv::testing {

/// Deterministic uniform draws for tests.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    double uniform() { return g_.uniform(); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * g_.uniform(); }

private:
    SplitMix64 g_;
};

inline Vec5 random_in(const RectangleBounds& b, Rng& rng) {
    Vec5 u;
    for (std::size_t i = 0; i < kSpecies; ++i) u[i] = rng.uniform() * b.beta[i];
    return u;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline ModelParams reference_params() { return standard_params(0.15); }

}  // namespace advfv::testing
