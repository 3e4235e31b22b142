#pragma once

#include <random>
#include <vector>

#include "ergomix/intlinalg.hpp"
#include "ergomix/kernel.hpp"
#include "ergomix/models.hpp"

namespace ergomix::testutil {

// Random element of SL_n(Z) (up to sign) as a short product of elementary
// shears; entries stay small.
inline IntMatrix random_unimodular(std::mt19937_64& rng, int n, int factors = 4) {
    IntMatrix m = IntMatrix::identity(n);
    for (int f = 0; f < factors; ++f) {
        int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        if (i == j) j = (j + 1) % n;
        std::int64_t k = static_cast<std::int64_t>(rng() % 5) - 2;
        IntMatrix shear = IntMatrix::identity(n);
        shear(i, j) = k;
        m = m.mul(shear);
    }
    return m;
}

inline models::CoverModel nn_walk(int d) {
    models::CoverModel m;
    m.degree = d;
    for (int i = 0; i < d; ++i) {
        std::vector<std::int64_t> p(static_cast<std::size_t>(d), 0);
        p[static_cast<std::size_t>(i)] = 1;
        m.step_law.push_back({p, 0.5 / d});
        p[static_cast<std::size_t>(i)] = -1;
        m.step_law.push_back({p, 0.5 / d});
    }
    return m;
}

inline models::CoverModel lazy_walk_1d() {
    models::CoverModel m;
    m.degree = 1;
    m.step_law.push_back({{0}, 0.5});
    m.step_law.push_back({{1}, 0.25});
    m.step_law.push_back({{-1}, 0.25});
    return m;
}

// Torus chain from a single lattice map plus a displacement law given as
// (offset along e1, mass) pairs.
inline kernel::LatticeChain simple_torus_chain(
    int m, int n, const IntMatrix& map,
    const std::vector<std::pair<std::int64_t, double>>& law) {
    kernel::TransitionComponent comp;
    comp.weight = 1.0;
    comp.map = map;
    for (const auto& [k, mass] : law) {
        std::vector<std::int64_t> off(static_cast<std::size_t>(n), 0);
        off[0] = k;
        comp.steps.push_back({off, mass});
    }
    return kernel::LatticeChain::torus({m, n}, {comp});
}

inline std::vector<std::size_t> all_states(const kernel::LatticeChain& chain) {
    std::vector<std::size_t> all(chain.state_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
}

}  // namespace ergomix::testutil
