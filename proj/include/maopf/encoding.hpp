#ifndef MAOPF_ENCODING_HPP
#define MAOPF_ENCODING_HPP

#include <cstddef>
#include <random>
#include <vector>

#include "network.hpp"

namespace maopf {

using Rng = std::mt19937_64;

struct ContinuousGene {
    double lo = 0.0;
    double hi = 1.0;
};

// Hybrid genotype: bounded reals followed by integer indices into discrete grids.
struct ControlLayout {
    std::vector<ContinuousGene> continuous;
    std::vector<DiscreteRange> discrete;

    [[nodiscard]] auto size() const -> std::size_t { return continuous.size() + discrete.size(); }
};

struct ControlVector {
    std::vector<double> continuous;
    std::vector<int> discrete; // grid indices, never floats

    auto operator==(ControlVector const&) const -> bool = default;
};

// Bounds and grid membership; the invariant every variation operator preserves.
inline auto is_valid(ControlLayout const& layout, ControlVector const& x) -> bool
{
    if (x.continuous.size() != layout.continuous.size() || x.discrete.size() != layout.discrete.size()) {
        return false;
    }
    for (std::size_t i = 0; i < x.continuous.size(); ++i) {
        if (!(x.continuous[i] >= layout.continuous[i].lo && x.continuous[i] <= layout.continuous[i].hi)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < x.discrete.size(); ++i) {
        if (x.discrete[i] < 0 || x.discrete[i] >= layout.discrete[i].levels()) {
            return false;
        }
    }
    return true;
}

inline auto uniform01(Rng& rng) -> double
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline auto uniform_index(Rng& rng, std::size_t n) -> std::size_t
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline auto random_controls(ControlLayout const& layout, Rng& rng) -> ControlVector
{
    ControlVector x;
    x.continuous.reserve(layout.continuous.size());
    for (auto const& gene : layout.continuous) {
        x.continuous.push_back(gene.lo == gene.hi ? gene.lo : gene.lo + uniform01(rng) * (gene.hi - gene.lo));
    }
    x.discrete.reserve(layout.discrete.size());
    for (auto const& grid : layout.discrete) {
        x.discrete.push_back(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(grid.levels()))));
    }
    return x;
}

} // namespace maopf

#endif
