#ifndef MAOPF_MOEA_HPP
#define MAOPF_MOEA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "encoding.hpp"

namespace maopf {

// Objectives (all minimized) plus the aggregated constraint violation.
struct Fitness {
    std::vector<double> objectives;
    double violation = 0.0;
    bool feasible = true;
};

struct Individual {
    ControlVector controls;
    std::optional<Fitness> fitness;

    [[nodiscard]] auto evaluated() const -> bool { return fitness.has_value(); }
    [[nodiscard]] auto fit() const -> Fitness const&
    {
        if (!fitness) {
            throw std::logic_error("individual has not been evaluated");
        }
        return *fitness;
    }
};

inline auto random_individual(ControlLayout const& layout, Rng& rng) -> Individual
{
    return { random_controls(layout, rng), std::nullopt };
}

enum class Dominance { Left, Right, None };

// Plain Pareto comparison on minimized objectives.
inline auto pareto_compare(std::span<const double> a, std::span<const double> b) -> Dominance
{
    bool a_better = false;
    bool b_better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) {
            a_better = true;
        } else if (b[i] < a[i]) {
            b_better = true;
        }
        if (a_better && b_better) {
            return Dominance::None;
        }
    }
    if (a_better) {
        return Dominance::Left;
    }
    if (b_better) {
        return Dominance::Right;
    }
    return Dominance::None;
}

// Constrained dominance: feasible beats infeasible, infeasible pairs compare by
// violation, feasible pairs by Pareto dominance.
inline auto dominates(Fitness const& a, Fitness const& b) -> Dominance
{
    if (a.feasible != b.feasible) {
        return a.feasible ? Dominance::Left : Dominance::Right;
    }
    if (!a.feasible) {
        if (a.violation < b.violation) {
            return Dominance::Left;
        }
        if (b.violation < a.violation) {
            return Dominance::Right;
        }
        return Dominance::None;
    }
    return pareto_compare(a.objectives, b.objectives);
}

inline auto dominates(Individual const& a, Individual const& b) -> Dominance
{
    return dominates(a.fit(), b.fit());
}

// Deb's fast non-dominated sort under constrained dominance. Fronts hold indices
// in ascending order.
inline auto fast_nondominated_sort(std::span<const Fitness> pop) -> std::vector<std::vector<std::size_t>>
{
    auto const n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            switch (dominates(pop[i], pop[j])) {
            case Dominance::Left:
                dominated[i].push_back(j);
                ++count[j];
                break;
            case Dominance::Right:
                dominated[j].push_back(i);
                ++count[i];
                break;
            case Dominance::None:
                break;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) {
            current.push_back(i);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current) {
            for (auto j : dominated[i]) {
                if (--count[j] == 0) {
                    next.push_back(j);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

inline auto fast_nondominated_sort(std::span<const Individual> pop) -> std::vector<std::vector<std::size_t>>
{
    std::vector<Fitness> fits;
    fits.reserve(pop.size());
    for (auto const& ind : pop) {
        fits.push_back(ind.fit());
    }
    return fast_nondominated_sort(std::span<const Fitness>(fits));
}

struct VariationParams {
    double crossover_rate = 0.9;   // per mating pair
    double gene_exchange = 0.5;    // per gene, once a pair crosses over
    double eta_c = 20.0;
    double mutation_rate = -1.0;   // per gene; negative means 1 / number of genes
    double eta_m = 20.0;
};

namespace detail {
    // Bounded SBX on one real-valued gene (Deb & Agrawal); returns the two children.
    inline auto sbx_gene(double y1, double y2, double lo, double hi, double eta, Rng& rng) -> std::pair<double, double>
    {
        if (std::abs(y1 - y2) <= 1e-14 || hi <= lo) {
            return { y1, y2 };
        }
        bool swapped = y1 > y2;
        if (swapped) {
            std::swap(y1, y2);
        }
        double u = uniform01(rng);
        auto betaq = [&](double beta) {
            double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            if (u <= 1.0 / alpha) {
                return std::pow(u * alpha, 1.0 / (eta + 1.0));
            }
            return std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
        };
        double span = y2 - y1;
        double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * (y1 - lo) / span) * span);
        double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (hi - y2) / span) * span);
        c1 = std::clamp(c1, lo, hi);
        c2 = std::clamp(c2, lo, hi);
        if (uniform01(rng) < 0.5) {
            std::swap(c1, c2);
        }
        if (swapped) {
            std::swap(c1, c2);
        }
        return { c1, c2 };
    }

    inline auto polynomial_gene(double y, double lo, double hi, double eta, Rng& rng) -> double
    {
        double span = hi - lo;
        double d1 = (y - lo) / span;
        double d2 = (hi - y) / span;
        double u = uniform01(rng);
        double power = 1.0 / (eta + 1.0);
        double dq = 0.0;
        if (u < 0.5) {
            double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            dq = std::pow(val, power) - 1.0;
        } else {
            double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            dq = 1.0 - std::pow(val, power);
        }
        return std::clamp(y + dq * span, lo, hi);
    }
} // namespace detail

// Simulated binary crossover. Discrete indices cross as reals on [0, levels-1] and
// are rounded back onto the grid.
inline auto sbx_crossover(ControlVector const& a, ControlVector const& b, ControlLayout const& layout, double eta_c,
    double pc, Rng& rng, double gene_exchange = 0.5) -> std::pair<ControlVector, ControlVector>
{
    std::pair<ControlVector, ControlVector> out { a, b };
    if (uniform01(rng) >= pc) {
        return out;
    }
    for (std::size_t i = 0; i < layout.continuous.size(); ++i) {
        if (uniform01(rng) >= gene_exchange) {
            continue;
        }
        auto [c1, c2] = detail::sbx_gene(a.continuous[i], b.continuous[i], layout.continuous[i].lo,
            layout.continuous[i].hi, eta_c, rng);
        out.first.continuous[i] = c1;
        out.second.continuous[i] = c2;
    }
    for (std::size_t i = 0; i < layout.discrete.size(); ++i) {
        if (uniform01(rng) >= gene_exchange) {
            continue;
        }
        double top = layout.discrete[i].levels() - 1;
        auto [c1, c2] = detail::sbx_gene(a.discrete[i], b.discrete[i], 0.0, top, eta_c, rng);
        out.first.discrete[i] = static_cast<int>(std::lround(c1));
        out.second.discrete[i] = static_cast<int>(std::lround(c2));
    }
    return out;
}

// Polynomial mutation on reals; discrete genes move one grid step (reflected at the ends).
inline auto polynomial_mutation(ControlVector const& x, ControlLayout const& layout, double eta_m, double pm, Rng& rng)
    -> ControlVector
{
    ControlVector y = x;
    for (std::size_t i = 0; i < layout.continuous.size(); ++i) {
        if (uniform01(rng) >= pm) {
            continue;
        }
        auto const& gene = layout.continuous[i];
        if (gene.hi > gene.lo) {
            y.continuous[i] = detail::polynomial_gene(x.continuous[i], gene.lo, gene.hi, eta_m, rng);
        }
    }
    for (std::size_t i = 0; i < layout.discrete.size(); ++i) {
        if (uniform01(rng) >= pm) {
            continue;
        }
        int levels = layout.discrete[i].levels();
        if (levels < 2) {
            continue;
        }
        int step = uniform01(rng) < 0.5 ? -1 : 1;
        int v = x.discrete[i] + step;
        if (v < 0 || v >= levels) {
            v = x.discrete[i] - step;
        }
        y.discrete[i] = v;
    }
    return y;
}

} // namespace maopf

#endif
