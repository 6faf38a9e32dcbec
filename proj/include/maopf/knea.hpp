#ifndef MAOPF_KNEA_HPP
#define MAOPF_KNEA_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "moea.hpp"

namespace maopf {

template <class P>
concept OptimizationProblem = requires(P const& p, ControlVector const& x) {
    { p.layout() } -> std::convertible_to<ControlLayout const&>;
    { p.evaluate(x) } -> std::same_as<Fitness>;
    { p.objective_count() } -> std::convertible_to<std::size_t>;
};

struct KneeState {
    std::vector<std::size_t> kappa; // indices into the current population
    double r = 1.0;
    double t = 0.0;
    double threshold = 0.5;
};

// Denominator of the knee fraction t.
enum class KneeFractionBase { FirstFront, Population };

struct AlgorithmConfig {
    std::size_t population = 50;
    std::size_t generations = 100;
    double threshold = 0.5;
    std::size_t neighbors = 0; // 0: min(4, population - 1)
    VariationParams variation;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    KneeFractionBase fraction_base = KneeFractionBase::FirstFront;

    void validate() const
    {
        if (population < 4 || population % 2 != 0) {
            throw std::invalid_argument("population size must be even and at least 4");
        }
        if (generations < 1) {
            throw std::invalid_argument("at least one generation is required");
        }
        if (!(threshold > 0.0 && threshold < 1.0)) {
            throw std::invalid_argument("knee threshold must lie in (0, 1)");
        }
        auto const& v = variation;
        if (!(v.crossover_rate >= 0.0 && v.crossover_rate <= 1.0) || !(v.gene_exchange >= 0.0 && v.gene_exchange <= 1.0)
            || !(v.mutation_rate <= 1.0) || !(v.eta_c >= 0.0) || !(v.eta_m >= 0.0)) {
            throw std::invalid_argument("operator parameters out of range");
        }
    }

    [[nodiscard]] auto neighbor_count() const -> std::size_t
    {
        return neighbors > 0 ? neighbors : std::min<std::size_t>(4, population - 1);
    }
};

// Per-objective bounds used to scale objective vectors onto [0, 1].
struct ObjectiveBounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

// Min-max over the feasible members (all members when none is feasible).
inline auto objective_bounds(std::span<const Fitness> pop) -> ObjectiveBounds
{
    if (pop.empty()) {
        return {};
    }
    auto m = pop.front().objectives.size();
    bool any_feasible = std::any_of(pop.begin(), pop.end(), [](auto const& f) { return f.feasible; });
    ObjectiveBounds b { std::vector<double>(m, std::numeric_limits<double>::infinity()),
        std::vector<double>(m, -std::numeric_limits<double>::infinity()) };
    for (auto const& f : pop) {
        if (any_feasible && !f.feasible) {
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            b.lo[j] = std::min(b.lo[j], f.objectives[j]);
            b.hi[j] = std::max(b.hi[j], f.objectives[j]);
        }
    }
    return b;
}

// Rows are individuals. A constant objective maps to 0.
inline auto normalize(std::span<const Fitness> pop, ObjectiveBounds const& b) -> Eigen::MatrixXd
{
    auto m = b.lo.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(pop.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < pop.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double span = b.hi[j] - b.lo[j];
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                = span > 0.0 ? (pop[i].objectives[j] - b.lo[j]) / span : 0.0;
        }
    }
    return out;
}

inline auto normalize(std::span<const Fitness> pop) -> Eigen::MatrixXd
{
    return normalize(pop, objective_bounds(pop));
}

// Weighted distance of row p to its k nearest neighbours among `rows`:
// sum of w_i * dis_i with w proportional to 1 / max(|dis_i - mean(dis)|, 1e-12).
inline auto weighted_distance(Eigen::MatrixXd const& points, std::size_t p, std::size_t k,
    std::span<const std::size_t> rows = {}) -> double
{
    std::vector<double> dis;
    auto consider = [&](std::size_t q) {
        if (q != p) {
            dis.push_back((points.row(static_cast<Eigen::Index>(p)) - points.row(static_cast<Eigen::Index>(q))).norm());
        }
    };
    if (rows.empty()) {
        for (std::size_t q = 0; q < static_cast<std::size_t>(points.rows()); ++q) {
            consider(q);
        }
    } else {
        for (auto q : rows) {
            consider(q);
        }
    }
    if (dis.empty() || k == 0) {
        return 0.0;
    }
    k = std::min(k, dis.size());
    std::partial_sort(dis.begin(), dis.begin() + static_cast<std::ptrdiff_t>(k), dis.end());
    dis.resize(k);
    double mean = std::accumulate(dis.begin(), dis.end(), 0.0) / static_cast<double>(k);
    double rd_sum = 0.0;
    std::vector<double> rd(k);
    for (std::size_t i = 0; i < k; ++i) {
        rd[i] = 1.0 / std::max(std::abs(dis[i] - mean), 1e-12);
        rd_sum += rd[i];
    }
    double wd = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        wd += rd[i] / rd_sum * dis[i];
    }
    return wd;
}

inline auto weighted_distances(Eigen::MatrixXd const& points, std::size_t k) -> std::vector<double>
{
    std::vector<double> out(static_cast<std::size_t>(points.rows()));
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = weighted_distance(points, p, k);
    }
    return out;
}

// Signed distance of each front member to the hyperplane through the front's extreme
// points (the largest value of each objective, taking the next candidate when one point
// is extreme in several objectives). Positive toward the ideal point. Empty when the
// plane is undefined.
inline auto hyperplane_distances(Eigen::MatrixXd const& points, std::span<const std::size_t> front)
    -> std::optional<std::vector<double>>
{
    auto m = static_cast<std::size_t>(points.cols());
    if (front.size() < m || m == 0) {
        return std::nullopt;
    }
    std::vector<std::size_t> extreme;
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<std::size_t> order(front.begin(), front.end());
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return points(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j))
                > points(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        });
        auto it = std::find_if(order.begin(), order.end(),
            [&](std::size_t c) { return std::find(extreme.begin(), extreme.end(), c) == extreme.end(); });
        extreme.push_back(*it);
    }
    Eigen::MatrixXd e(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
        e.row(static_cast<Eigen::Index>(j)) = points.row(static_cast<Eigen::Index>(extreme[j]));
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(e);
    if (!lu.isInvertible()) {
        return std::nullopt;
    }
    Eigen::VectorXd w = lu.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m)));
    double norm = w.norm();
    if (!w.allFinite() || !(norm > 0.0)) {
        return std::nullopt;
    }
    std::vector<double> out;
    out.reserve(front.size());
    for (auto i : front) {
        out.push_back((1.0 - points.row(static_cast<Eigen::Index>(i)).dot(w)) / norm);
    }
    return out;
}

struct KneeResult {
    std::vector<std::size_t> knees; // subset of the front, ascending
    std::vector<double> distance;   // per front member, in front order
    bool degenerate = false;
};

// One knee-identification pass over a non-dominated front. Uses the current r for the
// neighbourhood, then advances r and t for the next pass.
inline auto identify_knee_points(Eigen::MatrixXd const& points, std::span<const std::size_t> front, KneeState& state,
    std::size_t fraction_denominator = 0) -> KneeResult
{
    if (front.empty()) {
        throw std::invalid_argument("knee identification needs a nonempty front");
    }
    auto m = static_cast<std::size_t>(points.cols());
    KneeResult out;
    auto dist = hyperplane_distances(points, front);
    if (!dist) {
        out.degenerate = true;
        out.distance.assign(front.size(), 0.0);
        out.knees.assign(front.begin(), front.end());
    } else {
        out.distance = *dist;
        std::vector<double> radius(m);
        for (std::size_t j = 0; j < m; ++j) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (auto i : front) {
                lo = std::min(lo, points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                hi = std::max(hi, points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
            radius[j] = (hi - lo) * state.r;
        }
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (out.distance[a] != out.distance[b]) {
                return out.distance[a] > out.distance[b];
            }
            return front[a] < front[b];
        });
        for (auto pos : order) {
            auto cand = front[pos];
            bool covered = std::any_of(out.knees.begin(), out.knees.end(), [&](std::size_t knee) {
                for (std::size_t j = 0; j < m; ++j) {
                    double d = std::abs(points(static_cast<Eigen::Index>(cand), static_cast<Eigen::Index>(j))
                        - points(static_cast<Eigen::Index>(knee), static_cast<Eigen::Index>(j)));
                    if (d > radius[j]) {
                        return false;
                    }
                }
                return true;
            });
            if (!covered) {
                out.knees.push_back(cand);
            }
        }
        std::sort(out.knees.begin(), out.knees.end());
    }
    state.r = state.r * std::exp(-(1.0 - state.t / state.threshold) / static_cast<double>(m));
    auto denom = fraction_denominator > 0 ? fraction_denominator : front.size();
    state.t = std::min(1.0, static_cast<double>(out.knees.size()) / static_cast<double>(denom));
    state.kappa = out.knees;
    return out;
}

// Binary tournament: constrained dominance, then knee membership, then larger
// weighted distance, then a fair coin.
inline auto tournament_winner(std::size_t a, std::size_t b, std::span<const Fitness> pop, std::span<const char> knee,
    std::span<const double> wd, Rng& rng) -> std::size_t
{
    switch (dominates(pop[a], pop[b])) {
    case Dominance::Left:
        return a;
    case Dominance::Right:
        return b;
    case Dominance::None:
        break;
    }
    if (knee[a] != knee[b]) {
        return knee[a] ? a : b;
    }
    if (wd[a] != wd[b]) {
        return wd[a] > wd[b] ? a : b;
    }
    return uniform01(rng) < 0.5 ? a : b;
}

inline auto mating_selection(std::span<const Fitness> pop, std::span<const char> knee, std::span<const double> wd,
    std::size_t pool_size, Rng& rng) -> std::vector<std::size_t>
{
    std::vector<std::size_t> pool;
    pool.reserve(pool_size);
    auto n = pop.size();
    for (std::size_t i = 0; i < pool_size; ++i) {
        auto a = uniform_index(rng, n);
        auto b = n > 1 ? uniform_index(rng, n - 1) : a;
        if (n > 1 && b >= a) {
            ++b;
        }
        pool.push_back(tournament_winner(a, b, pop, knee, wd, rng));
    }
    return pool;
}

// Whole fronts first; the front that overflows is cut by knee membership, then
// hyperplane distance, then weighted distance. Returns ascending union indices.
inline auto environmental_selection(Eigen::MatrixXd const& points, std::span<const std::vector<std::size_t>> fronts,
    std::span<const char> knee, std::size_t target, std::size_t k) -> std::vector<std::size_t>
{
    std::vector<std::size_t> chosen;
    for (auto const& front : fronts) {
        if (chosen.size() + front.size() <= target) {
            chosen.insert(chosen.end(), front.begin(), front.end());
            if (chosen.size() == target) {
                break;
            }
            continue;
        }
        auto slots = target - chosen.size();
        auto dist = hyperplane_distances(points, front).value_or(std::vector<double>(front.size(), 0.0));
        std::vector<double> wd(front.size());
        for (std::size_t i = 0; i < front.size(); ++i) {
            wd[i] = weighted_distance(points, front[i], k);
        }
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (knee[front[a]] != knee[front[b]]) {
                return knee[front[a]] > knee[front[b]];
            }
            if (dist[a] != dist[b]) {
                return dist[a] > dist[b];
            }
            if (wd[a] != wd[b]) {
                return wd[a] > wd[b];
            }
            return front[a] < front[b];
        });
        for (std::size_t i = 0; i < slots; ++i) {
            chosen.push_back(front[order[i]]);
        }
        break;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

// Evaluates every unevaluated individual, spreading the work over `threads` workers.
// Results do not depend on the thread count.
template <OptimizationProblem Problem>
void evaluate_population(Problem const& problem, std::span<Individual> pop, std::size_t threads)
{
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!pop[i].evaluated()) {
            todo.push_back(i);
        }
    }
    threads = std::max<std::size_t>(1, std::min(threads, todo.size()));
    if (threads == 1) {
        for (auto i : todo) {
            pop[i].fitness = problem.evaluate(pop[i].controls);
        }
        return;
    }
    std::atomic<std::size_t> next { 0 };
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t j = next++; j < todo.size(); j = next++) {
                    pop[todo[j]].fitness = problem.evaluate(pop[todo[j]].controls);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    for (auto const& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

struct ProgressRecord {
    std::size_t generation = 0;
    std::size_t feasible = 0;
    std::vector<double> objective_min; // over feasible members
    std::vector<double> objective_max;
    std::size_t knees = 0;
    double r = 1.0;
    double t = 0.0;
};

struct KneaResult {
    std::vector<Individual> population;
    std::vector<std::size_t> archive; // indices into population
    bool feasible = true;             // false: archive holds the least-violating members
    std::vector<ProgressRecord> progress;
    KneeState state;
};

namespace detail {
    inline auto fitness_of(std::span<const Individual> pop) -> std::vector<Fitness>
    {
        std::vector<Fitness> out;
        out.reserve(pop.size());
        for (auto const& ind : pop) {
            out.push_back(ind.fit());
        }
        return out;
    }

    inline auto progress_of(std::size_t g, std::span<const Fitness> pop, KneeState const& state) -> ProgressRecord
    {
        ProgressRecord rec;
        rec.generation = g;
        rec.knees = state.kappa.size();
        rec.r = state.r;
        rec.t = state.t;
        for (auto const& f : pop) {
            if (!f.feasible) {
                continue;
            }
            if (rec.feasible++ == 0) {
                rec.objective_min = f.objectives;
                rec.objective_max = f.objectives;
            }
            for (std::size_t j = 0; j < f.objectives.size(); ++j) {
                rec.objective_min[j] = std::min(rec.objective_min[j], f.objectives[j]);
                rec.objective_max[j] = std::max(rec.objective_max[j], f.objectives[j]);
            }
        }
        return rec;
    }
} // namespace detail

// The generational loop: initialise, then mate, vary, evaluate, update knee points and
// select the next population until the generation budget is spent.
template <OptimizationProblem Problem>
auto run_knea(Problem const& problem, AlgorithmConfig const& cfg,
    std::function<void(ProgressRecord const&)> const& observer = {}) -> KneaResult
{
    cfg.validate();
    auto const& layout = problem.layout();
    auto const n = cfg.population;
    auto const k = cfg.neighbor_count();
    double pm = cfg.variation.mutation_rate >= 0.0 ? cfg.variation.mutation_rate
                                                   : 1.0 / static_cast<double>(std::max<std::size_t>(1, layout.size()));
    Rng rng(cfg.seed);

    KneaResult result;
    auto& pop = result.population;
    for (std::size_t i = 0; i < n; ++i) {
        pop.push_back(random_individual(layout, rng));
    }
    evaluate_population(problem, std::span<Individual>(pop), cfg.threads);

    KneeState& state = result.state;
    state = KneeState { {}, 1.0, 0.0, cfg.threshold };
    std::vector<char> knee(n, 0);

    for (std::size_t g = 1; g <= cfg.generations; ++g) {
        auto fits = detail::fitness_of(pop);
        auto points = normalize(fits);
        auto wd = weighted_distances(points, k);
        auto pool = mating_selection(fits, knee, wd, n, rng);

        std::vector<Individual> uni = pop;
        uni.reserve(2 * n);
        for (std::size_t i = 0; i + 1 < pool.size(); i += 2) {
            auto [c1, c2] = sbx_crossover(pop[pool[i]].controls, pop[pool[i + 1]].controls, layout, cfg.variation.eta_c,
                cfg.variation.crossover_rate, rng, cfg.variation.gene_exchange);
            uni.push_back({ polynomial_mutation(c1, layout, cfg.variation.eta_m, pm, rng), std::nullopt });
            uni.push_back({ polynomial_mutation(c2, layout, cfg.variation.eta_m, pm, rng), std::nullopt });
        }
        evaluate_population(problem, std::span<Individual>(uni), cfg.threads);

        auto ufits = detail::fitness_of(uni);
        auto fronts = fast_nondominated_sort(std::span<const Fitness>(ufits));
        auto upoints = normalize(ufits);
        auto denom = cfg.fraction_base == KneeFractionBase::Population ? uni.size() : fronts.front().size();
        identify_knee_points(upoints, fronts.front(), state, denom);
        std::vector<char> uknee(uni.size(), 0);
        for (auto i : state.kappa) {
            uknee[i] = 1;
        }

        auto chosen = environmental_selection(upoints, fronts, uknee, n, k);
        std::vector<Individual> next;
        next.reserve(n);
        knee.assign(n, 0);
        std::vector<std::size_t> kappa;
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            next.push_back(std::move(uni[chosen[i]]));
            if (uknee[chosen[i]]) {
                knee[i] = 1;
                kappa.push_back(i);
            }
        }
        pop = std::move(next);
        state.kappa = std::move(kappa);

        auto rec = detail::progress_of(g, detail::fitness_of(pop), state);
        if (observer) {
            observer(rec);
        }
        result.progress.push_back(std::move(rec));
    }

    auto fits = detail::fitness_of(pop);
    auto fronts = fast_nondominated_sort(std::span<const Fitness>(fits));
    for (auto i : fronts.front()) {
        bool duplicate = std::any_of(result.archive.begin(), result.archive.end(),
            [&](std::size_t j) { return pop[j].controls == pop[i].controls; });
        if (!duplicate) {
            result.archive.push_back(i);
        }
    }
    result.feasible = pop[result.archive.front()].fit().feasible;
    return result;
}

} // namespace maopf

#endif
