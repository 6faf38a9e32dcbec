#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <maopf/knea.hpp>
#include <maopf/objectives.hpp>

#include "analytic.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace maopf;

namespace {

auto matrix(std::vector<std::vector<double>> const& rows) -> Eigen::MatrixXd
{
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

auto all_indices(std::size_t n) -> std::vector<std::size_t>
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

auto archive_objectives(KneaResult const& r) -> std::vector<std::vector<double>>
{
    std::vector<std::vector<double>> out;
    for (auto i : r.archive) {
        out.push_back(r.population[i].fit().objectives);
    }
    return out;
}

} // namespace

TEST(WeightedDistance, SingleNeighbourIsItsDistance)
{
    auto m = matrix({ { 0, 0 }, { 3, 4 }, { 10, 10 } });
    EXPECT_NEAR(weighted_distance(m, 0, 1), 5.0, 1e-12);
}

TEST(WeightedDistance, TwoNeighboursHandValue)
{
    auto m = matrix({ { 0 }, { 1 }, { -3 } });
    EXPECT_NEAR(weighted_distance(m, 0, 2), 2.0, 1e-12);
}

TEST(WeightedDistance, DuplicatePointIsZero)
{
    auto m = matrix({ { 0.3, 0.4 }, { 0.3, 0.4 }, { 1, 1 } });
    EXPECT_EQ(weighted_distance(m, 0, 1), 0.0);
}

TEST(WeightedDistance, SmallPopulationUsesAllNeighbours)
{
    auto m = matrix({ { 0 }, { 1 }, { -3 } });
    EXPECT_NEAR(weighted_distance(m, 0, 10), weighted_distance(m, 0, 2), 1e-15);
}

TEST(KneePoints, InteriorPointOfThreePointFront)
{
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.2, 0.2 } });
    KneeState state;
    auto front = all_indices(3);
    auto res = identify_knee_points(m, front, state);
    ASSERT_EQ(res.knees, std::vector<std::size_t> { 2 });
    EXPECT_NEAR(res.distance[2], 0.6 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(res.distance[0], 0.0, 1e-12);
}

TEST(KneePoints, ExtremesOnlyGiveOneKnee)
{
    for (std::size_t m : { 2u, 3u, 4u }) {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        KneeState state;
        auto res = identify_knee_points(pts, all_indices(m), state);
        EXPECT_FALSE(res.degenerate);
        EXPECT_EQ(res.knees, std::vector<std::size_t> { 0 }) << m;
        for (double d : res.distance) {
            EXPECT_NEAR(d, 0.0, 1e-12);
        }
    }
}

TEST(KneePoints, SingleMemberIsTheKnee)
{
    auto m = matrix({ { 0.5, 0.5, 0.1, 0.2 } });
    KneeState state;
    std::vector<std::size_t> front { 0 };
    auto res = identify_knee_points(m, front, state);
    EXPECT_EQ(res.knees, front);
    EXPECT_TRUE(res.degenerate);
}

TEST(KneePoints, CoincidentExtremesMakeEveryMemberAKnee)
{
    auto m = matrix({ { 0.5, 0.5 }, { 0.5, 0.5 }, { 0.5, 0.5 } });
    KneeState state;
    auto res = identify_knee_points(m, all_indices(3), state);
    EXPECT_TRUE(res.degenerate);
    EXPECT_EQ(res.knees.size(), 3u);
}

TEST(KneePoints, RatioFollowsThreshold)
{
    KneeState state;
    state.threshold = 0.5;
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.2, 0.2 }, { 0.6, 0.05 }, { 0.05, 0.6 } });
    auto front = all_indices(5);
    double r_prev = state.r;
    double t_prev = state.t;
    for (int pass = 0; pass < 20; ++pass) {
        identify_knee_points(m, front, state);
        double expected = r_prev * std::exp(-(1.0 - t_prev / 0.5) / 2.0);
        EXPECT_NEAR(state.r, expected, 1e-15);
        if (t_prev < 0.5) {
            EXPECT_LT(state.r, r_prev);
        } else if (t_prev > 0.5) {
            EXPECT_GT(state.r, r_prev);
        }
        EXPECT_GE(state.t, 0.0);
        EXPECT_LE(state.t, 1.0);
        r_prev = state.r;
        t_prev = state.t;
    }
}

TEST(KneePoints, ShrinkingRadiusAdmitsMoreKnees)
{
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.2, 0.2 }, { 0.6, 0.05 }, { 0.05, 0.6 } });
    KneeState wide;
    KneeState narrow;
    narrow.r = 0.01;
    auto a = identify_knee_points(m, all_indices(5), wide);
    auto b = identify_knee_points(m, all_indices(5), narrow);
    EXPECT_EQ(a.knees.size(), 1u);
    EXPECT_EQ(b.knees.size(), 5u);
}

TEST(Tournament, DominanceFirst)
{
    std::vector<Fitness> pop { { { 1, 1 }, 0, true }, { { 2, 2 }, 0, true } };
    std::vector<char> knee { 0, 1 };
    std::vector<double> wd { 0.0, 9.0 };
    Rng rng(1);
    EXPECT_EQ(tournament_winner(0, 1, pop, knee, wd, rng), 0u);
    EXPECT_EQ(tournament_winner(1, 0, pop, knee, wd, rng), 0u);
}

TEST(Tournament, KneeBeatsNonKneeWhenIncomparable)
{
    std::vector<Fitness> pop { { { 1, 2 }, 0, true }, { { 2, 1 }, 0, true } };
    std::vector<char> knee { 1, 0 };
    std::vector<double> wd { 0.0, 9.0 };
    Rng rng(1);
    EXPECT_EQ(tournament_winner(0, 1, pop, knee, wd, rng), 0u);
    EXPECT_EQ(tournament_winner(1, 0, pop, knee, wd, rng), 0u);
}

TEST(Tournament, MatchesCascadeOracle)
{
    Rng rng(2);
    Rng coin(3);
    for (int trial = 0; trial < 5000; ++trial) {
        std::vector<Fitness> pop(2);
        for (auto& f : pop) {
            f.objectives = { std::floor(uniform01(rng) * 3), std::floor(uniform01(rng) * 3) };
            f.feasible = uniform01(rng) < 0.7;
            f.violation = f.feasible ? 0.0 : std::floor(uniform01(rng) * 3) + 1;
        }
        std::vector<char> knee { static_cast<char>(uniform01(rng) < 0.5), static_cast<char>(uniform01(rng) < 0.5) };
        std::vector<double> wd { std::floor(uniform01(rng) * 3), std::floor(uniform01(rng) * 3) };

        // oracle: explicit rule list
        int expected = -1;
        auto const& a = pop[0];
        auto const& b = pop[1];
        if (a.feasible && !b.feasible) {
            expected = 0;
        } else if (!a.feasible && b.feasible) {
            expected = 1;
        } else if (!a.feasible && a.violation != b.violation) {
            expected = a.violation < b.violation ? 0 : 1;
        } else if (a.feasible && oracle::pareto_less(a.objectives, b.objectives)) {
            expected = 0;
        } else if (a.feasible && oracle::pareto_less(b.objectives, a.objectives)) {
            expected = 1;
        } else if (knee[0] != knee[1]) {
            expected = knee[0] ? 0 : 1;
        } else if (wd[0] != wd[1]) {
            expected = wd[0] > wd[1] ? 0 : 1;
        }
        auto w = tournament_winner(0, 1, pop, knee, wd, coin);
        ASSERT_LT(w, 2u);
        if (expected >= 0) {
            EXPECT_EQ(static_cast<int>(w), expected);
        }
    }
}

TEST(Tournament, ExactTiesSplitEvenly)
{
    std::vector<Fitness> pop { { { 1, 2 }, 0, true }, { { 2, 1 }, 0, true } };
    std::vector<char> knee { 0, 0 };
    std::vector<double> wd { 1.0, 1.0 };
    Rng rng(4);
    int first = 0;
    for (int i = 0; i < 4000; ++i) {
        first += tournament_winner(0, 1, pop, knee, wd, rng) == 0;
    }
    EXPECT_NEAR(first / 4000.0, 0.5, 0.03);
}

TEST(EnvironmentalSelection, SingleFrontOfExactSizeIsIdentity)
{
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.2, 0.2 }, { 0.5, 0.1 } });
    std::vector<std::vector<std::size_t>> fronts { all_indices(4) };
    std::vector<char> knee { 0, 0, 1, 0 };
    EXPECT_EQ(environmental_selection(m, fronts, knee, 4, 2), all_indices(4));
}

TEST(EnvironmentalSelection, SurplusKneesCutByHyperplaneDistance)
{
    // Distances to x + y = 1 (times sqrt 2): 0, 0, 0.30, 0.45, 0.28, 0.38.
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.1, 0.6 }, { 0.25, 0.3 }, { 0.6, 0.12 }, { 0.4, 0.22 } });
    std::vector<std::vector<std::size_t>> fronts { all_indices(6) };
    std::vector<char> knee { 0, 0, 1, 1, 1, 1 };
    auto chosen = environmental_selection(m, fronts, knee, 3, 2);
    EXPECT_EQ(chosen, (std::vector<std::size_t> { 2, 3, 5 }));
}

TEST(EnvironmentalSelection, WholeFrontsFirst)
{
    auto m = matrix({ { 0, 1 }, { 1, 0 }, { 0.5, 0.5 }, { 0.9, 0.9 }, { 0.6, 0.95 }, { 0.95, 0.6 } });
    std::vector<std::vector<std::size_t>> fronts { { 0, 1, 2 }, { 3 }, { 4, 5 } };
    std::vector<char> knee(6, 0);
    EXPECT_EQ(environmental_selection(m, fronts, knee, 4, 2), (std::vector<std::size_t> { 0, 1, 2, 3 }));
    auto five = environmental_selection(m, fronts, knee, 5, 2);
    EXPECT_EQ(five.size(), 5u);
}

TEST(EnvironmentalSelection, DuplicatesAreDeterministic)
{
    auto m = matrix({ { 0.3, 0.3 }, { 0.3, 0.3 }, { 0.3, 0.3 }, { 0.3, 0.3 } });
    std::vector<std::vector<std::size_t>> fronts { all_indices(4) };
    std::vector<char> knee(4, 0);
    auto a = environmental_selection(m, fronts, knee, 2, 2);
    auto b = environmental_selection(m, fronts, knee, 2, 2);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, (std::vector<std::size_t> { 0, 1 }));
}

TEST(Config, Validation)
{
    AlgorithmConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.population = 5;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg.population = 2;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.generations = 0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.threshold = 1.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = {};
    EXPECT_EQ(cfg.neighbor_count(), 4u);
    cfg.population = 4;
    EXPECT_EQ(cfg.neighbor_count(), 3u);
}

TEST(RunKnea, MinimalRunOnTwoBusToy)
{
    OpfProblem problem(load_case(fixtures::data_path("two_bus.json")));
    AlgorithmConfig cfg;
    cfg.population = 4;
    cfg.generations = 1;
    cfg.seed = 1;
    auto res = run_knea(problem, cfg);
    ASSERT_FALSE(res.archive.empty());
    EXPECT_TRUE(res.feasible);
    for (auto a : res.archive) {
        for (auto b : res.archive) {
            EXPECT_NE(dominates(res.population[a], res.population[b]), Dominance::Left);
        }
    }
}

TEST(RunKnea, SameSeedSameResultAcrossThreadCounts)
{
    OpfProblem problem(load_case(fixtures::data_path("ieee14.json")));
    AlgorithmConfig cfg;
    cfg.population = 12;
    cfg.generations = 6;
    cfg.seed = 77;
    auto a = run_knea(problem, cfg);
    auto b = run_knea(problem, cfg);
    cfg.threads = 3;
    auto c = run_knea(problem, cfg);
    EXPECT_EQ(a.archive, b.archive);
    EXPECT_EQ(a.archive, c.archive);
    for (std::size_t i = 0; i < a.population.size(); ++i) {
        EXPECT_EQ(a.population[i].controls, b.population[i].controls);
        EXPECT_EQ(a.population[i].controls, c.population[i].controls);
        EXPECT_EQ(a.population[i].fit().objectives, c.population[i].fit().objectives);
    }
}

TEST(RunKnea, InvariantsHoldEveryGeneration)
{
    analytic::Schaffer problem;
    AlgorithmConfig cfg;
    cfg.population = 20;
    cfg.generations = 30;
    cfg.seed = 3;
    std::size_t calls = 0;
    auto res = run_knea(problem, cfg, [&](ProgressRecord const& rec) {
        ++calls;
        EXPECT_EQ(rec.generation, calls);
        EXPECT_EQ(rec.feasible, 20u);
        EXPECT_GT(rec.r, 0.0);
        EXPECT_LE(rec.knees, 20u);
    });
    EXPECT_EQ(calls, 30u);
    EXPECT_EQ(res.population.size(), 20u);
    auto fits = detail::fitness_of(res.population);
    auto fronts = fast_nondominated_sort(std::span<const Fitness>(fits));
    std::set<std::size_t> first(fronts[0].begin(), fronts[0].end());
    for (auto k : res.state.kappa) {
        EXPECT_TRUE(first.count(k)) << k;
    }
    for (auto a : res.archive) {
        for (auto b : res.archive) {
            EXPECT_FALSE(oracle::pareto_less(res.population[a].fit().objectives, res.population[b].fit().objectives));
        }
    }
}

TEST(RunKnea, RatioDynamicsInLoggedRun)
{
    analytic::Schaffer problem(-4.0, 6.0);
    AlgorithmConfig cfg;
    cfg.population = 50;
    cfg.generations = 100;
    cfg.seed = 11;
    auto res = run_knea(problem, cfg);
    double r_prev = 1.0;
    double t_prev = 0.0;
    for (auto const& rec : res.progress) {
        if (t_prev < cfg.threshold) {
            EXPECT_LT(rec.r, r_prev) << rec.generation;
        } else if (t_prev > cfg.threshold) {
            EXPECT_GT(rec.r, r_prev) << rec.generation;
        }
        r_prev = rec.r;
        t_prev = rec.t;
    }
}

TEST(RunKnea, ConvergesOnAnalyticBiObjective)
{
    analytic::Schaffer problem(-4.0, 6.0);
    AlgorithmConfig cfg;
    cfg.population = 50;
    cfg.generations = 100;
    cfg.seed = 5;
    auto res = run_knea(problem, cfg);
    auto pts = archive_objectives(res);
    ASSERT_GE(pts.size(), 10u);
    for (auto const& p : pts) {
        EXPECT_LT(analytic::distance_to_front(p), 0.05);
    }
}

TEST(RunKnea, ZeroFeasibleGivesFlaggedArchive)
{
    struct Hopeless {
        ControlLayout layout_ { { { 0.0, 1.0 } }, {} };
        [[nodiscard]] auto layout() const -> ControlLayout const& { return layout_; }
        [[nodiscard]] auto objective_count() const -> std::size_t { return 2; }
        [[nodiscard]] auto evaluate(ControlVector const& x) const -> Fitness
        {
            double v = x.continuous[0];
            return { { v, 1 - v }, 1.0 + v, false };
        }
    };
    AlgorithmConfig cfg;
    cfg.population = 8;
    cfg.generations = 5;
    auto res = run_knea(Hopeless {}, cfg);
    EXPECT_FALSE(res.feasible);
    ASSERT_FALSE(res.archive.empty());
    double best = res.population[res.archive[0]].fit().violation;
    for (auto const& ind : res.population) {
        EXPECT_GE(ind.fit().violation, best);
    }
}
