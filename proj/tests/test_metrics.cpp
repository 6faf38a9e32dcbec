#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <maopf/knea.hpp>
#include <maopf/metrics.hpp>

#include "analytic.hpp"
#include "oracles.hpp"

using namespace maopf;

namespace {

auto random_front(Rng& rng, std::size_t n, std::size_t m) -> Front
{
    Front f(n, std::vector<double>(m));
    for (auto& p : f) {
        for (auto& v : p) {
            v = uniform01(rng) * 10.0 - 3.0;
        }
    }
    return f;
}

} // namespace

TEST(GenerationalDistance, HandFixture)
{
    Front obtained { { 0, 1 }, { 1, 0 } };
    Front reference { { 0, 0 } };
    EXPECT_NEAR(generational_distance(obtained, reference, true), std::sqrt(2.0) / 2.0, 1e-12);
}

TEST(GenerationalDistance, SubsetOfReferenceIsZero)
{
    Front reference { { 0, 3 }, { 1, 2 }, { 2, 1 }, { 3, 0 } };
    Front obtained { { 1, 2 }, { 3, 0 } };
    EXPECT_EQ(generational_distance(obtained, reference), 0.0);
    EXPECT_EQ(generational_distance(obtained, reference, true), 0.0);
}

TEST(GenerationalDistance, SelfDistanceIsZero)
{
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        auto f = random_front(rng, 1 + uniform_index(rng, 40), 4);
        EXPECT_EQ(generational_distance(f, f), 0.0);
        EXPECT_EQ(generational_distance(f, f, true), 0.0);
    }
}

TEST(GenerationalDistance, EmptyReferenceRejected)
{
    EXPECT_THROW(generational_distance({ { 1, 2 } }, {}), std::invalid_argument);
    EXPECT_THROW(generational_distance({ { 1, 2 } }, { { 1, 2, 3 } }), std::invalid_argument);
}

TEST(GenerationalDistanceProperty, SharedNormalizationIsAffineInvariant)
{
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        auto a = random_front(rng, 10, 3);
        auto b = random_front(rng, 7, 3);
        auto a2 = a;
        auto b2 = b;
        std::vector<double> s { 100.0, 0.01, 7.0 };
        std::vector<double> t { -4.0, 3.0, 1e3 };
        for (auto* f : { &a2, &b2 }) {
            for (auto& p : *f) {
                for (std::size_t j = 0; j < 3; ++j) {
                    p[j] = s[j] * p[j] + t[j];
                }
            }
        }
        double g = generational_distance(a, b);
        EXPECT_GE(g, 0.0);
        EXPECT_NEAR(generational_distance(a2, b2), g, 1e-12);
    }
}

TEST(Spacing, HandFixture)
{
    Front f { { 0 }, { 1 }, { 4 } };
    EXPECT_NEAR(spacing(f), std::sqrt(24.0 / 18.0), 1e-12);
}

TEST(Spacing, EquallySpacedIsZero)
{
    Front f { { 0, 0 }, { 1, 1 }, { 2, 2 }, { 3, 3 } };
    EXPECT_NEAR(spacing(f), 0.0, 1e-15);
}

TEST(Spacing, DuplicatedPoint)
{
    Front f { { 0, 0 }, { 0, 0 }, { 1, 0 } };
    EXPECT_GT(spacing(f), 0.0);
    Front all { { 2, 2 }, { 2, 2 } };
    EXPECT_EQ(spacing(all), 0.0);
}

TEST(Spacing, SingletonRejected)
{
    EXPECT_THROW(spacing({ { 1, 1 } }), std::invalid_argument);
}

TEST(SpacingProperty, PermutationAndTranslationInvariant)
{
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto f = random_front(rng, 12, 4);
        double sp = spacing(f);
        auto g = f;
        std::reverse(g.begin(), g.end());
        std::swap(g[0], g[5]);
        EXPECT_NEAR(spacing(g), sp, 1e-12);
        for (auto& p : g) {
            for (auto& v : p) {
                v += 2.5;
            }
        }
        EXPECT_NEAR(spacing(g), sp, 1e-12);
    }
}

TEST(ReferenceFront, NonDominatedInputIsItself)
{
    Front f { { 0, 3 }, { 1, 2 }, { 3, 0 } };
    std::vector<Front> in { f };
    EXPECT_EQ(build_reference_front(in), f);
}

TEST(ReferenceFront, DominatingFrontWins)
{
    Front good { { 0, 3 }, { 1, 2 }, { 3, 0 } };
    Front bad { { 1, 4 }, { 2, 3 }, { 4, 1 } };
    std::vector<Front> in { bad, good };
    EXPECT_EQ(build_reference_front(in), good);
}

TEST(ReferenceFront, MatchesBruteForceFilter)
{
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Front> in;
        for (int k = 0; k < 3; ++k) {
            auto f = random_front(rng, 15, 3);
            for (auto& p : f) {
                for (auto& v : p) {
                    v = std::floor(v);
                }
            }
            in.push_back(f);
        }
        Front all;
        for (auto const& f : in) {
            all.insert(all.end(), f.begin(), f.end());
        }
        Front expected;
        for (std::size_t i = 0; i < all.size(); ++i) {
            bool beaten = false;
            for (std::size_t j = 0; j < all.size(); ++j) {
                beaten = beaten || oracle::pareto_less(all[j], all[i]);
            }
            if (!beaten) {
                expected.push_back(all[i]);
            }
        }
        EXPECT_EQ(build_reference_front(in), expected);
    }
}

TEST(Summary, BestAverageWorst)
{
    std::vector<double> v { 3.0, 1.0, 2.0 };
    auto s = summarize(v);
    EXPECT_EQ(s.best, 1.0);
    EXPECT_EQ(s.average, 2.0);
    EXPECT_EQ(s.worst, 3.0);
}

TEST(KneaQuality, AnalyticFrontAcrossSeeds)
{
    analytic::Schaffer problem;
    auto reference = analytic::true_front(4001);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        AlgorithmConfig cfg;
        cfg.population = 50;
        cfg.generations = 100;
        cfg.seed = seed;
        auto res = run_knea(problem, cfg);
        Front obtained;
        for (auto i : res.archive) {
            obtained.push_back(res.population[i].fit().objectives);
        }
        for (auto const& p : obtained) {
            EXPECT_LT(analytic::distance_to_front(p), 0.05) << seed;
        }
        EXPECT_LT(generational_distance(obtained, reference, true), 0.02) << seed;
        EXPECT_GT(spacing(obtained), 0.0);
    }
}

// With room outside the Pareto set, points just beyond its ends can survive as
// non-dominated once the sparse extremes are cut, so only closeness is checked.
TEST(KneaQuality, WideSearchBoxStillConverges)
{
    analytic::Schaffer problem(-4.0, 6.0);
    auto reference = analytic::true_front(4001);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        AlgorithmConfig cfg;
        cfg.population = 50;
        cfg.generations = 100;
        cfg.seed = seed;
        auto res = run_knea(problem, cfg);
        Front obtained;
        for (auto i : res.archive) {
            obtained.push_back(res.population[i].fit().objectives);
            double x = res.population[i].controls.continuous[0];
            EXPECT_GT(x, -0.05) << seed;
            EXPECT_LT(x, 2.05) << seed;
        }
        EXPECT_LT(generational_distance(obtained, reference, true), 0.02) << seed;
    }
}
