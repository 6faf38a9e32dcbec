#ifndef MAOPF_METRICS_HPP
#define MAOPF_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace maopf {

using Front = std::vector<std::vector<double>>;

namespace detail {
    inline auto distance(std::vector<double> const& a, std::vector<double> const& b) -> double
    {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            s += (a[j] - b[j]) * (a[j] - b[j]);
        }
        return std::sqrt(s);
    }

    inline void check_dimensions(Front const& f, std::size_t m)
    {
        for (auto const& p : f) {
            if (p.size() != m) {
                throw std::invalid_argument("objective vectors differ in dimension");
            }
        }
    }
} // namespace detail

struct ColumnScale {
    std::vector<double> lo;
    std::vector<double> span;

    [[nodiscard]] auto apply(Front const& f) const -> Front
    {
        Front out = f;
        for (auto& p : out) {
            for (std::size_t j = 0; j < p.size(); ++j) {
                p[j] = span[j] > 0.0 ? (p[j] - lo[j]) / span[j] : 0.0;
            }
        }
        return out;
    }
};

// Min-max over the union of the given fronts.
inline auto shared_scale(std::span<const Front* const> fronts) -> ColumnScale
{
    ColumnScale s;
    for (auto const* f : fronts) {
        for (auto const& p : *f) {
            if (s.lo.empty()) {
                s.lo = p;
                s.span = p;
            }
            for (std::size_t j = 0; j < p.size(); ++j) {
                s.lo[j] = std::min(s.lo[j], p[j]);
                s.span[j] = std::max(s.span[j], p[j]);
            }
        }
    }
    for (std::size_t j = 0; j < s.lo.size(); ++j) {
        s.span[j] -= s.lo[j];
    }
    return s;
}

// sqrt(sum of squared nearest-reference distances) / |obtained|.
inline auto generational_distance(Front const& obtained, Front const& reference, bool raw = false) -> double
{
    if (reference.empty()) {
        throw std::invalid_argument("generational distance needs a nonempty reference front");
    }
    if (obtained.empty()) {
        throw std::invalid_argument("generational distance needs a nonempty front");
    }
    auto m = reference.front().size();
    detail::check_dimensions(obtained, m);
    detail::check_dimensions(reference, m);
    Front a = obtained;
    Front b = reference;
    if (!raw) {
        Front const* both[] = { &obtained, &reference };
        auto s = shared_scale(both);
        a = s.apply(obtained);
        b = s.apply(reference);
    }
    double sum = 0.0;
    for (auto const& p : a) {
        double d = std::numeric_limits<double>::infinity();
        for (auto const& q : b) {
            d = std::min(d, detail::distance(p, q));
        }
        sum += d * d;
    }
    return std::sqrt(sum) / static_cast<double>(a.size());
}

// Sample standard deviation of nearest-neighbour distances within the front.
inline auto spacing(Front const& front) -> double
{
    if (front.size() < 2) {
        throw std::invalid_argument("spacing needs at least two points");
    }
    detail::check_dimensions(front, front.front().size());
    std::vector<double> d(front.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < front.size(); ++i) {
        for (std::size_t j = 0; j < front.size(); ++j) {
            if (i != j) {
                d[i] = std::min(d[i], detail::distance(front[i], front[j]));
            }
        }
    }
    double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) {
        ss += (mean - x) * (mean - x);
    }
    return std::sqrt(ss / static_cast<double>(d.size() - 1));
}

// Non-dominated subset of the union of the inputs, in input order.
inline auto build_reference_front(std::span<const Front> fronts) -> Front
{
    Front all;
    for (auto const& f : fronts) {
        all.insert(all.end(), f.begin(), f.end());
    }
    if (!all.empty()) {
        detail::check_dimensions(all, all.front().size());
    }
    auto dominated_by = [](std::vector<double> const& a, std::vector<double> const& b) {
        bool strict = false;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (b[j] > a[j]) {
                return false;
            }
            strict = strict || b[j] < a[j];
        }
        return strict;
    };
    Front out;
    for (auto const& p : all) {
        bool dominated = std::any_of(all.begin(), all.end(), [&](auto const& q) { return dominated_by(p, q); });
        if (!dominated) {
            out.push_back(p);
        }
    }
    return out;
}

struct Summary {
    double best = 0.0;
    double average = 0.0;
    double worst = 0.0;
};

// Both indicators are smaller-is-better.
inline auto summarize(std::span<const double> values) -> Summary
{
    if (values.empty()) {
        throw std::invalid_argument("nothing to summarize");
    }
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return { *lo, std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()), *hi };
}

} // namespace maopf

#endif
