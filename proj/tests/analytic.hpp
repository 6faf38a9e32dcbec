#ifndef MAOPF_TESTS_ANALYTIC_HPP
#define MAOPF_TESTS_ANALYTIC_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <maopf/moea.hpp>

namespace analytic {

// min (x^2, (x-2)^2) over x in [lo, hi]. The Pareto set is [0, 2] whenever the box contains it.
struct Schaffer {
    maopf::ControlLayout layout_;

    explicit Schaffer(double lo = 0.0, double hi = 2.0)
        : layout_ { { { lo, hi } }, {} }
    {
    }

    [[nodiscard]] auto layout() const -> maopf::ControlLayout const& { return layout_; }
    [[nodiscard]] auto objective_count() const -> std::size_t { return 2; }
    [[nodiscard]] auto evaluate(maopf::ControlVector const& x) const -> maopf::Fitness
    {
        double v = x.continuous[0];
        return { { v * v, (v - 2.0) * (v - 2.0) }, 0.0, true };
    }
};

inline auto true_front(std::size_t samples) -> std::vector<std::vector<double>>
{
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < samples; ++i) {
        double x = 2.0 * static_cast<double>(i) / static_cast<double>(samples - 1);
        out.push_back({ x * x, (x - 2.0) * (x - 2.0) });
    }
    return out;
}

// Distance in objective space from p to the curve {(x^2, (x-2)^2) : x in [0, 2]}.
inline auto distance_to_front(std::vector<double> const& p) -> double
{
    auto d = [&](double x) { return std::hypot(x * x - p[0], (x - 2.0) * (x - 2.0) - p[1]); };
    double best = std::numeric_limits<double>::infinity();
    double best_x = 0.0;
    constexpr int n = 20000;
    for (int i = 0; i <= n; ++i) {
        double x = 2.0 * i / n;
        if (d(x) < best) {
            best = d(x);
            best_x = x;
        }
    }
    double lo = std::max(0.0, best_x - 2.0 / n);
    double hi = std::min(2.0, best_x + 2.0 / n);
    for (int it = 0; it < 100; ++it) {
        double a = lo + (hi - lo) / 3.0;
        double b = hi - (hi - lo) / 3.0;
        if (d(a) < d(b)) {
            hi = b;
        } else {
            lo = a;
        }
    }
    return std::min(best, d(0.5 * (lo + hi)));
}

} // namespace analytic

#endif
