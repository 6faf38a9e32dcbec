#ifndef MAOPF_DECISION_HPP
#define MAOPF_DECISION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "encoding.hpp"

namespace maopf {

using ObjectiveRows = std::vector<std::vector<double>>;

// Per-column min-max scaling onto [0, 1]; a constant column maps to zeros.
inline auto normalize_objectives(ObjectiveRows const& rows) -> Eigen::MatrixXd
{
    if (rows.empty()) {
        throw std::invalid_argument("cannot normalize an empty archive");
    }
    auto n = static_cast<Eigen::Index>(rows.size());
    auto m = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd x(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
            throw std::invalid_argument("objective rows differ in length");
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        double lo = x.col(j).minCoeff();
        double span = x.col(j).maxCoeff() - lo;
        if (span > 0.0) {
            x.col(j) = (x.col(j).array() - lo) / span;
        } else {
            x.col(j).setZero();
        }
    }
    return x;
}

struct FcmOptions {
    std::size_t clusters = 4;
    double fuzzifier = 2.0;
    double tolerance = 1e-6;
    std::size_t max_iterations = 300;
    std::uint64_t seed = 1;
};

struct FcmResult {
    Eigen::MatrixXd centers;     // clusters x objectives
    Eigen::MatrixXd memberships; // points x clusters
    std::vector<std::size_t> hard_labels;
    double j_final = 0.0;
    std::size_t iterations = 0;
    std::vector<double> j_history; // loss after each full update
};

namespace detail {
    inline auto fcm_loss(Eigen::MatrixXd const& x, Eigen::MatrixXd const& centers, Eigen::MatrixXd const& u, double m)
        -> double
    {
        double j = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index c = 0; c < centers.rows(); ++c) {
                j += std::pow(u(i, c), m) * (x.row(i) - centers.row(c)).squaredNorm();
            }
        }
        return j;
    }

    inline void fcm_memberships(Eigen::MatrixXd const& x, Eigen::MatrixXd const& centers, double m, Eigen::MatrixXd& u)
    {
        auto nc = centers.rows();
        double expo = 2.0 / (m - 1.0);
        Eigen::VectorXd d(nc);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index c = 0; c < nc; ++c) {
                d(c) = (x.row(i) - centers.row(c)).norm();
            }
            auto coincident = (d.array() <= 1e-14).count();
            if (coincident > 0) {
                for (Eigen::Index c = 0; c < nc; ++c) {
                    u(i, c) = d(c) <= 1e-14 ? 1.0 / static_cast<double>(coincident) : 0.0;
                }
                continue;
            }
            // Scaled by the nearest distance so the powers stay finite.
            double dmin = d.minCoeff();
            double sum = 0.0;
            for (Eigen::Index c = 0; c < nc; ++c) {
                u(i, c) = std::pow(dmin / d(c), expo);
                sum += u(i, c);
            }
            u.row(i) /= sum;
        }
    }

    inline void fcm_centers(Eigen::MatrixXd const& x, Eigen::MatrixXd const& u, double m, Eigen::MatrixXd& centers)
    {
        for (Eigen::Index c = 0; c < centers.rows(); ++c) {
            Eigen::VectorXd w = u.col(c).array().pow(m);
            double total = w.sum();
            if (total > 0.0) {
                centers.row(c) = (w.transpose() * x) / total;
            }
        }
    }
} // namespace detail

// Fuzzy c-means with centers seeded from distinct data rows.
inline auto fcm_cluster(Eigen::MatrixXd const& points, FcmOptions const& opts) -> FcmResult
{
    auto const n = static_cast<std::size_t>(points.rows());
    auto const nc = opts.clusters;
    if (nc == 0) {
        throw std::invalid_argument("cluster count must be positive");
    }
    if (!(opts.fuzzifier > 1.0)) {
        throw std::invalid_argument("fuzzifier must exceed 1");
    }
    std::vector<std::size_t> distinct;
    for (std::size_t i = 0; i < n; ++i) {
        bool seen = std::any_of(distinct.begin(), distinct.end(), [&](std::size_t j) {
            return points.row(static_cast<Eigen::Index>(i)) == points.row(static_cast<Eigen::Index>(j));
        });
        if (!seen) {
            distinct.push_back(i);
        }
    }
    if (distinct.size() < nc) {
        throw std::invalid_argument("need at least " + std::to_string(nc) + " distinct points, got "
            + std::to_string(distinct.size()));
    }

    Rng rng(opts.seed);
    for (std::size_t i = 0; i < nc; ++i) {
        auto j = i + uniform_index(rng, distinct.size() - i);
        std::swap(distinct[i], distinct[j]);
    }
    FcmResult r;
    r.centers.resize(static_cast<Eigen::Index>(nc), points.cols());
    for (std::size_t c = 0; c < nc; ++c) {
        r.centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(distinct[c]));
    }
    r.memberships.resize(points.rows(), static_cast<Eigen::Index>(nc));

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        detail::fcm_memberships(points, r.centers, opts.fuzzifier, r.memberships);
        detail::fcm_centers(points, r.memberships, opts.fuzzifier, r.centers);
        double j = detail::fcm_loss(points, r.centers, r.memberships, opts.fuzzifier);
        r.j_history.push_back(j);
        r.iterations = it + 1;
        if (std::abs(prev - j) < opts.tolerance) {
            break;
        }
        prev = j;
    }
    r.j_final = r.j_history.back();
    r.hard_labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        r.memberships.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
        r.hard_labels[i] = static_cast<std::size_t>(best);
    }
    return r;
}

inline constexpr double grey_resolution = 0.5;

// Deng's coefficient against one reference row, with global extreme differences.
inline auto grey_relational_coefficients(Eigen::MatrixXd const& points, Eigen::RowVectorXd const& reference)
    -> Eigen::MatrixXd
{
    Eigen::MatrixXd delta = (points.rowwise() - reference).cwiseAbs();
    if (delta.size() == 0) {
        return delta;
    }
    double dmin = delta.minCoeff();
    double dmax = delta.maxCoeff();
    if (dmax == 0.0) {
        return Eigen::MatrixXd::Ones(points.rows(), points.cols());
    }
    double rd = grey_resolution * dmax;
    return ((dmin + rd) / (delta.array() + rd)).matrix();
}

inline void check_weights(Eigen::VectorXd const& w)
{
    if ((w.array() < 0.0).any() || !w.allFinite()) {
        throw std::invalid_argument("weights must be finite and nonnegative");
    }
    if (w.sum() == 0.0) {
        throw std::invalid_argument("weights must not all be zero");
    }
    if (std::abs(w.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("weights must sum to 1");
    }
}

inline auto grp_projection(Eigen::MatrixXd const& gamma, Eigen::VectorXd const& weights) -> Eigen::VectorXd
{
    check_weights(weights);
    Eigen::VectorXd w2 = weights.array().square();
    return gamma * w2 / weights.norm();
}

// Projection of an all-ones coefficient row.
inline auto ideal_projection(Eigen::VectorXd const& weights) -> double
{
    check_weights(weights);
    return weights.squaredNorm() / weights.norm();
}

inline auto priority_membership(Eigen::VectorXd const& v_plus, Eigen::VectorXd const& v_minus, double v0)
    -> Eigen::VectorXd
{
    Eigen::VectorXd pm(v_plus.size());
    for (Eigen::Index l = 0; l < pm.size(); ++l) {
        double a = (v0 - v_minus(l)) * (v0 - v_minus(l));
        double b = (v0 - v_plus(l)) * (v0 - v_plus(l));
        pm(l) = a + b > 0.0 ? a / (a + b) : 0.5;
    }
    return pm;
}

struct GrpResult {
    Eigen::MatrixXd gamma_plus;
    Eigen::MatrixXd gamma_minus;
    Eigen::VectorXd v_plus;
    Eigen::VectorXd v_minus;
    double v0 = 0.0;
    Eigen::VectorXd pm;
    Eigen::VectorXd weights;
};

// Positive ideal: column minima. Negative ideal: column maxima.
inline auto grey_relational_projection(Eigen::MatrixXd const& points, Eigen::VectorXd const& weights) -> GrpResult
{
    if (weights.size() != points.cols()) {
        throw std::invalid_argument("expected " + std::to_string(points.cols()) + " weights");
    }
    GrpResult g;
    g.weights = weights;
    g.gamma_plus = grey_relational_coefficients(points, points.colwise().minCoeff());
    g.gamma_minus = grey_relational_coefficients(points, points.colwise().maxCoeff());
    g.v_plus = grp_projection(g.gamma_plus, weights);
    g.v_minus = grp_projection(g.gamma_minus, weights);
    g.v0 = ideal_projection(weights);
    g.pm = priority_membership(g.v_plus, g.v_minus, g.v0);
    return g;
}

// Assigns objectives to clusters so the summed center coordinates are smallest.
// Result[c] is the objective for cluster c, if any. Ties go to the first assignment
// in lexicographic order.
inline auto label_clusters(Eigen::MatrixXd const& centers, std::span<const std::size_t> clusters)
    -> std::vector<std::optional<std::size_t>>
{
    auto const m = static_cast<std::size_t>(centers.cols());
    std::vector<std::optional<std::size_t>> best(static_cast<std::size_t>(centers.rows()));
    std::vector<std::optional<std::size_t>> cur(best.size());
    std::vector<char> used(m, 0);
    double best_cost = std::numeric_limits<double>::infinity();
    auto const pairs = std::min(clusters.size(), m);

    auto search = [&](auto& self, std::size_t pos, std::size_t assigned, double cost) -> void {
        if (assigned == pairs) {
            if (cost < best_cost) {
                best_cost = cost;
                best = cur;
            }
            return;
        }
        if (pos == clusters.size() || clusters.size() - pos < pairs - assigned) {
            return;
        }
        auto c = clusters[pos];
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) {
                continue;
            }
            used[j] = 1;
            cur[c] = j;
            self(self, pos + 1, assigned + 1, cost + centers(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)));
            used[j] = 0;
            cur[c].reset();
        }
        if (clusters.size() - pos > pairs - assigned) {
            self(self, pos + 1, assigned, cost);
        }
    };
    search(search, 0, 0, 0.0);
    return best;
}

struct ClusterChoice {
    std::size_t cluster = 0;
    std::optional<std::size_t> prefers; // objective index
    std::vector<std::size_t> members;
    std::size_t bcs = 0;
    double pm = 0.0;
};

struct DecisionReport {
    std::vector<ClusterChoice> choices; // ordered by preferred objective, unlabeled last
    std::vector<std::string> notes;
    Eigen::VectorXd weights;
    FcmResult fcm;
    GrpResult grp;
};

// Highest PM per nonempty hard cluster; ties by lowest first objective, then index.
inline auto select_bcs(ObjectiveRows const& raw, FcmResult const& fcm, GrpResult const& grp) -> DecisionReport
{
    DecisionReport rep;
    rep.weights = grp.weights;
    auto nc = static_cast<std::size_t>(fcm.centers.rows());
    std::vector<std::vector<std::size_t>> members(nc);
    for (std::size_t i = 0; i < fcm.hard_labels.size(); ++i) {
        members[fcm.hard_labels[i]].push_back(i);
    }
    std::vector<std::size_t> nonempty;
    for (std::size_t c = 0; c < nc; ++c) {
        if (members[c].empty()) {
            rep.notes.push_back("cluster " + std::to_string(c) + " is empty and has no BCS");
        } else {
            nonempty.push_back(c);
        }
    }
    auto labels = label_clusters(fcm.centers, nonempty);
    for (auto c : nonempty) {
        ClusterChoice ch;
        ch.cluster = c;
        ch.prefers = labels[c];
        ch.members = members[c];
        ch.bcs = ch.members.front();
        for (auto i : ch.members) {
            double pi = grp.pm(static_cast<Eigen::Index>(i));
            double pb = grp.pm(static_cast<Eigen::Index>(ch.bcs));
            if (pi > pb || (pi == pb && raw[i][0] < raw[ch.bcs][0])) {
                ch.bcs = i;
            }
        }
        ch.pm = grp.pm(static_cast<Eigen::Index>(ch.bcs));
        rep.choices.push_back(std::move(ch));
    }
    std::stable_sort(rep.choices.begin(), rep.choices.end(), [](auto const& a, auto const& b) {
        auto ka = a.prefers.value_or(std::numeric_limits<std::size_t>::max());
        auto kb = b.prefers.value_or(std::numeric_limits<std::size_t>::max());
        return ka < kb;
    });
    return rep;
}

struct DecisionOptions {
    FcmOptions fcm;
    std::vector<double> weights; // empty: equal weights
};

// Normalize, cluster, rank and pick one compromise per cluster.
inline auto decide(ObjectiveRows const& raw, DecisionOptions const& opts = {}) -> DecisionReport
{
    auto points = normalize_objectives(raw);
    if (static_cast<std::size_t>(points.rows()) < opts.fcm.clusters) {
        throw std::invalid_argument("archive holds " + std::to_string(points.rows()) + " solutions, fewer than the "
            + std::to_string(opts.fcm.clusters) + " clusters requested");
    }
    Eigen::VectorXd w;
    if (opts.weights.empty()) {
        w = Eigen::VectorXd::Constant(points.cols(), 1.0 / static_cast<double>(points.cols()));
    } else {
        w = Eigen::Map<const Eigen::VectorXd>(opts.weights.data(), static_cast<Eigen::Index>(opts.weights.size()));
    }
    auto fcm = fcm_cluster(points, opts.fcm);
    auto grp = grey_relational_projection(points, w);
    auto rep = select_bcs(raw, fcm, grp);
    rep.fcm = std::move(fcm);
    rep.grp = std::move(grp);
    return rep;
}

} // namespace maopf

#endif
