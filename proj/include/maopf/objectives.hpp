#ifndef MAOPF_OBJECTIVES_HPP
#define MAOPF_OBJECTIVES_HPP

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "controls.hpp"
#include "moea.hpp"
#include "power_flow.hpp"

namespace maopf {

inline constexpr std::size_t objective_count = 4;
inline constexpr std::array<char const*, objective_count> objective_names { "f1_cost", "f2_voltage_deviation",
    "f3_l_index", "f4_emission" };

// Assigned to the violation total, and to every objective, when the power flow fails.
inline constexpr double non_converged_penalty = 1e6;

struct ObjectiveVector {
    double cost = 0.0;              // $/h
    double voltage_deviation = 0.0; // p.u.^2
    double l_index = 0.0;
    double emission = 0.0;          // lb/h

    [[nodiscard]] auto as_array() const -> std::array<double, objective_count>
    {
        return { cost, voltage_deviation, l_index, emission };
    }
    [[nodiscard]] auto as_vector() const -> std::vector<double>
    {
        auto a = as_array();
        return { a.begin(), a.end() };
    }
};

struct ConstraintReport {
    double gen_p = 0.0;
    double gen_q = 0.0;
    double bus_voltage = 0.0;
    double branch_loading = 0.0;
    double total = 0.0;
    bool converged = true;
    bool feasible = true;
};

// p_gen holds every generator's output in p.u., slack included.
inline auto eval_cost(PowerNetwork const& net, std::span<const double> p_gen) -> double
{
    double sum = 0.0;
    for (std::size_t g = 0; g < p_gen.size(); ++g) {
        sum += net.generators()[g].cost(p_gen[g] * net.base_mva());
    }
    return sum;
}

inline auto eval_emissions(PowerNetwork const& net, std::span<const double> p_gen) -> double
{
    double sum = 0.0;
    for (std::size_t g = 0; g < p_gen.size(); ++g) {
        sum += net.generators()[g].emission(p_gen[g] * net.base_mva());
    }
    return sum;
}

inline auto eval_voltage_deviation(PowerNetwork const& net, OperatingPoint const& pt) -> double
{
    double sum = 0.0;
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
        double d = pt.vm[i] - net.buses()[i].u_ref;
        sum += d * d;
    }
    return sum;
}

namespace detail {
    // Normalized excess beyond [lo, hi]; excesses within tol count as satisfied.
    inline auto bound_excess(double q, double lo, double hi, double tol) -> double
    {
        double excess = std::max({ 0.0, q - hi, lo - q });
        if (excess <= tol) {
            return 0.0;
        }
        double span = hi - lo;
        return excess / (span > 0.0 ? span : 1.0);
    }
} // namespace detail

inline auto non_converged_report() -> ConstraintReport
{
    ConstraintReport r;
    r.total = non_converged_penalty;
    r.converged = false;
    r.feasible = false;
    return r;
}

// Dependent quantities only: slack P, every generator's Q (plus any excess clipped by a
// PV->PQ switch), load-bus voltages and branch loading on [0, s_max].
inline auto eval_constraints(PowerNetwork const& net, OperatingPoint const& pt, double tol = 1e-6) -> ConstraintReport
{
    ConstraintReport r;
    auto gens = net.generators();
    auto const slack = net.slack_generator();
    r.gen_p = detail::bound_excess(pt.p_gen[slack], gens[slack].p_min, gens[slack].p_max, tol);
    for (std::size_t g = 0; g < gens.size(); ++g) {
        double span = gens[g].q_max - gens[g].q_min;
        r.gen_q += detail::bound_excess(pt.q_gen[g], gens[g].q_min, gens[g].q_max, tol);
        if (!pt.q_excess.empty() && pt.q_excess[g] > tol) {
            r.gen_q += pt.q_excess[g] / (span > 0.0 ? span : 1.0);
        }
    }
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
        auto const& b = net.buses()[i];
        if (b.kind == BusKind::Load) {
            r.bus_voltage += detail::bound_excess(pt.vm[i], b.v_min, b.v_max, tol);
        }
    }
    for (std::size_t k = 0; k < net.branches().size(); ++k) {
        r.branch_loading += detail::bound_excess(pt.branch_flow[k], 0.0, net.branches()[k].s_max, tol);
    }
    r.total = r.gen_p + r.gen_q + r.bus_voltage + r.branch_loading;
    r.feasible = r.total == 0.0;
    return r;
}

struct Evaluation {
    ObjectiveVector objectives;
    ConstraintReport constraints;
    PowerFlowResult power_flow;
    ControlValues controls;
    LIndexResult l_index;

    [[nodiscard]] auto fitness() const -> Fitness
    {
        return { objectives.as_vector(), constraints.total, constraints.feasible };
    }
};

namespace detail {
    // A null factor means Y_LL was singular; scored like a failed power flow.
    inline auto evaluate_with(PowerNetwork const& net, AdmittanceMatrix const& adm, LIndexFactor const* factor,
        ControlValues controls, PowerFlowOptions const& opts) -> Evaluation
    {
        Evaluation e;
        e.power_flow = solve_power_flow(net, adm, controls, opts);
        e.controls = std::move(controls);
        if (!e.power_flow.converged || factor == nullptr) {
            e.constraints = non_converged_report();
            e.objectives = { non_converged_penalty, non_converged_penalty, non_converged_penalty, non_converged_penalty };
            return e;
        }
        auto const& pt = *e.power_flow.point;
        e.l_index = compute_l_index(net, *factor, pt);
        e.objectives.cost = eval_cost(net, pt.p_gen);
        e.objectives.voltage_deviation = eval_voltage_deviation(net, pt);
        e.objectives.l_index = e.l_index.max;
        e.objectives.emission = eval_emissions(net, pt.p_gen);
        e.constraints = eval_constraints(net, pt, opts.tolerance);
        return e;
    }
} // namespace detail

// Power flow, branch flows, L-index and the four objectives for one control vector.
// Failures land in the constraint report; nothing is thrown for numerical trouble.
inline auto evaluate_individual(PowerNetwork const& net, ControlVector const& x, PowerFlowOptions const& opts = {})
    -> Evaluation
{
    auto controls = decode_controls(net, x);
    auto adm = build_admittance(net, controls.taps, controls.shunts);
    std::optional<LIndexFactor> factor;
    try {
        factor = l_index_factor(net, adm);
    } catch (SingularLoadBlock const&) {
    }
    return detail::evaluate_with(net, adm, factor ? &*factor : nullptr, std::move(controls), opts);
}

// The OPF as an optimization problem. Thread-safe; Y and F are cached per discrete
// assignment.
class OpfProblem {
public:
    explicit OpfProblem(PowerNetwork net, PowerFlowOptions opts = {}, std::size_t cache_capacity = 512)
        : net_(std::move(net))
        , opts_(opts)
        , layout_(opf_layout(net_))
        , capacity_(cache_capacity)
    {
    }

    [[nodiscard]] auto network() const -> PowerNetwork const& { return net_; }
    [[nodiscard]] auto layout() const -> ControlLayout const& { return layout_; }
    [[nodiscard]] auto objective_count() const -> std::size_t { return maopf::objective_count; }
    [[nodiscard]] auto options() const -> PowerFlowOptions const& { return opts_; }

    [[nodiscard]] auto evaluate_full(ControlVector const& x) const -> Evaluation
    {
        auto controls = decode_controls(net_, x);
        auto entry = factors(x.discrete, controls);
        return detail::evaluate_with(
            net_, entry->adm, entry->factor ? &*entry->factor : nullptr, std::move(controls), opts_);
    }

    [[nodiscard]] auto evaluate(ControlVector const& x) const -> Fitness { return evaluate_full(x).fitness(); }

private:
    struct Entry {
        AdmittanceMatrix adm;
        std::optional<LIndexFactor> factor;
    };

    auto factors(std::vector<int> const& key, ControlValues const& controls) const -> std::shared_ptr<const Entry>
    {
        {
            std::shared_lock lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                return it->second;
            }
        }
        auto adm = build_admittance(net_, controls.taps, controls.shunts);
        std::optional<LIndexFactor> factor;
        try {
            factor = l_index_factor(net_, adm);
        } catch (SingularLoadBlock const&) {
        }
        auto entry = std::make_shared<const Entry>(Entry { std::move(adm), std::move(factor) });
        std::unique_lock lock(mutex_);
        if (cache_.size() >= capacity_) {
            cache_.clear();
        }
        cache_.emplace(key, entry);
        return entry;
    }

    PowerNetwork net_;
    PowerFlowOptions opts_;
    ControlLayout layout_;
    std::size_t capacity_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::vector<int>, std::shared_ptr<const Entry>> cache_;
};

} // namespace maopf

#endif
