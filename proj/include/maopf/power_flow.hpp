#ifndef MAOPF_POWER_FLOW_HPP
#define MAOPF_POWER_FLOW_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "network.hpp"

namespace maopf {

// Decoded control settings, all per-unit.
struct ControlValues {
    std::vector<double> p_gen;  // non-slack generators, in generator order
    std::vector<double> v_gen;  // every generator
    std::vector<double> taps;   // adjustable branches, in tap_branches() order
    std::vector<double> shunts; // compensator susceptance, in shunt order
};

// Mid-range dispatch, generator voltages at the bus reference (clamped), taps and
// compensators at the grid values nearest 1.0 and 0.
inline auto nominal_controls(PowerNetwork const& net) -> ControlValues
{
    ControlValues c;
    for (std::size_t g = 0; g < net.generators().size(); ++g) {
        auto const& gen = net.generators()[g];
        auto const& bus = net.buses()[net.bus_index(gen.bus)];
        if (g != net.slack_generator()) {
            c.p_gen.push_back(0.5 * (gen.p_min + gen.p_max));
        }
        c.v_gen.push_back(std::clamp(bus.u_ref, bus.v_min, bus.v_max));
    }
    for (auto k : net.tap_branches()) {
        auto grid = net.branches()[k].tap->grid();
        c.taps.push_back(grid.value(grid.nearest_index(1.0)));
    }
    for (auto const& sh : net.shunts()) {
        auto grid = sh.grid();
        c.shunts.push_back(grid.value(grid.nearest_index(0.0)));
    }
    return c;
}

struct PowerFlowOptions {
    double tolerance = 1e-6;
    int max_iterations = 30;
    bool enforce_q_limits = true;
};

struct OperatingPoint {
    std::vector<double> vm; // per bus
    std::vector<double> va; // per bus, radians, slack at 0
    std::vector<double> p_gen; // per generator, slack included
    std::vector<double> q_gen; // per generator
    // Reactive demand beyond the violated limit at the moment a PV bus was switched to PQ.
    std::vector<double> q_excess;
    std::vector<double> branch_flow; // per branch, larger end magnitude
    std::vector<bool> switched_to_pq; // per bus

    [[nodiscard]] auto voltage(std::size_t i) const -> Complex { return std::polar(vm[i], va[i]); }
};

struct PowerFlowResult {
    bool converged = false;
    bool singular = false;
    int iterations = 0;
    double max_mismatch = std::numeric_limits<double>::infinity();
    std::optional<OperatingPoint> point;
};

// Apparent power at both ends of every branch; the larger magnitude is kept.
inline auto compute_branch_flows(PowerNetwork const& net, std::span<const double> taps, std::span<const double> vm,
    std::span<const double> va) -> std::vector<double>
{
    std::vector<double> flows;
    flows.reserve(net.branches().size());
    std::size_t next_tap = 0;
    for (auto const& br : net.branches()) {
        double t = br.ratio;
        if (br.tap) {
            t = taps.empty() ? 1.0 : taps[next_tap];
            ++next_tap;
        }
        auto f = net.bus_index(br.from);
        auto k = net.bus_index(br.to);
        Complex vf = std::polar(vm[f], va[f]);
        Complex vt = std::polar(vm[k], va[k]);
        Complex ys = 1.0 / Complex(br.r, br.x);
        Complex ych(0.0, br.b_sh / 2.0);
        Complex i_from = (ys + ych) / (t * t) * vf - ys / t * vt;
        Complex i_to = -ys / t * vf + (ys + ych) * vt;
        flows.push_back(std::max(std::abs(vf * std::conj(i_from)), std::abs(vt * std::conj(i_to))));
    }
    return flows;
}

inline auto compute_branch_flows(PowerNetwork const& net, std::span<const double> taps, OperatingPoint const& point)
    -> std::vector<double>
{
    return compute_branch_flows(net, taps, point.vm, point.va);
}

// Polar Newton-Raphson with PV->PQ switching on generator reactive limits.
// Non-convergence and singular Jacobians are reported in the result, never thrown.
inline auto solve_power_flow(PowerNetwork const& net, AdmittanceMatrix const& adm, ControlValues const& ctl,
    PowerFlowOptions const& opts = {}) -> PowerFlowResult
{
    auto const n = net.bus_count();
    auto const gens = net.generators();
    if (ctl.v_gen.size() != gens.size() || ctl.p_gen.size() + 1 != gens.size()) {
        throw std::invalid_argument("control vector does not match the network generators");
    }

    std::vector<BusKind> kind(n);
    std::vector<double> vm(n, 1.0);
    std::vector<double> va(n, 0.0);
    std::vector<double> p_spec(n, 0.0);
    std::vector<double> q_spec(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto const& b = net.buses()[i];
        kind[i] = b.kind;
        p_spec[i] = -b.p_load;
        q_spec[i] = -b.q_load;
    }
    {
        std::size_t next_p = 0;
        for (std::size_t g = 0; g < gens.size(); ++g) {
            auto i = net.bus_index(gens[g].bus);
            vm[i] = ctl.v_gen[g];
            if (g != net.slack_generator()) {
                p_spec[i] += ctl.p_gen[next_p++];
            }
        }
    }

    auto const slack = net.slack_bus();
    std::vector<double> q_excess(gens.size(), 0.0);
    std::vector<bool> switched(n, false);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
    Eigen::VectorXcd s(static_cast<Eigen::Index>(n));

    auto compute_injections = [&] {
        for (std::size_t i = 0; i < n; ++i) {
            v[static_cast<Eigen::Index>(i)] = std::polar(vm[i], va[i]);
        }
        Eigen::VectorXcd current = adm.y * v;
        s = v.cwiseProduct(current.conjugate());
        return current;
    };

    PowerFlowResult result;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    std::vector<Eigen::Triplet<double>> triplets;

    for (;;) {
        // equation/unknown layout for the current bus kinds
        std::vector<Eigen::Index> row_p(n, -1);
        std::vector<Eigen::Index> row_q(n, -1);
        Eigen::Index dim = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i != slack) {
                row_p[i] = dim++;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (kind[i] == BusKind::Load) {
                row_q[i] = dim++;
            }
        }

        bool converged = false;
        Eigen::VectorXd mismatch(dim);
        for (;;) {
            Eigen::VectorXcd current = compute_injections();
            for (std::size_t i = 0; i < n; ++i) {
                if (row_p[i] >= 0) {
                    mismatch[row_p[i]] = s[static_cast<Eigen::Index>(i)].real() - p_spec[i];
                }
                if (row_q[i] >= 0) {
                    mismatch[row_q[i]] = s[static_cast<Eigen::Index>(i)].imag() - q_spec[i];
                }
            }
            double worst = dim == 0 ? 0.0 : mismatch.cwiseAbs().maxCoeff();
            result.max_mismatch = worst;
            if (!std::isfinite(worst)) {
                return result;
            }
            if (worst <= opts.tolerance) {
                converged = true;
                break;
            }
            if (result.iterations >= opts.max_iterations || worst > 1e8) {
                return result;
            }

            // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
            triplets.clear();
            for (Eigen::Index col = 0; col < adm.y.outerSize(); ++col) {
                auto k = static_cast<std::size_t>(col);
                Complex vk = v[col];
                Complex vk_unit = vk / vm[k];
                for (SparseComplex::InnerIterator it(adm.y, col); it; ++it) {
                    auto i = static_cast<std::size_t>(it.row());
                    Complex vi = v[it.row()];
                    Complex d_va = Complex(0.0, -1.0) * vi * std::conj(it.value() * vk);
                    Complex d_vm = vi * std::conj(it.value() * vk_unit);
                    if (i == k) {
                        d_va += Complex(0.0, 1.0) * vi * std::conj(current[it.row()]);
                        d_vm += std::conj(current[it.row()]) * vk_unit;
                    }
                    Eigen::Index c_va = k == slack ? -1 : row_p[k];
                    Eigen::Index c_vm = row_q[k];
                    if (row_p[i] >= 0) {
                        if (c_va >= 0) {
                            triplets.emplace_back(row_p[i], c_va, d_va.real());
                        }
                        if (c_vm >= 0) {
                            triplets.emplace_back(row_p[i], c_vm, d_vm.real());
                        }
                    }
                    if (row_q[i] >= 0) {
                        if (c_va >= 0) {
                            triplets.emplace_back(row_q[i], c_va, d_va.imag());
                        }
                        if (c_vm >= 0) {
                            triplets.emplace_back(row_q[i], c_vm, d_vm.imag());
                        }
                    }
                }
            }
            Eigen::SparseMatrix<double> jac(dim, dim);
            jac.setFromTriplets(triplets.begin(), triplets.end());
            jac.makeCompressed();
            lu.analyzePattern(jac);
            lu.factorize(jac);
            if (lu.info() != Eigen::Success) {
                result.singular = true;
                return result;
            }
            Eigen::VectorXd dx = lu.solve(-mismatch);
            if (lu.info() != Eigen::Success || !dx.allFinite()) {
                result.singular = true;
                return result;
            }
            ++result.iterations;
            for (std::size_t i = 0; i < n; ++i) {
                if (row_p[i] >= 0) {
                    va[i] += dx[row_p[i]];
                }
                if (row_q[i] >= 0) {
                    vm[i] += dx[row_q[i]];
                }
            }
        }

        if (!converged || !opts.enforce_q_limits) {
            break;
        }
        bool any_switch = false;
        for (std::size_t g = 0; g < gens.size(); ++g) {
            auto i = net.bus_index(gens[g].bus);
            if (kind[i] != BusKind::Generator) {
                continue;
            }
            double q = s[static_cast<Eigen::Index>(i)].imag() + net.buses()[i].q_load;
            double limit = q;
            if (q > gens[g].q_max + opts.tolerance) {
                limit = gens[g].q_max;
            } else if (q < gens[g].q_min - opts.tolerance) {
                limit = gens[g].q_min;
            } else {
                continue;
            }
            kind[i] = BusKind::Load;
            switched[i] = true;
            q_spec[i] = limit - net.buses()[i].q_load;
            q_excess[g] = std::abs(q - limit);
            any_switch = true;
        }
        if (!any_switch) {
            break;
        }
    }

    if (std::any_of(vm.begin(), vm.end(), [](double x) { return !(x > 0.0); })) {
        return result;
    }
    result.converged = true;
    OperatingPoint pt;
    pt.vm = vm;
    pt.va = va;
    pt.q_excess = std::move(q_excess);
    pt.switched_to_pq = std::move(switched);
    std::size_t next_p = 0;
    for (std::size_t g = 0; g < gens.size(); ++g) {
        auto i = net.bus_index(gens[g].bus);
        auto const& b = net.buses()[i];
        if (g == net.slack_generator()) {
            pt.p_gen.push_back(s[static_cast<Eigen::Index>(i)].real() + b.p_load);
        } else {
            pt.p_gen.push_back(ctl.p_gen[next_p++]);
        }
        pt.q_gen.push_back(s[static_cast<Eigen::Index>(i)].imag() + b.q_load);
    }
    pt.branch_flow = compute_branch_flows(net, ctl.taps, pt.vm, pt.va);
    result.point = std::move(pt);
    return result;
}

inline auto solve_power_flow(PowerNetwork const& net, ControlValues const& ctl, PowerFlowOptions const& opts = {})
    -> PowerFlowResult
{
    return solve_power_flow(net, build_admittance(net, ctl.taps, ctl.shunts), ctl, opts);
}

// Largest P/Q balance residual over all buses, evaluated with the trigonometric
// power-flow equations on the dense Y (independent of the Jacobian path).
inline auto balance_residual(PowerNetwork const& net, AdmittanceMatrix const& adm, OperatingPoint const& pt) -> double
{
    auto const n = net.bus_count();
    Eigen::MatrixXcd y = adm.dense();
    std::vector<double> p_gen(n, 0.0);
    std::vector<double> q_gen(n, 0.0);
    for (std::size_t g = 0; g < net.generators().size(); ++g) {
        auto i = net.bus_index(net.generators()[g].bus);
        p_gen[i] = pt.p_gen[g];
        q_gen[i] = pt.q_gen[g];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = 0.0;
        double q = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double g_ik = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)).real();
            double b_ik = y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)).imag();
            double th = pt.va[i] - pt.va[k];
            p += pt.vm[i] * pt.vm[k] * (g_ik * std::cos(th) + b_ik * std::sin(th));
            q += pt.vm[i] * pt.vm[k] * (g_ik * std::sin(th) - b_ik * std::cos(th));
        }
        auto const& b = net.buses()[i];
        worst = std::max(worst, std::abs(p_gen[i] - b.p_load - p));
        worst = std::max(worst, std::abs(q_gen[i] - b.q_load - q));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// L-index

// Y_LL cannot be factored; the message names the offending load island.
struct SingularLoadBlock : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// F = -Y_LL^-1 Y_LG for one admittance matrix.
struct LIndexFactor {
    std::vector<std::size_t> load_buses;
    std::vector<std::size_t> gen_buses;
    Eigen::MatrixXcd f;
};

namespace detail {
    // Y_LL is block diagonal over connected components of the load-only subgraph;
    // report the first component whose block is rank deficient.
    inline auto singular_island_message(PowerNetwork const& net, AdmittanceMatrix const& adm) -> std::string
    {
        auto nl = adm.load_buses.size();
        std::vector<std::vector<std::size_t>> adj(nl);
        for (Eigen::Index col = 0; col < adm.y_ll.outerSize(); ++col) {
            for (SparseComplex::InnerIterator it(adm.y_ll, col); it; ++it) {
                if (it.row() != it.col() && it.value() != Complex(0.0, 0.0)) {
                    adj[static_cast<std::size_t>(it.row())].push_back(static_cast<std::size_t>(col));
                }
            }
        }
        std::vector<int> comp(nl, -1);
        Eigen::MatrixXcd dense(adm.y_ll);
        for (std::size_t start = 0; start < nl; ++start) {
            if (comp[start] >= 0) {
                continue;
            }
            std::vector<std::size_t> members { start };
            comp[start] = static_cast<int>(start);
            for (std::size_t h = 0; h < members.size(); ++h) {
                for (auto w : adj[members[h]]) {
                    if (comp[w] < 0) {
                        comp[w] = static_cast<int>(start);
                        members.push_back(w);
                    }
                }
            }
            auto m = static_cast<Eigen::Index>(members.size());
            Eigen::MatrixXcd block(m, m);
            for (Eigen::Index a = 0; a < m; ++a) {
                for (Eigen::Index b = 0; b < m; ++b) {
                    block(a, b) = dense(static_cast<Eigen::Index>(members[a]), static_cast<Eigen::Index>(members[b]));
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXcd> lu(block);
            if (lu.rank() < m) {
                std::sort(members.begin(), members.end());
                std::string ids;
                for (auto idx : members) {
                    ids += (ids.empty() ? "" : ", ") + std::to_string(net.buses()[adm.load_buses[idx]].id);
                }
                return "singular Y_LL: load island {" + ids + "} is not tied to any generator bus";
            }
        }
        return "singular Y_LL";
    }
} // namespace detail

inline auto l_index_factor(PowerNetwork const& net, AdmittanceMatrix const& adm) -> LIndexFactor
{
    LIndexFactor out { adm.load_buses, adm.gen_buses, {} };
    auto nl = static_cast<Eigen::Index>(adm.load_buses.size());
    auto ng = static_cast<Eigen::Index>(adm.gen_buses.size());
    if (nl == 0) {
        out.f.resize(0, ng);
        return out;
    }
    Eigen::SparseLU<SparseComplex> lu;
    lu.analyzePattern(adm.y_ll);
    lu.factorize(adm.y_ll);
    if (lu.info() != Eigen::Success) {
        throw SingularLoadBlock(detail::singular_island_message(net, adm));
    }
    Eigen::MatrixXcd rhs(adm.y_lg);
    out.f = -lu.solve(rhs);
    if (lu.info() != Eigen::Success || !out.f.allFinite()) {
        throw SingularLoadBlock(detail::singular_island_message(net, adm));
    }
    return out;
}

struct LIndexResult {
    std::vector<int> bus_ids; // load buses
    std::vector<double> values;
    double max = 0.0; // f3
};

// L_j = |1 - sum_i F_ji V_i / V_j| in complex arithmetic; f3 = max_j L_j.
inline auto compute_l_index(PowerNetwork const& net, LIndexFactor const& factor, OperatingPoint const& pt) -> LIndexResult
{
    LIndexResult out;
    auto ng = static_cast<Eigen::Index>(factor.gen_buses.size());
    Eigen::VectorXcd v_gen(ng);
    for (Eigen::Index i = 0; i < ng; ++i) {
        v_gen[i] = pt.voltage(factor.gen_buses[static_cast<std::size_t>(i)]);
    }
    Eigen::VectorXcd weighted = factor.f * v_gen;
    for (std::size_t j = 0; j < factor.load_buses.size(); ++j) {
        auto bus = factor.load_buses[j];
        double l = std::abs(1.0 - weighted[static_cast<Eigen::Index>(j)] / pt.voltage(bus));
        out.bus_ids.push_back(net.buses()[bus].id);
        out.values.push_back(l);
        out.max = std::max(out.max, l);
    }
    return out;
}

inline auto compute_l_index(PowerNetwork const& net, AdmittanceMatrix const& adm, OperatingPoint const& pt)
    -> LIndexResult
{
    return compute_l_index(net, l_index_factor(net, adm), pt);
}

} // namespace maopf

#endif
