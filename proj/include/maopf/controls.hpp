#ifndef MAOPF_CONTROLS_HPP
#define MAOPF_CONTROLS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "encoding.hpp"
#include "power_flow.hpp"

namespace maopf {

// Gene order: P_G of every non-slack generator, U_G of every generator, then tap
// indices per adjustable branch and step indices per compensator.
inline auto opf_layout(PowerNetwork const& net) -> ControlLayout
{
    ControlLayout layout;
    auto gens = net.generators();
    for (std::size_t g = 0; g < gens.size(); ++g) {
        if (g != net.slack_generator()) {
            layout.continuous.push_back({ gens[g].p_min, gens[g].p_max });
        }
    }
    for (auto const& gen : gens) {
        auto const& bus = net.buses()[net.bus_index(gen.bus)];
        layout.continuous.push_back({ bus.v_min, bus.v_max });
    }
    for (auto k : net.tap_branches()) {
        layout.discrete.push_back(net.branches()[k].tap->grid());
    }
    for (auto const& sh : net.shunts()) {
        layout.discrete.push_back(sh.grid());
    }
    return layout;
}

inline auto decode_controls(PowerNetwork const& net, ControlVector const& x) -> ControlValues
{
    auto n_gen = net.generators().size();
    auto n_tap = net.tap_branches().size();
    if (x.continuous.size() != 2 * n_gen - 1 || x.discrete.size() != n_tap + net.shunts().size()) {
        throw std::invalid_argument("control vector does not match the network");
    }
    ControlValues c;
    c.p_gen.assign(x.continuous.begin(), x.continuous.begin() + static_cast<std::ptrdiff_t>(n_gen - 1));
    c.v_gen.assign(x.continuous.begin() + static_cast<std::ptrdiff_t>(n_gen - 1), x.continuous.end());
    for (std::size_t i = 0; i < n_tap; ++i) {
        c.taps.push_back(net.branches()[net.tap_branches()[i]].tap->grid().value(x.discrete[i]));
    }
    for (std::size_t s = 0; s < net.shunts().size(); ++s) {
        c.shunts.push_back(net.shunts()[s].grid().value(x.discrete[n_tap + s]));
    }
    return c;
}

// Inverse of decode_controls. Values must lie within bounds and on their grids.
inline auto encode_controls(PowerNetwork const& net, ControlValues const& c) -> ControlVector
{
    auto layout = opf_layout(net);
    ControlVector x;
    x.continuous = c.p_gen;
    x.continuous.insert(x.continuous.end(), c.v_gen.begin(), c.v_gen.end());
    if (x.continuous.size() != layout.continuous.size() || c.taps.size() != net.tap_branches().size()
        || c.shunts.size() != net.shunts().size()) {
        throw ValidationError("controls: wrong number of values for this network");
    }
    constexpr double bound_tol = 1e-9;
    for (std::size_t i = 0; i < x.continuous.size(); ++i) {
        auto const& gene = layout.continuous[i];
        if (x.continuous[i] < gene.lo - bound_tol || x.continuous[i] > gene.hi + bound_tol) {
            throw ValidationError("controls: continuous value " + std::to_string(i) + " = "
                + std::to_string(x.continuous[i]) + " outside its bounds");
        }
        x.continuous[i] = std::clamp(x.continuous[i], gene.lo, gene.hi);
    }
    std::vector<double> discrete = c.taps;
    discrete.insert(discrete.end(), c.shunts.begin(), c.shunts.end());
    for (std::size_t i = 0; i < discrete.size(); ++i) {
        auto const& grid = layout.discrete[i];
        auto idx = static_cast<int>(std::lround((discrete[i] - grid.lo) / grid.step));
        if (idx < 0 || idx >= grid.levels() || std::abs(grid.value(idx) - discrete[i]) > 1e-6 * std::max(1.0, grid.step)) {
            throw ValidationError("controls: discrete value " + std::to_string(discrete[i]) + " is not on its grid");
        }
        x.discrete.push_back(idx);
    }
    return x;
}

// Controls file: {"p_g_mw":[non-slack], "u_g_pu":[all generators], "taps":[...], "shunts_mvar":[...]}.
inline auto controls_from_json(PowerNetwork const& net, nlohmann::json const& doc) -> ControlValues
{
    using namespace detail;
    check_keys(doc, "controls", { "p_g_mw", "u_g_pu", "taps", "shunts_mvar" });
    auto numbers = [&](char const* key, double scale) {
        std::vector<double> out;
        for (auto const& v : array(doc, key, "controls")) {
            if (!v.is_number()) {
                throw ParseError(std::string("controls: '") + key + "' must hold numbers");
            }
            out.push_back(v.get<double>() / scale);
        }
        return out;
    };
    ControlValues c;
    c.p_gen = numbers("p_g_mw", net.base_mva());
    c.v_gen = numbers("u_g_pu", 1.0);
    c.taps = numbers("taps", 1.0);
    c.shunts = numbers("shunts_mvar", net.base_mva());
    // round-trip through the encoding so off-grid or out-of-range files are rejected
    return decode_controls(net, encode_controls(net, c));
}

inline auto controls_to_json(PowerNetwork const& net, ControlValues const& c) -> nlohmann::json
{
    auto scaled = [](std::vector<double> const& v, double s) {
        std::vector<double> out;
        for (double x : v) {
            out.push_back(x * s);
        }
        return out;
    };
    return { { "p_g_mw", scaled(c.p_gen, net.base_mva()) }, { "u_g_pu", c.v_gen }, { "taps", c.taps },
        { "shunts_mvar", scaled(c.shunts, net.base_mva()) } };
}

inline auto load_controls(PowerNetwork const& net, std::filesystem::path const& path) -> ControlValues
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open controls file " + path.string());
    }
    try {
        return controls_from_json(net, nlohmann::json::parse(in));
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (ParseError const& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (ValidationError const& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

} // namespace maopf

#endif
