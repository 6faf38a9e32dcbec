#ifndef MAOPF_TESTS_FIXTURES_HPP
#define MAOPF_TESTS_FIXTURES_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <maopf/network.hpp>

namespace fixtures {

inline auto data_path(std::string const& name) -> std::filesystem::path
{
    return std::filesystem::path(MAOPF_DATA_DIR) / name;
}

// Slack bus 1 at 1.0 p.u. feeding a pq load through a lossless x line.
inline auto two_bus(double p_load = 0.0, double q_load = 0.0, double x = 0.1) -> maopf::PowerNetwork
{
    using namespace maopf;
    std::vector<Bus> buses {
        { .id = 1, .kind = BusKind::Slack, .v_min = 0.9, .v_max = 1.1 },
        { .id = 2, .kind = BusKind::Load, .v_min = 0.9, .v_max = 1.1, .p_load = p_load, .q_load = q_load },
    };
    std::vector<Branch> branches { { .from = 1, .to = 2, .r = 0.0, .x = x, .b_sh = 0.0, .s_max = 2.0 } };
    std::vector<Generator> gens { { .bus = 1, .p_min = 0.0, .p_max = 2.0, .q_min = -2.0, .q_max = 2.0,
        .cost = { 0.0, 2.0, 1.0 }, .emission = { 0.0, 0.0, 3.0 } } };
    return PowerNetwork(1.0, buses, branches, gens, {});
}

// Bus 2 is a generator between two identical load buses.
inline auto symmetric_three_bus(double p_load, double q_load) -> maopf::PowerNetwork
{
    using namespace maopf;
    std::vector<Bus> buses {
        { .id = 1, .kind = BusKind::Load, .v_min = 0.8, .v_max = 1.2, .p_load = p_load, .q_load = q_load },
        { .id = 2, .kind = BusKind::Slack, .v_min = 0.8, .v_max = 1.2 },
        { .id = 3, .kind = BusKind::Load, .v_min = 0.8, .v_max = 1.2, .p_load = p_load, .q_load = q_load },
    };
    std::vector<Branch> branches {
        { .from = 2, .to = 1, .r = 0.01, .x = 0.1, .b_sh = 0.02, .s_max = 2.0 },
        { .from = 2, .to = 3, .r = 0.01, .x = 0.1, .b_sh = 0.02, .s_max = 2.0 },
    };
    std::vector<Generator> gens { { .bus = 2, .p_min = 0.0, .p_max = 3.0, .q_min = -3.0, .q_max = 3.0 } };
    return PowerNetwork(100.0, buses, branches, gens, {});
}

} // namespace fixtures

#endif
