#include <gtest/gtest.h>

#include <chrono>

#include <maopf/maopf.hpp>

#include "cli_runner.hpp"
#include "fixtures.hpp"

using namespace maopf;
using nlohmann::json;

namespace {

auto data(std::string const& name) -> std::string { return cli::quote(fixtures::data_path(name).string()); }

} // namespace

TEST(Cli, UnknownOptionIsUsageError)
{
    EXPECT_EQ(cli::run("run --case " + data("two_bus.json") + " --bogus 3").status, 1);
    EXPECT_EQ(cli::run("frobnicate").status, 1);
    EXPECT_EQ(cli::run("run --case " + data("two_bus.json")).status, 1);
}

TEST(Cli, TwoBusRunIsFastAndDeterministic)
{
    cli::ScratchDir dir("run");
    auto t0 = std::chrono::steady_clock::now();
    auto r = cli::run("run --case " + data("two_bus.json") + " --pop 8 --gens 5 --seed 3 --out " + dir / "a.json");
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.status, 0);
    EXPECT_LT(secs, 1.0);
    auto r2 = cli::run("run --case " + data("two_bus.json") + " --pop 8 --gens 5 --seed 3 --out " + dir / "b.json");
    ASSERT_EQ(r2.status, 0);
    EXPECT_EQ(cli::slurp(dir / "a.json"), cli::slurp(dir / "b.json"));
    auto j = read_json(dir / "a.json");
    EXPECT_EQ(j.at("schema_version"), archive_schema_version);
    EXPECT_FALSE(j.at("solutions").empty());
}

TEST(Cli, RepeatWritesSuffixedArchives)
{
    cli::ScratchDir dir("repeat");
    auto r = cli::run("run --case " + data("two_bus.json") + " --pop 6 --gens 3 --seed-base 4 --repeat 2 --out "
        + dir / "runs.json");
    ASSERT_EQ(r.status, 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "runs_01.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "runs_02.json"));
    EXPECT_EQ(read_json(dir / "runs_02.json").at("config").at("seed"), 5);
}

TEST(Cli, ReloadedArchiveReevaluates)
{
    cli::ScratchDir dir("reload");
    auto r = cli::run("run --case " + data("ieee14.json") + " --pop 12 --gens 6 --seed 2 --out " + dir / "a.json"
        + " --csv " + dir / "a.csv");
    ASSERT_EQ(r.status, 0);
    OpfProblem problem(load_case(fixtures::data_path("ieee14.json")));
    auto a = load_archive(dir / "a.json");
    ASSERT_FALSE(a.solutions.empty());
    EXPECT_LT(reevaluation_gap(problem, a), 1e-9);
    auto csv = cli::slurp(dir / "a.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
        "index,f1_cost,f2_voltage_deviation,f3_l_index,f4_emission,feasible,violation");
}

TEST(Cli, DecideOnFourPointsGivesSingletonClusters)
{
    cli::ScratchDir dir("decide");
    json archive;
    archive["schema_version"] = archive_schema_version;
    archive["config"] = json::object();
    archive["feasible"] = true;
    std::vector<std::vector<double>> pts { { 0, 1, 1, 1 }, { 1, 0, 1, 1 }, { 1, 1, 0, 1 }, { 1, 1, 1, 0 } };
    for (auto const& p : pts) {
        archive["solutions"].push_back({ { "genes", { { "continuous", json::array() }, { "discrete", json::array() } } },
            { "objectives", p }, { "feasible", true }, { "violation", 0.0 } });
    }
    write_text(dir / "a.json", archive.dump());
    auto r = cli::run("decide --archive " + dir / "a.json" + " --out " + dir / "d.json");
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("weights 0.25 0.25 0.25 0.25"), std::string::npos);
    auto d = read_json(dir / "d.json");
    ASSERT_EQ(d.at("bcs").size(), 4U);
    for (std::size_t i = 0; i < 4; ++i) {
        auto const& row = d.at("bcs")[i];
        EXPECT_EQ(row.at("members").size(), 1U);
        EXPECT_EQ(row.at("label"), "prefer for f" + std::to_string(i + 1));
        EXPECT_EQ(row.at("solution"), i);
    }

    auto w = cli::run("decide --archive " + dir / "a.json" + " --weights 2,0,0,0 --out " + dir / "w.json");
    ASSERT_EQ(w.status, 0);
    EXPECT_NE(w.out.find("weights 1 0 0 0"), std::string::npos);

    EXPECT_EQ(cli::run("decide --archive " + dir / "a.json" + " --clusters 5 --out " + dir / "x.json").status, 1);
}

TEST(Cli, MetricsSelfDistanceAndMissingFile)
{
    cli::ScratchDir dir("metrics");
    write_text(dir / "f.json", "[[0,3],[1,2],[3,0]]");
    auto r = cli::run("metrics " + dir / "f.json" + " --reference " + dir / "f.json");
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("reference front: 3 points"), std::string::npos);
    EXPECT_NE(r.out.find("best      0 "), std::string::npos) << r.out;
    EXPECT_EQ(cli::run("metrics " + dir / "missing.json").status, 1);
    write_text(dir / "g.json", "[[0,3,1]]");
    EXPECT_EQ(cli::run("metrics " + dir / "f.json" + " " + dir / "g.json").status, 1);
}

TEST(Cli, PfTwoBusHasFlatProfile)
{
    auto r = cli::run("pf --case " + data("two_bus.json"));
    ASSERT_EQ(r.status, 0);
    auto j = json::parse(r.out);
    EXPECT_TRUE(j.at("converged").get<bool>());
    EXPECT_NEAR(j.at("objectives").at("f2_voltage_deviation").get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(j.at("objectives").at("f3_l_index").get<double>(), 0.0, 1e-12);
}

TEST(Cli, PfIeee118BaseConvergesQuickly)
{
    auto r = cli::run("pf --case " + data("ieee118.json") + " --controls " + data("ieee118_base_controls.json"));
    ASSERT_EQ(r.status, 0);
    auto j = json::parse(r.out);
    EXPECT_TRUE(j.at("converged").get<bool>());
    EXPECT_LT(j.at("iterations").get<int>(), 30);
}

TEST(Cli, PfDivergenceExitsTwo)
{
    cli::ScratchDir dir("diverge");
    auto doc = read_json(fixtures::data_path("two_bus.json"));
    doc["buses"][1]["p_load_mw"] = 2000.0;
    write_text(dir / "heavy.json", doc.dump());
    EXPECT_EQ(cli::run("pf --case " + dir / "heavy.json").status, 2);
}

TEST(Cli, PfCompareListsObjectives)
{
    auto c = data("ieee14_base_controls.json");
    auto r = cli::run("pf --case " + data("ieee14.json") + " --compare " + c + " " + c);
    ASSERT_EQ(r.status, 0);
    for (auto const* name : objective_names) {
        EXPECT_NE(r.out.find(name), std::string::npos);
    }
    EXPECT_NE(r.out.find("converged"), std::string::npos);
    EXPECT_NE(r.out.find("true"), std::string::npos);
}
