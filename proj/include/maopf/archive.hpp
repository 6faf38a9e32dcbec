#ifndef MAOPF_ARCHIVE_HPP
#define MAOPF_ARCHIVE_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "decision.hpp"
#include "knea.hpp"
#include "metrics.hpp"
#include "objectives.hpp"

namespace maopf {

inline constexpr int archive_schema_version = 1;

struct RunInfo {
    std::string case_path;
    std::optional<std::string> coefficients_path;
    AlgorithmConfig config;
};

inline auto config_to_json(RunInfo const& info) -> nlohmann::json
{
    auto const& c = info.config;
    nlohmann::json j;
    j["case"] = info.case_path;
    j["coefficients"] = info.coefficients_path ? nlohmann::json(*info.coefficients_path) : nlohmann::json(nullptr);
    j["population"] = c.population;
    j["generations"] = c.generations;
    j["seed"] = c.seed;
    j["threshold"] = c.threshold;
    j["neighbors"] = c.neighbor_count();
    j["knee_fraction_base"] = c.fraction_base == KneeFractionBase::FirstFront ? "front" : "population";
    j["crossover_rate"] = c.variation.crossover_rate;
    j["gene_exchange"] = c.variation.gene_exchange;
    j["eta_c"] = c.variation.eta_c;
    j["mutation_rate"] = c.variation.mutation_rate;
    j["eta_m"] = c.variation.eta_m;
    return j;
}

inline auto operating_summary(PowerNetwork const& net, Evaluation const& e) -> nlohmann::json
{
    nlohmann::json j;
    j["converged"] = e.power_flow.converged;
    j["iterations"] = e.power_flow.iterations;
    if (!e.power_flow.point) {
        return j;
    }
    auto const& pt = *e.power_flow.point;
    double gen = 0.0;
    for (double p : pt.p_gen) {
        gen += p;
    }
    double load = 0.0;
    for (auto const& b : net.buses()) {
        load += b.p_load;
    }
    double worst_loading = 0.0;
    for (std::size_t k = 0; k < pt.branch_flow.size(); ++k) {
        worst_loading = std::max(worst_loading, pt.branch_flow[k] / net.branches()[k].s_max);
    }
    j["max_mismatch"] = e.power_flow.max_mismatch;
    j["slack_p_mw"] = pt.p_gen[net.slack_generator()] * net.base_mva();
    j["losses_mw"] = (gen - load) * net.base_mva();
    j["v_min_pu"] = *std::min_element(pt.vm.begin(), pt.vm.end());
    j["v_max_pu"] = *std::max_element(pt.vm.begin(), pt.vm.end());
    j["max_branch_loading"] = worst_loading;
    std::vector<double> q_mvar;
    for (double q : pt.q_gen) {
        q_mvar.push_back(q * net.base_mva());
    }
    j["q_gen_mvar"] = q_mvar;
    j["violations"] = { { "gen_p", e.constraints.gen_p }, { "gen_q", e.constraints.gen_q },
        { "bus_voltage", e.constraints.bus_voltage }, { "branch_loading", e.constraints.branch_loading } };
    return j;
}

inline auto progress_to_json(ProgressRecord const& rec) -> nlohmann::json
{
    return { { "generation", rec.generation }, { "feasible", rec.feasible }, { "objective_min", rec.objective_min },
        { "objective_max", rec.objective_max }, { "knees", rec.knees }, { "r", rec.r }, { "t", rec.t } };
}

// The run archive. Holds no timestamp or thread count, so equal seeds give equal bytes.
inline auto archive_to_json(OpfProblem const& problem, KneaResult const& res, RunInfo const& info) -> nlohmann::json
{
    nlohmann::json j;
    j["schema_version"] = archive_schema_version;
    j["config"] = config_to_json(info);
    j["feasible"] = res.feasible;
    j["warning"] = res.feasible
        ? nlohmann::json(nullptr)
        : nlohmann::json("no feasible solution found; the least-violating members are stored");
    j["objective_names"] = objective_names;
    auto& sols = j["solutions"] = nlohmann::json::array();
    for (auto i : res.archive) {
        auto const& ind = res.population[i];
        auto e = problem.evaluate_full(ind.controls);
        nlohmann::json s;
        s["genes"] = { { "continuous", ind.controls.continuous }, { "discrete", ind.controls.discrete } };
        s["controls"] = controls_to_json(problem.network(), e.controls);
        s["objectives"] = ind.fit().objectives;
        s["feasible"] = ind.fit().feasible;
        s["violation"] = ind.fit().violation;
        s["operating_point"] = operating_summary(problem.network(), e);
        sols.push_back(std::move(s));
    }
    auto& prog = j["progress"] = nlohmann::json::array();
    for (auto const& rec : res.progress) {
        prog.push_back(progress_to_json(rec));
    }
    return j;
}

inline auto csv_number(double v) -> std::string
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline auto archive_to_csv(nlohmann::json const& archive) -> std::string
{
    std::ostringstream os;
    os << "index";
    for (auto const& name : archive.at("objective_names")) {
        os << ',' << name.get<std::string>();
    }
    os << ",feasible,violation\n";
    std::size_t i = 0;
    for (auto const& s : archive.at("solutions")) {
        os << i++;
        for (auto const& f : s.at("objectives")) {
            os << ',' << csv_number(f.get<double>());
        }
        os << ',' << (s.at("feasible").get<bool>() ? 1 : 0) << ',' << csv_number(s.at("violation").get<double>())
           << '\n';
    }
    return os.str();
}

struct ArchiveSolution {
    ControlVector genes;
    std::vector<double> objectives;
    bool feasible = true;
    double violation = 0.0;
    nlohmann::json controls;
};

struct LoadedArchive {
    nlohmann::json config;
    bool feasible = true;
    std::vector<ArchiveSolution> solutions;

    [[nodiscard]] auto objectives() const -> ObjectiveRows
    {
        ObjectiveRows rows;
        for (auto const& s : solutions) {
            rows.push_back(s.objectives);
        }
        return rows;
    }
};

inline auto read_json(std::filesystem::path const& path) -> nlohmann::json
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline void write_text(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

inline auto parse_archive(nlohmann::json const& j) -> LoadedArchive
{
    try {
        if (j.at("schema_version").get<int>() != archive_schema_version) {
            throw ParseError("unsupported archive schema_version " + j.at("schema_version").dump());
        }
        LoadedArchive a;
        a.config = j.at("config");
        a.feasible = j.at("feasible").get<bool>();
        for (auto const& s : j.at("solutions")) {
            ArchiveSolution sol;
            sol.genes.continuous = s.at("genes").at("continuous").get<std::vector<double>>();
            sol.genes.discrete = s.at("genes").at("discrete").get<std::vector<int>>();
            sol.objectives = s.at("objectives").get<std::vector<double>>();
            sol.feasible = s.at("feasible").get<bool>();
            sol.violation = s.at("violation").get<double>();
            sol.controls = s.value("controls", nlohmann::json(nullptr));
            a.solutions.push_back(std::move(sol));
        }
        return a;
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(std::string("malformed archive: ") + e.what());
    }
}

inline auto load_archive(std::filesystem::path const& path) -> LoadedArchive
{
    try {
        return parse_archive(read_json(path));
    } catch (ParseError const& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// Largest relative gap between stored and recomputed objectives.
inline auto reevaluation_gap(OpfProblem const& problem, LoadedArchive const& a) -> double
{
    double worst = 0.0;
    for (auto const& s : a.solutions) {
        if (!is_valid(problem.layout(), s.genes)) {
            return std::numeric_limits<double>::infinity();
        }
        auto f = problem.evaluate(s.genes).objectives;
        for (std::size_t j = 0; j < f.size(); ++j) {
            double scale = std::max(1.0, std::abs(s.objectives[j]));
            worst = std::max(worst, std::abs(f[j] - s.objectives[j]) / scale);
        }
    }
    return worst;
}

// A front file is either a run archive or a bare array of objective vectors.
inline auto load_front(std::filesystem::path const& path) -> Front
{
    auto j = read_json(path);
    try {
        if (j.is_array()) {
            return j.get<Front>();
        }
        Front f;
        for (auto const& s : j.at("solutions")) {
            f.push_back(s.at("objectives").get<std::vector<double>>());
        }
        return f;
    } catch (nlohmann::json::exception const& e) {
        throw ParseError(path.string() + ": not a front or archive: " + e.what());
    }
}

inline auto objective_label(std::size_t j) -> std::string { return "f" + std::to_string(j + 1); }

inline auto decision_to_json(DecisionReport const& rep, LoadedArchive const& archive) -> nlohmann::json
{
    nlohmann::json j;
    j["weights"] = std::vector<double>(rep.weights.data(), rep.weights.data() + rep.weights.size());
    j["clusters"] = rep.fcm.centers.rows();
    j["fcm"] = { { "iterations", rep.fcm.iterations }, { "j_final", rep.fcm.j_final } };
    j["notes"] = rep.notes;
    auto& rows = j["bcs"] = nlohmann::json::array();
    for (auto const& c : rep.choices) {
        nlohmann::json r;
        r["label"] = c.prefers ? "prefer for " + objective_label(*c.prefers) : "unlabeled";
        r["cluster"] = c.cluster;
        r["members"] = c.members;
        r["solution"] = c.bcs;
        r["pm"] = c.pm;
        auto const& s = archive.solutions[c.bcs];
        r["objectives"] = s.objectives;
        r["genes"] = { { "continuous", s.genes.continuous }, { "discrete", s.genes.discrete } };
        r["controls"] = s.controls;
        rows.push_back(std::move(r));
    }
    std::vector<double> pm(rep.grp.pm.data(), rep.grp.pm.data() + rep.grp.pm.size());
    j["pm"] = pm;
    return j;
}

inline auto decision_to_csv(DecisionReport const& rep, LoadedArchive const& archive) -> std::string
{
    std::ostringstream os;
    os << "label,solution,f1,f2,f3,f4,pm\n";
    for (auto const& c : rep.choices) {
        os << (c.prefers ? "prefer for " + objective_label(*c.prefers) : std::string("unlabeled")) << ',' << c.bcs;
        for (double f : archive.solutions[c.bcs].objectives) {
            os << ',' << csv_number(f);
        }
        os << ',' << csv_number(c.pm) << '\n';
    }
    return os.str();
}

} // namespace maopf

#endif
