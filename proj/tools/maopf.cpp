// maopf: run the optimizer, pick compromise solutions, score fronts, solve one power flow.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>

#include <CLI11.hpp>

#include <maopf/maopf.hpp>

namespace {

using namespace maopf;
using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_diverged = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

auto load_network(std::string const& case_path, std::string const& coefficients) -> PowerNetwork
{
    auto net = load_case(case_path);
    if (!coefficients.empty()) {
        net = with_coefficients(net, read_json(coefficients));
    }
    return net;
}

auto indexed_path(std::string const& path, std::size_t i, std::size_t count) -> std::string
{
    if (count == 1) {
        return path;
    }
    std::filesystem::path p(path);
    std::ostringstream name;
    name << p.stem().string() << '_' << std::setw(2) << std::setfill('0') << i << p.extension().string();
    return (p.parent_path() / name.str()).string();
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
    std::string case_path;
    std::string coefficients;
    std::size_t population = 50;
    std::size_t generations = 100;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> seed_base;
    std::size_t repeat = 1;
    std::string out = "archive.json";
    std::string csv;
    double threshold = 0.5;
    std::size_t neighbors = 0;
    std::size_t threads = 1;
    double eta_c = 20.0;
    double eta_m = 20.0;
    double pc = 0.9;
    double pm = -1.0;
    std::string knee_fraction = "front";
    std::string log;
};

auto cmd_run(RunArgs const& a) -> int
{
    if (!a.seed && !a.seed_base) {
        throw UsageError("run: --seed is required (or --seed-base with --repeat)");
    }
    if (a.repeat == 0) {
        throw UsageError("run: --repeat must be at least 1");
    }
    auto net = load_network(a.case_path, a.coefficients);
    OpfProblem problem(std::move(net));

    AlgorithmConfig cfg;
    cfg.population = a.population;
    cfg.generations = a.generations;
    cfg.threshold = a.threshold;
    cfg.neighbors = a.neighbors;
    cfg.threads = a.threads;
    if (char const* env = std::getenv("MAOPF_THREADS"); env != nullptr && *env != '\0') {
        try {
            cfg.threads = std::stoul(env);
        } catch (std::exception const&) {
            throw UsageError(std::string("MAOPF_THREADS must be a positive integer, got '") + env + "'");
        }
    }
    if (cfg.threads == 0) {
        cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    }
    cfg.variation.eta_c = a.eta_c;
    cfg.variation.eta_m = a.eta_m;
    cfg.variation.crossover_rate = a.pc;
    cfg.variation.mutation_rate = a.pm;
    cfg.fraction_base = a.knee_fraction == "population" ? KneeFractionBase::Population : KneeFractionBase::FirstFront;
    try {
        cfg.validate();
    } catch (std::invalid_argument const& e) {
        throw UsageError(std::string("run: ") + e.what());
    }

    std::ofstream log_file;
    std::ostream* log = &std::cerr;
    if (!a.log.empty()) {
        log_file.open(a.log);
        if (!log_file) {
            throw std::runtime_error("cannot write " + a.log);
        }
        log = &log_file;
    }

    double total_seconds = 0.0;
    for (std::size_t rep = 0; rep < a.repeat; ++rep) {
        cfg.seed = a.seed_base ? *a.seed_base + rep : *a.seed;
        auto t0 = std::chrono::steady_clock::now();
        auto res = run_knea(problem, cfg, [&](ProgressRecord const& rec) {
            auto j = progress_to_json(rec);
            j["seed"] = cfg.seed;
            *log << j.dump() << '\n';
        });
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        total_seconds += seconds;

        RunInfo info { a.case_path, a.coefficients.empty() ? std::nullopt : std::optional(a.coefficients), cfg };
        auto archive = archive_to_json(problem, res, info);
        auto out = indexed_path(a.out, rep + 1, a.repeat);
        write_text(out, archive.dump(1) + "\n");
        if (!a.csv.empty()) {
            write_text(indexed_path(a.csv, rep + 1, a.repeat), archive_to_csv(archive));
        }
        std::cout << "seed " << cfg.seed << ": " << archive["solutions"].size() << " solutions"
                  << (res.feasible ? "" : " (WARNING: none feasible)") << " -> " << out << ", wall time "
                  << std::fixed << std::setprecision(2) << seconds << " s\n";
    }
    if (a.repeat > 1) {
        std::cout << "average wall time " << std::fixed << std::setprecision(2)
                  << total_seconds / static_cast<double>(a.repeat) << " s over " << a.repeat << " runs\n";
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// decide

struct DecideArgs {
    std::string archive;
    std::size_t clusters = 4;
    std::vector<double> weights;
    std::string out = "decision.json";
    std::string csv;
    std::uint64_t seed = 1;
    std::string export_dir;
};

auto cmd_decide(DecideArgs const& a) -> int
{
    auto archive = load_archive(a.archive);
    auto raw = archive.objectives();
    if (raw.empty()) {
        throw UsageError("decide: archive " + a.archive + " holds no solutions");
    }
    DecisionOptions opts;
    opts.fcm.clusters = a.clusters;
    opts.fcm.seed = a.seed;
    if (a.weights.empty()) {
        opts.weights.assign(raw.front().size(), 1.0 / static_cast<double>(raw.front().size()));
    } else {
        if (a.weights.size() != raw.front().size()) {
            throw UsageError("decide: expected " + std::to_string(raw.front().size()) + " weights");
        }
        double sum = 0.0;
        for (double w : a.weights) {
            if (!(w >= 0.0)) {
                throw UsageError("decide: weights must be nonnegative");
            }
            sum += w;
        }
        if (!(sum > 0.0)) {
            throw UsageError("decide: weights must not all be zero");
        }
        for (double w : a.weights) {
            opts.weights.push_back(w / sum);
        }
    }
    DecisionReport rep;
    try {
        rep = decide(raw, opts);
    } catch (std::invalid_argument const& e) {
        throw UsageError(std::string("decide: ") + e.what());
    }
    if (!archive.feasible) {
        rep.notes.emplace_back("archive holds no feasible solution");
    }

    auto report = decision_to_json(rep, archive);
    report["archive"] = a.archive;
    write_text(a.out, report.dump(1) + "\n");
    if (!a.csv.empty()) {
        write_text(a.csv, decision_to_csv(rep, archive));
    }

    std::cout << "weights";
    for (double w : opts.weights) {
        std::cout << ' ' << w;
    }
    std::cout << "\n" << std::left << std::setw(16) << "BCS";
    for (auto const* name : objective_names) {
        std::cout << std::setw(24) << name;
    }
    std::cout << "PM\n";
    for (auto const& c : rep.choices) {
        std::cout << std::setw(16)
                  << (c.prefers ? "prefer for " + objective_label(*c.prefers) : std::string("unlabeled"));
        for (double f : raw[c.bcs]) {
            std::cout << std::setw(24) << std::setprecision(8) << f;
        }
        std::cout << std::fixed << std::setprecision(4) << c.pm << std::defaultfloat << '\n';
    }
    for (auto const& n : rep.notes) {
        std::cout << "note: " << n << '\n';
    }

    if (!a.export_dir.empty()) {
        std::filesystem::create_directories(a.export_dir);
        for (auto const& c : rep.choices) {
            auto name = c.prefers ? "bcs_" + objective_label(*c.prefers) : "bcs_cluster" + std::to_string(c.cluster);
            auto path = std::filesystem::path(a.export_dir) / (name + ".json");
            write_text(path, archive.solutions[c.bcs].controls.dump(1) + "\n");
        }
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
    std::vector<std::string> fronts;
    std::string reference;
    bool raw = false;
};

auto cmd_metrics(MetricsArgs const& a) -> int
{
    std::vector<std::string> order;
    std::map<std::string, std::vector<Front>> groups;
    std::vector<Front> all;
    std::optional<std::size_t> dim;
    auto check_dim = [&](Front const& f, std::string const& path) {
        if (f.empty()) {
            throw UsageError("metrics: " + path + " holds no points");
        }
        for (auto const& p : f) {
            if (!dim) {
                dim = p.size();
            }
            if (p.size() != *dim) {
                throw UsageError("metrics: " + path + " has " + std::to_string(p.size())
                    + "-dimensional points, expected " + std::to_string(*dim));
            }
        }
    };
    for (auto const& spec : a.fronts) {
        auto eq = spec.find('=');
        auto label = eq == std::string::npos ? std::string("runs") : spec.substr(0, eq);
        auto path = eq == std::string::npos ? spec : spec.substr(eq + 1);
        if (!std::filesystem::exists(path)) {
            throw UsageError("metrics: no such file: " + path);
        }
        auto f = load_front(path);
        check_dim(f, path);
        if (!groups.count(label)) {
            order.push_back(label);
        }
        groups[label].push_back(f);
        all.push_back(std::move(f));
    }
    Front reference;
    if (!a.reference.empty()) {
        if (!std::filesystem::exists(a.reference)) {
            throw UsageError("metrics: no such file: " + a.reference);
        }
        reference = load_front(a.reference);
        check_dim(reference, a.reference);
    } else {
        reference = build_reference_front(all);
    }

    std::cout << "reference front: " << reference.size() << " points"
              << (a.reference.empty() ? " (non-dominated union of inputs)" : "") << ", "
              << (a.raw ? "raw objectives" : "normalized objectives") << "\n";
    std::cout << std::left << std::setw(14) << "group" << std::setw(6) << "runs" << std::setw(10) << "stat"
              << std::setw(16) << "GD" << "SP\n";
    for (auto const& label : order) {
        std::vector<double> gd;
        std::vector<double> sp;
        for (auto const& f : groups[label]) {
            gd.push_back(generational_distance(f, reference, a.raw));
            if (f.size() >= 2) {
                if (a.raw) {
                    sp.push_back(spacing(f));
                } else {
                    Front const* both[] = { &f, &reference };
                    sp.push_back(spacing(shared_scale(both).apply(f)));
                }
            }
        }
        auto g = summarize(gd);
        std::optional<Summary> s;
        if (!sp.empty()) {
            s = summarize(sp);
        }
        auto row = [&](char const* stat, double gv, std::optional<double> sv, bool first) {
            std::cout << std::setw(14) << (first ? label : "") << std::setw(6)
                      << (first ? std::to_string(gd.size()) : "") << std::setw(10) << stat << std::setw(16)
                      << std::setprecision(8) << gv << (sv ? std::to_string(*sv) : std::string("n/a")) << '\n';
        };
        row("best", g.best, s ? std::optional(s->best) : std::nullopt, true);
        row("average", g.average, s ? std::optional(s->average) : std::nullopt, false);
        row("worst", g.worst, s ? std::optional(s->worst) : std::nullopt, false);
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// pf

struct PfArgs {
    std::string case_path;
    std::string coefficients;
    std::string controls;
    std::vector<std::string> compare;
};

auto pf_json(PowerNetwork const& net, Evaluation const& e) -> json
{
    json j;
    j["converged"] = e.power_flow.converged;
    j["iterations"] = e.power_flow.iterations;
    j["max_mismatch"] = e.power_flow.max_mismatch;
    j["controls"] = controls_to_json(net, e.controls);
    if (!e.power_flow.point) {
        return j;
    }
    auto const& pt = *e.power_flow.point;
    auto& buses = j["buses"] = json::array();
    for (std::size_t i = 0; i < net.bus_count(); ++i) {
        buses.push_back({ { "id", net.buses()[i].id }, { "vm_pu", pt.vm[i] },
            { "va_deg", pt.va[i] * 180.0 / std::numbers::pi }, { "switched_to_pq", bool(pt.switched_to_pq[i]) } });
    }
    auto& gens = j["generators"] = json::array();
    for (std::size_t g = 0; g < net.generators().size(); ++g) {
        gens.push_back({ { "bus", net.generators()[g].bus }, { "p_mw", pt.p_gen[g] * net.base_mva() },
            { "q_mvar", pt.q_gen[g] * net.base_mva() } });
    }
    auto& branches = j["branches"] = json::array();
    for (std::size_t k = 0; k < net.branches().size(); ++k) {
        auto const& br = net.branches()[k];
        branches.push_back({ { "from", br.from }, { "to", br.to }, { "s_mva", pt.branch_flow[k] * net.base_mva() },
            { "loading", pt.branch_flow[k] / br.s_max } });
    }
    j["objectives"] = { { "f1_cost", e.objectives.cost }, { "f2_voltage_deviation", e.objectives.voltage_deviation },
        { "f3_l_index", e.objectives.l_index }, { "f4_emission", e.objectives.emission } };
    j["constraints"] = { { "gen_p", e.constraints.gen_p }, { "gen_q", e.constraints.gen_q },
        { "bus_voltage", e.constraints.bus_voltage }, { "branch_loading", e.constraints.branch_loading },
        { "total", e.constraints.total }, { "feasible", e.constraints.feasible } };
    return j;
}

auto evaluate_file(PowerNetwork const& net, std::string const& controls) -> Evaluation
{
    auto values = controls.empty() ? nominal_controls(net) : load_controls(net, controls);
    return evaluate_individual(net, encode_controls(net, values));
}

auto cmd_pf(PfArgs const& a) -> int
{
    auto net = load_network(a.case_path, a.coefficients);
    if (!a.compare.empty()) {
        if (a.compare.size() != 2) {
            throw UsageError("pf: --compare takes exactly two controls files");
        }
        auto before = evaluate_file(net, a.compare[0]);
        auto after = evaluate_file(net, a.compare[1]);
        std::cout << std::left << std::setw(24) << "objective" << std::setw(18) << "before" << "after\n";
        auto b = before.objectives.as_array();
        auto c = after.objectives.as_array();
        for (std::size_t j = 0; j < objective_count; ++j) {
            std::cout << std::setw(24) << objective_names[j] << std::setw(18) << std::setprecision(8) << b[j] << c[j]
                      << '\n';
        }
        std::cout << std::boolalpha;
        std::cout << std::setw(24) << "converged" << std::setw(18) << before.power_flow.converged
                  << after.power_flow.converged << '\n';
        std::cout << std::setw(24) << "feasible" << std::setw(18) << before.constraints.feasible
                  << after.constraints.feasible << '\n';
        bool ok = before.power_flow.converged && after.power_flow.converged;
        return ok ? exit_ok : exit_diverged;
    }
    auto e = evaluate_file(net, a.controls);
    std::cout << pf_json(net, e).dump(1) << '\n';
    return e.power_flow.converged ? exit_ok : exit_diverged;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Many-objective optimal power flow with KnEA and FCM/GRP decision support" };
    app.require_subcommand(1);

    RunArgs run;
    auto* r = app.add_subcommand("run", "optimize a case and write the Pareto archive");
    r->add_option("--case", run.case_path, "case JSON")->required()->check(CLI::ExistingFile);
    r->add_option("--coefficients", run.coefficients, "cost/emission override JSON")->check(CLI::ExistingFile);
    r->add_option("--pop", run.population, "population size")->capture_default_str();
    r->add_option("--gens", run.generations, "generations")->capture_default_str();
    r->add_option("--seed", run.seed, "random seed");
    r->add_option("--seed-base", run.seed_base, "first seed of a --repeat series");
    r->add_option("--repeat", run.repeat, "independent runs (seeds seed-base, seed-base+1, ...)")->capture_default_str();
    r->add_option("--out", run.out, "archive JSON path")->capture_default_str();
    r->add_option("--csv", run.csv, "objective matrix CSV path");
    r->add_option("--th", run.threshold, "knee fraction threshold")->capture_default_str();
    r->add_option("--k", run.neighbors, "neighbours for weighted distance (0: min(4, pop-1))")->capture_default_str();
    r->add_option("--threads", run.threads, "evaluation threads (0: all cores)")->capture_default_str();
    r->add_option("--eta-c", run.eta_c, "SBX distribution index")->capture_default_str();
    r->add_option("--eta-m", run.eta_m, "mutation distribution index")->capture_default_str();
    r->add_option("--pc", run.pc, "crossover probability")->capture_default_str();
    r->add_option("--pm", run.pm, "per-gene mutation probability (negative: 1/n)")->capture_default_str();
    r->add_option("--knee-fraction", run.knee_fraction, "denominator of the knee fraction")
        ->check(CLI::IsMember({ "front", "population" }))
        ->capture_default_str();
    r->add_option("--log", run.log, "progress log path (default: stderr)");

    DecideArgs dec;
    auto* d = app.add_subcommand("decide", "cluster an archive and pick best compromise solutions");
    d->add_option("--archive", dec.archive, "archive JSON from run")->required()->check(CLI::ExistingFile);
    d->add_option("--clusters", dec.clusters, "cluster count")->capture_default_str();
    d->add_option("--weights", dec.weights, "objective weights, comma separated")->delimiter(',');
    d->add_option("--out", dec.out, "report JSON path")->capture_default_str();
    d->add_option("--csv", dec.csv, "report CSV path");
    d->add_option("--seed", dec.seed, "clustering seed")->capture_default_str();
    d->add_option("--export-controls", dec.export_dir, "directory for one controls file per BCS");

    MetricsArgs met;
    auto* m = app.add_subcommand("metrics", "GD and SP of fronts against a reference");
    m->add_option("fronts", met.fronts, "front or archive files, optionally label=path")->required();
    m->add_option("--reference", met.reference, "reference front (default: non-dominated union)");
    m->add_flag("--raw", met.raw, "skip the shared min-max normalization");

    PfArgs pf;
    auto* p = app.add_subcommand("pf", "solve one power flow");
    p->add_option("--case", pf.case_path, "case JSON")->required()->check(CLI::ExistingFile);
    p->add_option("--coefficients", pf.coefficients, "cost/emission override JSON")->check(CLI::ExistingFile);
    p->add_option("--controls", pf.controls, "controls JSON (default: nominal)")->check(CLI::ExistingFile);
    p->add_option("--compare", pf.compare, "two controls files: before and after")->expected(2)->check(
        CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        return app.exit(e) == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*r) {
            return cmd_run(run);
        }
        if (*d) {
            return cmd_decide(dec);
        }
        if (*m) {
            return cmd_metrics(met);
        }
        return cmd_pf(pf);
    } catch (UsageError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (ParseError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (ValidationError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
}
