#ifndef MAOPF_NETWORK_HPP
#define MAOPF_NETWORK_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "json.hpp"

namespace maopf {

using Complex = std::complex<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

// Malformed case document (bad JSON, wrong types, unknown keys).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Well-formed document describing an invalid network.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BusKind { Slack, Generator, Load };

inline auto to_string(BusKind kind) -> std::string
{
    switch (kind) {
    case BusKind::Slack:
        return "slack";
    case BusKind::Generator:
        return "pv";
    case BusKind::Load:
        return "pq";
    }
    return "?";
}

// All electrical quantities are per-unit on the network base.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double v_min = 0.95;
    double v_max = 1.05;
    double u_ref = 1.0;
    double p_load = 0.0;
    double q_load = 0.0;
    bool negative_load = false;
    double g_shunt = 0.0;
    double b_shunt = 0.0;
};

// Discrete grid lo, lo + step, ..., hi shared by taps and compensators.
struct DiscreteRange {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    [[nodiscard]] auto levels() const -> int
    {
        return static_cast<int>(std::floor((hi - lo) / step + 1e-6)) + 1;
    }
    [[nodiscard]] auto value(int index) const -> double { return lo + index * step; }
    // Index of the grid value nearest to v (clamped to the grid).
    [[nodiscard]] auto nearest_index(double v) const -> int
    {
        auto i = static_cast<int>(std::lround((v - lo) / step));
        return std::clamp(i, 0, levels() - 1);
    }
};

struct TapSpec {
    double t_min = 0.9;
    double t_max = 1.1;
    double step = 0.0125;

    [[nodiscard]] auto grid() const -> DiscreteRange { return { t_min, t_max, step }; }
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_sh = 0.0;
    double s_max = 1.0;
    double ratio = 1.0; // fixed off-nominal ratio, used when tap is absent
    std::optional<TapSpec> tap;
};

// c2*P^2 + c1*P + c0 with P in MW.
struct QuadraticCurve {
    double quadratic = 0.0;
    double linear = 0.0;
    double constant = 0.0;

    [[nodiscard]] auto operator()(double p_mw) const -> double
    {
        return quadratic * p_mw * p_mw + linear * p_mw + constant;
    }
};

struct Generator {
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    QuadraticCurve cost;     // alpha, beta, gamma
    QuadraticCurve emission; // a, b, c
};

struct ShuntCompensator {
    int bus = 0;
    double q_min = 0.0;
    double q_max = 0.0;
    double step = 0.01;

    [[nodiscard]] auto grid() const -> DiscreteRange { return { q_min, q_max, step }; }
};

// Validated, immutable power network. Construct through the constructor or load_case.
class PowerNetwork {
public:
    PowerNetwork(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
        std::vector<Generator> generators, std::vector<ShuntCompensator> shunts)
        : base_mva_(base_mva)
        , buses_(std::move(buses))
        , branches_(std::move(branches))
        , generators_(std::move(generators))
        , shunts_(std::move(shunts))
    {
        validate();
    }

    [[nodiscard]] auto base_mva() const -> double { return base_mva_; }
    [[nodiscard]] auto buses() const -> std::span<const Bus> { return buses_; }
    [[nodiscard]] auto branches() const -> std::span<const Branch> { return branches_; }
    [[nodiscard]] auto generators() const -> std::span<const Generator> { return generators_; }
    [[nodiscard]] auto shunts() const -> std::span<const ShuntCompensator> { return shunts_; }

    [[nodiscard]] auto bus_count() const -> std::size_t { return buses_.size(); }
    [[nodiscard]] auto bus_index(int id) const -> std::size_t
    {
        auto it = index_.find(id);
        if (it == index_.end()) {
            throw std::out_of_range("unknown bus id " + std::to_string(id));
        }
        return it->second;
    }
    [[nodiscard]] auto slack_bus() const -> std::size_t { return slack_; }
    [[nodiscard]] auto slack_generator() const -> std::size_t { return slack_gen_; }
    // Generator index at bus position i, if any.
    [[nodiscard]] auto generator_at(std::size_t bus) const -> std::optional<std::size_t>
    {
        if (gen_at_[bus] < 0) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(gen_at_[bus]);
    }
    // Branch positions with an adjustable tap, in branch order.
    [[nodiscard]] auto tap_branches() const -> std::span<const std::size_t> { return tap_branches_; }
    [[nodiscard]] auto load_bus_count() const -> std::size_t
    {
        return static_cast<std::size_t>(std::count_if(buses_.begin(), buses_.end(),
            [](auto const& b) { return b.kind == BusKind::Load; }));
    }

private:
    void validate()
    {
        auto fail = [](std::string const& msg) { throw ValidationError(msg); };
        if (!(base_mva_ > 0.0)) {
            fail("base_mva must be positive");
        }
        if (buses_.empty()) {
            fail("network has no buses");
        }
        int slack_count = 0;
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            auto const& b = buses_[i];
            if (!index_.emplace(b.id, i).second) {
                fail("duplicate bus id " + std::to_string(b.id));
            }
            if (b.kind == BusKind::Slack) {
                ++slack_count;
                slack_ = i;
            }
            if (!(b.v_min > 0.0 && b.v_min < b.v_max)) {
                fail("bus " + std::to_string(b.id) + ": requires 0 < v_min < v_max");
            }
            if (!(b.u_ref > 0.0)) {
                fail("bus " + std::to_string(b.id) + ": u_ref must be positive");
            }
            if ((b.p_load < 0.0 || b.q_load < 0.0) && !b.negative_load) {
                fail("bus " + std::to_string(b.id) + ": negative load requires the negative_load flag");
            }
        }
        if (slack_count != 1) {
            fail("network must have exactly one slack bus (found " + std::to_string(slack_count) + ")");
        }

        auto resolve = [&](int id, std::string const& what) {
            auto it = index_.find(id);
            if (it == index_.end()) {
                fail(what + " refers to unknown bus " + std::to_string(id));
            }
            return it->second;
        };

        for (std::size_t k = 0; k < branches_.size(); ++k) {
            auto const& br = branches_[k];
            auto name = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
            auto f = resolve(br.from, name);
            auto t = resolve(br.to, name);
            if (f == t) {
                fail(name + ": self loop");
            }
            if (br.x == 0.0) {
                fail(name + ": reactance must be nonzero");
            }
            if (!(br.s_max > 0.0)) {
                fail(name + ": s_max must be positive");
            }
            if (!(br.ratio > 0.0)) {
                fail(name + ": ratio must be positive");
            }
            if (br.tap) {
                auto const& tap = *br.tap;
                if (!(tap.t_min < tap.t_max)) {
                    fail(name + ": tap requires t_min < t_max");
                }
                if (!(tap.step > 0.0)) {
                    fail(name + ": tap step must be positive");
                }
                double n = (tap.t_max - tap.t_min) / tap.step;
                if (std::abs(n - std::round(n)) > 1e-6) {
                    fail(name + ": tap range is not a whole number of steps");
                }
                tap_branches_.push_back(k);
            }
        }

        gen_at_.assign(buses_.size(), -1);
        bool slack_has_gen = false;
        for (std::size_t g = 0; g < generators_.size(); ++g) {
            auto const& gen = generators_[g];
            auto name = "generator at bus " + std::to_string(gen.bus);
            auto i = resolve(gen.bus, name);
            if (!(gen.p_min <= gen.p_max)) {
                fail(name + ": requires p_min <= p_max");
            }
            if (!(gen.q_min <= gen.q_max)) {
                fail(name + ": requires q_min <= q_max");
            }
            if (gen.cost.quadratic < 0.0) {
                fail(name + ": cost alpha must be nonnegative");
            }
            if (buses_[i].kind == BusKind::Load) {
                fail(name + ": bus kind must be slack or pv");
            }
            if (gen_at_[i] >= 0) {
                fail(name + ": more than one generator per bus is not supported");
            }
            gen_at_[i] = static_cast<int>(g);
            if (i == slack_) {
                slack_has_gen = true;
                slack_gen_ = g;
            }
        }
        if (!slack_has_gen) {
            fail("slack bus " + std::to_string(buses_[slack_].id) + " has no generator");
        }
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            if (buses_[i].kind == BusKind::Generator && gen_at_[i] < 0) {
                fail("pv bus " + std::to_string(buses_[i].id) + " has no generator");
            }
        }

        for (auto const& sh : shunts_) {
            auto name = "shunt at bus " + std::to_string(sh.bus);
            resolve(sh.bus, name);
            if (!(sh.q_min <= sh.q_max)) {
                fail(name + ": requires q_min <= q_max");
            }
            if (!(sh.step > 0.0)) {
                fail(name + ": step must be positive");
            }
        }

        // connectivity
        std::vector<std::vector<std::size_t>> adj(buses_.size());
        for (auto const& br : branches_) {
            auto f = index_.at(br.from);
            auto t = index_.at(br.to);
            adj[f].push_back(t);
            adj[t].push_back(f);
        }
        std::vector<bool> seen(buses_.size(), false);
        std::queue<std::size_t> q;
        q.push(slack_);
        seen[slack_] = true;
        std::size_t reached = 1;
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            for (auto v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    ++reached;
                    q.push(v);
                }
            }
        }
        if (reached != buses_.size()) {
            for (std::size_t i = 0; i < buses_.size(); ++i) {
                if (!seen[i]) {
                    fail("network is not connected: bus " + std::to_string(buses_[i].id) + " is unreachable from the slack");
                }
            }
        }
    }

    double base_mva_;
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    std::vector<ShuntCompensator> shunts_;

    std::map<int, std::size_t> index_;
    std::vector<int> gen_at_;
    std::vector<std::size_t> tap_branches_;
    std::size_t slack_ = 0;
    std::size_t slack_gen_ = 0;
};

// ---------------------------------------------------------------------------
// Case file I/O

namespace detail {
    using nlohmann::json;

    inline void check_keys(json const& obj, std::string const& where,
        std::initializer_list<std::string_view> required, std::initializer_list<std::string_view> optional = {})
    {
        if (!obj.is_object()) {
            throw ParseError(where + ": expected an object");
        }
        for (auto const& [key, _] : obj.items()) {
            bool known = std::find(required.begin(), required.end(), key) != required.end()
                || std::find(optional.begin(), optional.end(), key) != optional.end();
            if (!known) {
                throw ParseError(where + ": unknown key '" + key + "'");
            }
        }
        for (auto key : required) {
            if (!obj.contains(std::string(key))) {
                throw ParseError(where + ": missing key '" + std::string(key) + "'");
            }
        }
    }

    inline auto number(json const& obj, std::string const& key, std::string const& where) -> double
    {
        auto const& v = obj.at(key);
        if (!v.is_number()) {
            throw ParseError(where + ": '" + key + "' must be a number");
        }
        return v.get<double>();
    }

    inline auto integer(json const& obj, std::string const& key, std::string const& where) -> int
    {
        auto const& v = obj.at(key);
        if (!v.is_number_integer()) {
            throw ParseError(where + ": '" + key + "' must be an integer");
        }
        return v.get<int>();
    }

    inline auto array(json const& obj, std::string const& key, std::string const& where) -> json const&
    {
        auto const& v = obj.at(key);
        if (!v.is_array()) {
            throw ParseError(where + ": '" + key + "' must be an array");
        }
        return v;
    }

    inline auto parse_curve(json const& obj, std::string const& where, char const* k2, char const* k1, char const* k0)
        -> QuadraticCurve
    {
        check_keys(obj, where, { k2, k1, k0 });
        return { number(obj, k2, where), number(obj, k1, where), number(obj, k0, where) };
    }
} // namespace detail

inline auto parse_case(nlohmann::json const& doc) -> PowerNetwork
{
    using namespace detail;
    check_keys(doc, "case", { "base_mva", "buses", "branches", "generators", "shunts" });
    double base = number(doc, "base_mva", "case");
    if (!(base > 0.0)) {
        throw ValidationError("base_mva must be positive");
    }

    std::vector<Bus> buses;
    for (auto const& jb : array(doc, "buses", "case")) {
        std::string where = "bus";
        check_keys(jb, where, { "id", "kind", "v_min", "v_max", "u_ref", "p_load_mw", "q_load_mvar" },
            { "negative_load", "gs_mw", "bs_mvar" });
        Bus b;
        b.id = integer(jb, "id", where);
        where = "bus " + std::to_string(b.id);
        auto const& kind = jb.at("kind");
        if (!kind.is_string()) {
            throw ParseError(where + ": 'kind' must be a string");
        }
        auto k = kind.get<std::string>();
        if (k == "slack") {
            b.kind = BusKind::Slack;
        } else if (k == "pv") {
            b.kind = BusKind::Generator;
        } else if (k == "pq") {
            b.kind = BusKind::Load;
        } else {
            throw ParseError(where + ": unknown kind '" + k + "'");
        }
        b.v_min = number(jb, "v_min", where);
        b.v_max = number(jb, "v_max", where);
        b.u_ref = number(jb, "u_ref", where);
        b.p_load = number(jb, "p_load_mw", where) / base;
        b.q_load = number(jb, "q_load_mvar", where) / base;
        if (jb.contains("negative_load")) {
            if (!jb["negative_load"].is_boolean()) {
                throw ParseError(where + ": 'negative_load' must be a boolean");
            }
            b.negative_load = jb["negative_load"].get<bool>();
        }
        if (jb.contains("gs_mw")) {
            b.g_shunt = number(jb, "gs_mw", where) / base;
        }
        if (jb.contains("bs_mvar")) {
            b.b_shunt = number(jb, "bs_mvar", where) / base;
        }
        buses.push_back(b);
    }

    std::vector<Branch> branches;
    for (auto const& jb : array(doc, "branches", "case")) {
        std::string where = "branch";
        check_keys(jb, where, { "from", "to", "r_pu", "x_pu", "b_pu", "s_max_mva", "tap" }, { "ratio" });
        Branch br;
        br.from = integer(jb, "from", where);
        br.to = integer(jb, "to", where);
        where = "branch " + std::to_string(br.from) + "-" + std::to_string(br.to);
        br.r = number(jb, "r_pu", where);
        br.x = number(jb, "x_pu", where);
        br.b_sh = number(jb, "b_pu", where);
        br.s_max = number(jb, "s_max_mva", where) / base;
        if (jb.contains("ratio")) {
            br.ratio = number(jb, "ratio", where);
        }
        auto const& jt = jb.at("tap");
        if (!jt.is_null()) {
            check_keys(jt, where + " tap", { "t_min", "t_max", "step" });
            br.tap = TapSpec { number(jt, "t_min", where), number(jt, "t_max", where), number(jt, "step", where) };
        }
        branches.push_back(br);
    }

    std::vector<Generator> generators;
    for (auto const& jg : array(doc, "generators", "case")) {
        std::string where = "generator";
        check_keys(jg, where, { "bus", "p_min_mw", "p_max_mw", "q_min_mvar", "q_max_mvar", "cost", "emission" });
        Generator g;
        g.bus = integer(jg, "bus", where);
        where = "generator at bus " + std::to_string(g.bus);
        g.p_min = number(jg, "p_min_mw", where) / base;
        g.p_max = number(jg, "p_max_mw", where) / base;
        g.q_min = number(jg, "q_min_mvar", where) / base;
        g.q_max = number(jg, "q_max_mvar", where) / base;
        g.cost = parse_curve(jg.at("cost"), where + " cost", "alpha", "beta", "gamma");
        g.emission = parse_curve(jg.at("emission"), where + " emission", "a", "b", "c");
        generators.push_back(g);
    }

    std::vector<ShuntCompensator> shunts;
    for (auto const& js : array(doc, "shunts", "case")) {
        std::string where = "shunt";
        check_keys(js, where, { "bus", "q_min_mvar", "q_max_mvar", "step_mvar" });
        ShuntCompensator s;
        s.bus = integer(js, "bus", where);
        where = "shunt at bus " + std::to_string(s.bus);
        s.q_min = number(js, "q_min_mvar", where) / base;
        s.q_max = number(js, "q_max_mvar", where) / base;
        s.step = number(js, "step_mvar", where) / base;
        shunts.push_back(s);
    }

    return PowerNetwork(base, std::move(buses), std::move(branches), std::move(generators), std::move(shunts));
}

inline auto parse_case(std::string_view text) -> PowerNetwork
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const& e) {
        throw ParseError(std::string("case is not valid JSON: ") + e.what());
    }
    return parse_case(doc);
}

inline auto load_case(std::filesystem::path const& path) -> PowerNetwork
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open case file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto const text = ss.str();
    try {
        return parse_case(std::string_view(text));
    } catch (ParseError const& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (ValidationError const& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

inline auto case_to_json(PowerNetwork const& net) -> nlohmann::json
{
    using nlohmann::json;
    double base = net.base_mva();
    json doc;
    doc["base_mva"] = base;
    doc["buses"] = json::array();
    for (auto const& b : net.buses()) {
        json jb = { { "id", b.id }, { "kind", to_string(b.kind) }, { "v_min", b.v_min }, { "v_max", b.v_max },
            { "u_ref", b.u_ref }, { "p_load_mw", b.p_load * base }, { "q_load_mvar", b.q_load * base } };
        if (b.negative_load) {
            jb["negative_load"] = true;
        }
        if (b.g_shunt != 0.0) {
            jb["gs_mw"] = b.g_shunt * base;
        }
        if (b.b_shunt != 0.0) {
            jb["bs_mvar"] = b.b_shunt * base;
        }
        doc["buses"].push_back(jb);
    }
    doc["branches"] = json::array();
    for (auto const& br : net.branches()) {
        json jb = { { "from", br.from }, { "to", br.to }, { "r_pu", br.r }, { "x_pu", br.x }, { "b_pu", br.b_sh },
            { "s_max_mva", br.s_max * base }, { "tap", nullptr } };
        if (br.tap) {
            jb["tap"] = { { "t_min", br.tap->t_min }, { "t_max", br.tap->t_max }, { "step", br.tap->step } };
        }
        if (br.ratio != 1.0) {
            jb["ratio"] = br.ratio;
        }
        doc["branches"].push_back(jb);
    }
    doc["generators"] = json::array();
    for (auto const& g : net.generators()) {
        doc["generators"].push_back({ { "bus", g.bus }, { "p_min_mw", g.p_min * base }, { "p_max_mw", g.p_max * base },
            { "q_min_mvar", g.q_min * base }, { "q_max_mvar", g.q_max * base },
            { "cost", { { "alpha", g.cost.quadratic }, { "beta", g.cost.linear }, { "gamma", g.cost.constant } } },
            { "emission", { { "a", g.emission.quadratic }, { "b", g.emission.linear }, { "c", g.emission.constant } } } });
    }
    doc["shunts"] = json::array();
    for (auto const& s : net.shunts()) {
        doc["shunts"].push_back({ { "bus", s.bus }, { "q_min_mvar", s.q_min * base }, { "q_max_mvar", s.q_max * base },
            { "step_mvar", s.step * base } });
    }
    return doc;
}

inline void save_case(PowerNetwork const& net, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write case file " + path.string());
    }
    out << case_to_json(net).dump(1) << '\n';
}

// Replace generator cost/emission coefficients from an override document:
// {"generators":[{"bus":int,"cost":{...},"emission":{...}}]}. Either curve may be omitted.
inline auto with_coefficients(PowerNetwork const& net, nlohmann::json const& doc) -> PowerNetwork
{
    using namespace detail;
    check_keys(doc, "coefficients", { "generators" });
    std::vector<Generator> gens(net.generators().begin(), net.generators().end());
    for (auto const& jg : array(doc, "generators", "coefficients")) {
        check_keys(jg, "coefficients generator", { "bus" }, { "cost", "emission" });
        int bus = integer(jg, "bus", "coefficients generator");
        auto it = std::find_if(gens.begin(), gens.end(), [&](auto const& g) { return g.bus == bus; });
        if (it == gens.end()) {
            throw ValidationError("coefficients: no generator at bus " + std::to_string(bus));
        }
        auto where = "coefficients for bus " + std::to_string(bus);
        if (jg.contains("cost")) {
            it->cost = parse_curve(jg["cost"], where + " cost", "alpha", "beta", "gamma");
        }
        if (jg.contains("emission")) {
            it->emission = parse_curve(jg["emission"], where + " emission", "a", "b", "c");
        }
    }
    return PowerNetwork(net.base_mva(), { net.buses().begin(), net.buses().end() },
        { net.branches().begin(), net.branches().end() }, std::move(gens), { net.shunts().begin(), net.shunts().end() });
}

// ---------------------------------------------------------------------------
// Admittance matrix

// Accumulates pi-model branch stamps; the tap sits on the from side.
class AdmittanceBuilder {
public:
    explicit AdmittanceBuilder(std::size_t n)
        : n_(n)
    {
    }

    void add_branch(std::size_t from, std::size_t to, double r, double x, double b_sh, double tap = 1.0)
    {
        Complex ys = 1.0 / Complex(r, x);
        Complex ych(0.0, b_sh / 2.0);
        auto f = static_cast<Eigen::Index>(from);
        auto t = static_cast<Eigen::Index>(to);
        triplets_.emplace_back(f, f, (ys + ych) / (tap * tap));
        triplets_.emplace_back(t, t, ys + ych);
        triplets_.emplace_back(f, t, -ys / tap);
        triplets_.emplace_back(t, f, -ys / tap);
    }

    void add_shunt(std::size_t bus, Complex y)
    {
        auto i = static_cast<Eigen::Index>(bus);
        triplets_.emplace_back(i, i, y);
    }

    [[nodiscard]] auto build() const -> SparseComplex
    {
        SparseComplex y(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
        y.setFromTriplets(triplets_.begin(), triplets_.end());
        y.makeCompressed();
        return y;
    }

private:
    std::size_t n_;
    std::vector<Eigen::Triplet<Complex>> triplets_;
};

struct AdmittanceMatrix {
    SparseComplex y;
    std::vector<std::size_t> load_buses; // kind pq, in bus order
    std::vector<std::size_t> gen_buses;  // slack and pv, in bus order
    SparseComplex y_ll;
    SparseComplex y_lg;

    [[nodiscard]] auto dense() const -> Eigen::MatrixXcd { return Eigen::MatrixXcd(y); }
};

// Tap values per adjustable branch (network().tap_branches() order) and compensator
// susceptances per shunt (p.u.). Empty spans mean tap 1.0 and compensators at q_min.
inline auto build_admittance(PowerNetwork const& net, std::span<const double> taps = {},
    std::span<const double> shunts = {}) -> AdmittanceMatrix
{
    auto tap_branches = net.tap_branches();
    if (!taps.empty() && taps.size() != tap_branches.size()) {
        throw std::invalid_argument("expected " + std::to_string(tap_branches.size()) + " tap values");
    }
    if (!shunts.empty() && shunts.size() != net.shunts().size()) {
        throw std::invalid_argument("expected " + std::to_string(net.shunts().size()) + " shunt values");
    }

    std::size_t n = net.bus_count();
    AdmittanceBuilder builder(n);
    std::size_t next_tap = 0;
    for (std::size_t k = 0; k < net.branches().size(); ++k) {
        auto const& br = net.branches()[k];
        double ratio = br.ratio;
        if (br.tap) {
            ratio = taps.empty() ? 1.0 : taps[next_tap];
            ++next_tap;
            constexpr double slack = 1e-9;
            if (ratio < br.tap->t_min - slack || ratio > br.tap->t_max + slack) {
                throw std::out_of_range("tap " + std::to_string(ratio) + " on branch " + std::to_string(br.from) + "-"
                    + std::to_string(br.to) + " outside [" + std::to_string(br.tap->t_min) + ", "
                    + std::to_string(br.tap->t_max) + "]");
            }
        }
        builder.add_branch(net.bus_index(br.from), net.bus_index(br.to), br.r, br.x, br.b_sh, ratio);
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto const& b = net.buses()[i];
        if (b.g_shunt != 0.0 || b.b_shunt != 0.0) {
            builder.add_shunt(i, Complex(b.g_shunt, b.b_shunt));
        }
    }
    for (std::size_t s = 0; s < net.shunts().size(); ++s) {
        auto const& sh = net.shunts()[s];
        double q = shunts.empty() ? sh.q_min : shunts[s];
        if (q != 0.0) {
            builder.add_shunt(net.bus_index(sh.bus), Complex(0.0, q));
        }
    }

    AdmittanceMatrix out;
    out.y = builder.build();
    std::vector<Eigen::Index> pos(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        auto& list = net.buses()[i].kind == BusKind::Load ? out.load_buses : out.gen_buses;
        pos[i] = static_cast<Eigen::Index>(list.size());
        list.push_back(i);
    }
    std::vector<Eigen::Triplet<Complex>> ll;
    std::vector<Eigen::Triplet<Complex>> lg;
    for (Eigen::Index col = 0; col < out.y.outerSize(); ++col) {
        for (SparseComplex::InnerIterator it(out.y, col); it; ++it) {
            auto r = static_cast<std::size_t>(it.row());
            auto c = static_cast<std::size_t>(it.col());
            if (net.buses()[r].kind != BusKind::Load) {
                continue;
            }
            if (net.buses()[c].kind == BusKind::Load) {
                ll.emplace_back(pos[r], pos[c], it.value());
            } else {
                lg.emplace_back(pos[r], pos[c], it.value());
            }
        }
    }
    auto nl = static_cast<Eigen::Index>(out.load_buses.size());
    auto ng = static_cast<Eigen::Index>(out.gen_buses.size());
    out.y_ll.resize(nl, nl);
    out.y_ll.setFromTriplets(ll.begin(), ll.end());
    out.y_lg.resize(nl, ng);
    out.y_lg.setFromTriplets(lg.begin(), lg.end());
    return out;
}

} // namespace maopf

#endif
