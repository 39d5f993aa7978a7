#include "gamelab/scenario.hpp"

#include "gamelab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace gamelab {

using nlohmann::json;

std::string_view game_type(const GameSpec& g)
{
    switch (g.index()) {
    case 0: return "aloha";
    case 1: return "power";
    case 2: return "linear";
    default: return "power_cost";
    }
}

namespace {

// A JSON value plus the dotted path used in diagnostics.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigError("field '" + path_ + "': " + msg);
    }

    const std::string& path() const { return path_; }
    const json& raw() const { return j_; }

    void expect_object(std::initializer_list<std::string_view> allowed) const
    {
        if (!j_.is_object())
            fail("expected an object");
        for (const auto& [key, value] : j_.items())
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                Node(value, child_path(key)).fail("unknown key");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::optional<Node> find(const std::string& key) const
    {
        auto it = j_.find(key);
        if (it == j_.end())
            return std::nullopt;
        return Node(*it, child_path(key));
    }

    Node at(const std::string& key) const
    {
        auto n = find(key);
        if (!n)
            fail("missing required key '" + key + "'");
        return *n;
    }

    Node operator[](std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }

    double number() const
    {
        if (!j_.is_number())
            fail("expected a number");
        const double v = j_.get<double>();
        if (!std::isfinite(v))
            fail("expected a finite number");
        return v;
    }

    double positive() const
    {
        const double v = number();
        if (!(v > 0.0))
            fail("must be positive");
        return v;
    }

    std::uint64_t unsigned_integer() const
    {
        if (!j_.is_number_unsigned())
            fail("expected a nonnegative integer");
        return j_.get<std::uint64_t>();
    }

    std::string string() const
    {
        if (!j_.is_string())
            fail("expected a string");
        return j_.get<std::string>();
    }

    std::size_t size() const
    {
        if (!j_.is_array())
            fail("expected an array");
        return j_.size();
    }

    std::vector<double> numbers(std::optional<std::size_t> exact = std::nullopt) const
    {
        const std::size_t n = size();
        if (exact && n != *exact)
            fail("expected " + std::to_string(*exact) + " entries, got " + std::to_string(n));
        std::vector<double> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back((*this)[i].number());
        return out;
    }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
};

double number_or(const Node& obj, const std::string& key, double fallback)
{
    auto n = obj.find(key);
    return n ? n->number() : fallback;
}

// Rewraps library validation failures as configuration errors on the given node.
template <class F>
auto build(const Node& where, F&& make) -> decltype(make())
{
    try {
        return make();
    } catch (const DomainError& e) {
        where.fail(e.what());
    } catch (const UnsupportedError& e) {
        where.fail(e.what());
    }
}

CostBasis parse_basis(const Node& obj)
{
    auto n = obj.find("cost_basis");
    if (!n)
        return CostBasis::Throughput;
    const auto s = n->string();
    if (s == "throughput")
        return CostBasis::Throughput;
    if (s == "power")
        return CostBasis::Power;
    n->fail("expected \"throughput\" or \"power\"");
}

ClipBox parse_clip(const Node& obj)
{
    ClipBox clip;
    if (auto n = obj.find("clip")) {
        const auto v = n->numbers(2);
        clip.q_min = v[0];
        clip.q_max = v[1];
    }
    return clip;
}

double parse_alpha(const Node& obj)
{
    auto n = obj.find("alpha");
    if (!n)
        return 1.0;
    const double a = n->number();
    if (!(a >= 0.0 && a <= 1.0))
        n->fail("alpha must lie in [0,1]");
    return a;
}

UtilitySpec parse_utility(const Node& n)
{
    n.expect_object({"family", "demand", "price", "u", "beta", "slope", "saturation"});
    const auto family = n.at("family").string();
    const double price = number_or(n, "price", 1.0);
    return build(n, [&] {
        if (family == "arctan")
            return UtilitySpec::arctan(n.at("demand").number(), price);
        if (family == "arctan_scaled")
            return UtilitySpec::arctan_scaled(n.at("u").number(), n.at("beta").number(), price);
        if (family == "linear")
            return UtilitySpec::linear(n.at("slope").number(), price);
        if (family == "saturating")
            return UtilitySpec::saturating(n.at("demand").number(), n.at("saturation").number(), price);
        n.at("family").fail("unknown utility family '" + family + "'");
    });
}

AlohaGame parse_aloha(const Node& g)
{
    g.expect_object({"type", "demands", "utilities", "alpha", "clip", "cost_basis"});
    const bool by_demand = g.has("demands");
    if (by_demand == g.has("utilities"))
        g.fail("give exactly one of 'demands' or 'utilities'");
    const double alpha = parse_alpha(g);
    const ClipBox clip = parse_clip(g);
    const CostBasis basis = parse_basis(g);
    std::vector<UtilitySpec> players;
    if (by_demand) {
        const auto d = g.at("demands");
        const auto y = d.numbers();
        for (std::size_t i = 0; i < y.size(); ++i)
            players.push_back(build(d[i], [&] { return UtilitySpec::arctan(y[i], 1.0); }));
    } else {
        const auto u = g.at("utilities");
        for (std::size_t i = 0; i < u.size(); ++i)
            players.push_back(parse_utility(u[i]));
    }
    return build(g, [&] { return AlohaGame(players, alpha, clip, basis); });
}

Eigen::MatrixXd parse_matrix(const Node& n, bool in_db)
{
    const std::size_t rows = n.size();
    if (rows == 0)
        n.fail("gain matrix must be non-empty");
    Eigen::MatrixXd m(rows, rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = n[r].numbers(rows);
        for (std::size_t c = 0; c < rows; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = in_db ? db_to_linear(row[c]) : row[c];
    }
    return m;
}

// Exactly one of key / key_db, the latter converted from decibels.
std::optional<double> linear_or_db(const Node& obj, const std::string& key)
{
    auto lin = obj.find(key);
    auto db = obj.find(key + "_db");
    if (lin && db)
        obj.fail("give either '" + key + "' or '" + key + "_db', not both");
    if (lin)
        return lin->number();
    if (db)
        return db_to_linear(db->number());
    return std::nullopt;
}

ModulationModel parse_modulation(const Node& n)
{
    n.expect_object({"scheme", "bits", "kappa"});
    ModulationModel m;
    if (auto s = n.find("scheme"))
        m.scheme = build(*s, [&] { return modulation_from_string(s->string()); });
    if (auto b = n.find("bits")) {
        const auto bits = b->unsigned_integer();
        if (bits < 1 || bits > 1u << 30)
            b->fail("bits per frame must lie in [1, 2^30]");
        m.bits = static_cast<int>(bits);
    }
    if (auto k = n.find("kappa"))
        m.kappa = k->number();
    build(n, [&] { m.validate(); });
    return m;
}

PowerScenario parse_power(const Node& g)
{
    g.expect_object({"type", "noise", "noise_db", "gains", "gains_db", "processing_gain", "processing_gain_db",
                     "modulation", "demands", "alpha", "cost_basis", "price", "power_price", "cap"});
    const auto noise = linear_or_db(g, "noise");
    if (!noise)
        g.fail("missing 'noise' or 'noise_db'");
    const bool lin = g.has("gains");
    if (lin == g.has("gains_db"))
        g.fail("give exactly one of 'gains' or 'gains_db'");
    const Eigen::MatrixXd h = lin ? parse_matrix(g.at("gains"), false) : parse_matrix(g.at("gains_db"), true);
    const double pg = linear_or_db(g, "processing_gain").value_or(1.0);
    ChannelModel channel = build(g, [&] { return ChannelModel(*noise, h, pg); });

    ModulationModel mod;
    if (auto m = g.find("modulation"))
        mod = parse_modulation(*m);
    const auto demands = g.at("demands").numbers(channel.size());
    const double alpha = parse_alpha(g);
    const CostBasis basis = parse_basis(g);
    const double price = number_or(g, "price", 1.0);
    const double power_price = number_or(g, "power_price", 1e-3);
    std::optional<double> cap;
    if (auto c = g.find("cap"))
        cap = c->positive();
    PowerGame game = build(g, [&] { return PowerGame(channel, mod, demands, alpha, basis, price, power_price); });
    return {std::move(game), cap};
}

LinearGame parse_linear(const Node& g)
{
    g.expect_object({"type", "u", "price", "alpha", "cost_basis"});
    LinearGame lg;
    const auto u = g.at("u").numbers(2);
    lg.u = {u[0], u[1]};
    lg.price = number_or(g, "price", 1.0);
    lg.alpha = parse_alpha(g);
    lg.basis = parse_basis(g);
    build(g, [&] { lg.validate(); });
    return lg;
}

PowerCostGame parse_power_cost(const Node& g)
{
    g.expect_object({"type", "u", "beta", "price", "clip", "regime_ratio"});
    const auto u = g.at("u").numbers(2);
    const auto beta = g.at("beta").numbers(2);
    const double price = number_or(g, "price", 1.0);
    const ClipBox clip = parse_clip(g);
    const double ratio = number_or(g, "regime_ratio", 20.0);
    return build(g, [&] {
        return PowerCostGame({UtilitySpec::arctan_scaled(u[0], beta[0], price),
                              UtilitySpec::arctan_scaled(u[1], beta[1], price)},
                             clip, ratio);
    });
}

GameSpec parse_game(const Node& g)
{
    const auto type = g.at("type").string();
    if (type == "aloha")
        return parse_aloha(g);
    if (type == "power")
        return parse_power(g);
    if (type == "linear")
        return parse_linear(g);
    if (type == "power_cost")
        return parse_power_cost(g);
    g.at("type").fail("unknown game type '" + type + "'");
}

GridSpec parse_grid(const Node& n)
{
    n.expect_object({"x", "y", "nx", "ny"});
    GridSpec grid;
    const auto x = n.at("x").numbers(2);
    const auto y = n.at("y").numbers(2);
    if (!(x[0] <= x[1]))
        n.at("x").fail("lower bound exceeds upper bound");
    if (!(y[0] <= y[1]))
        n.at("y").fail("lower bound exceeds upper bound");
    grid.x_lo = x[0];
    grid.x_hi = x[1];
    grid.y_lo = y[0];
    grid.y_hi = y[1];
    for (const char* key : {"nx", "ny"})
        if (auto k = n.find(key)) {
            const auto v = k->unsigned_integer();
            if (v < 1 || v > 100000)
                k->fail("grid size must lie in [1, 100000]");
            (key[1] == 'x' ? grid.nx : grid.ny) = static_cast<std::size_t>(v);
        }
    return grid;
}

std::vector<double> parse_alphas(const Node& n)
{
    std::vector<double> alphas;
    if (n.raw().is_array()) {
        alphas = n.numbers();
    } else {
        n.expect_object({"from", "to", "steps"});
        const double from = n.at("from").number();
        const double to = n.at("to").number();
        const auto steps = n.at("steps").unsigned_integer();
        if (steps < 2 || steps > 1000000)
            n.at("steps").fail("steps must lie in [2, 1000000]");
        for (std::uint64_t k = 0; k < steps; ++k)
            alphas.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(steps - 1));
    }
    if (alphas.empty())
        n.fail("alpha list must be non-empty");
    for (std::size_t i = 0; i < alphas.size(); ++i)
        if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0))
            n.fail("alpha " + std::to_string(alphas[i]) + " lies outside [0,1]");
    return alphas;
}

SimulateParams parse_simulate(const Node& n)
{
    n.expect_object({"field", "lyapunov", "start", "dt", "t_end", "stride"});
    SimulateParams p;
    if (auto f = n.find("field"))
        p.field = f->string();
    if (auto l = n.find("lyapunov"))
        p.lyapunov = l->string();
    if (auto s = n.find("start")) {
        if (s->raw().is_string()) {
            if (s->string() != "random")
                s->fail("expected an array or \"random\"");
            p.random_start = true;
        } else {
            p.start = s->numbers();
        }
    }
    if (auto d = n.find("dt")) {
        p.dt = d->positive();
        if (p.dt > 0.1)
            d->fail("dt must not exceed 0.1");
    }
    if (auto t = n.find("t_end"))
        p.t_end = t->positive();
    if (auto s = n.find("stride")) {
        const auto v = s->unsigned_integer();
        if (v < 1)
            s->fail("stride must be at least 1");
        p.stride = static_cast<std::size_t>(v);
    }
    return p;
}

SweepParams parse_sweep(const Node& n)
{
    n.expect_object({"alphas", "threshold_width", "nep_indices", "start"});
    SweepParams p;
    if (auto a = n.find("alphas"))
        p.alphas = parse_alphas(*a);
    if (auto w = n.find("threshold_width"))
        p.threshold_width = w->positive();
    if (auto idx = n.find("nep_indices"))
        for (std::size_t i = 0; i < idx->size(); ++i)
            p.nep_indices.push_back(static_cast<std::size_t>((*idx)[i].unsigned_integer()));
    if (auto s = n.find("start"))
        p.start = s->numbers(2);
    return p;
}

ContourParams parse_contour(const Node& n)
{
    n.expect_object({"function", "alpha", "grid", "offset"});
    ContourParams p;
    if (auto f = n.find("function"))
        p.function = f->string();
    if (auto a = n.find("alpha")) {
        p.alpha = a->number();
        if (!(*p.alpha >= 0.0 && *p.alpha <= 1.0))
            a->fail("alpha must lie in [0,1]");
    }
    if (auto g = n.find("grid"))
        p.grid = parse_grid(*g);
    p.offset = number_or(n, "offset", 0.0);
    return p;
}

BasinParams parse_basin(const Node& n)
{
    n.expect_object({"field", "grid", "attractors", "radius", "mode", "dt", "t_end"});
    BasinParams p;
    if (auto f = n.find("field"))
        p.field = f->string();
    if (auto g = n.find("grid"))
        p.grid = parse_grid(*g);
    if (auto r = n.find("radius"))
        p.radius = r->positive();
    if (auto a = n.find("attractors"))
        for (std::size_t i = 0; i < a->size(); ++i) {
            const Node item = (*a)[i];
            item.expect_object({"label", "q", "radius"});
            Attractor at;
            at.label = item.at("label").string();
            at.location = item.at("q").numbers(2);
            at.radius = item.has("radius") ? item.at("radius").positive() : p.radius;
            p.attractors.push_back(std::move(at));
        }
    if (auto m = n.find("mode")) {
        const auto s = m->string();
        if (s == "limit")
            p.mode = BasinMode::Limit;
        else if (s == "trend")
            p.mode = BasinMode::Trend;
        else
            m->fail("expected \"limit\" or \"trend\"");
    }
    if (auto d = n.find("dt")) {
        p.dt = d->positive();
        if (p.dt > 0.1)
            d->fail("dt must not exceed 0.1");
    }
    if (auto t = n.find("t_end"))
        p.t_end = t->positive();
    return p;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

Scenario parse_scenario(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::string msg = e.what();
        if (auto p = msg.find(": "); p != std::string::npos)
            msg = msg.substr(p + 2);
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
    }
    const Node root(doc, "");
    if (!doc.is_object())
        throw ConfigError("scenario must be a JSON object");
    root.expect_object({"game", "seed", "simulate", "sweep", "contour", "basin", "description"});
    Scenario s{parse_game(root.at("game")), 0, {}, {}, {}, {}};
    if (auto seed = root.find("seed"))
        s.seed = seed->unsigned_integer();
    if (auto n = root.find("simulate"))
        s.simulate = parse_simulate(*n);
    if (auto n = root.find("sweep"))
        s.sweep = parse_sweep(*n);
    if (auto n = root.find("contour"))
        s.contour = parse_contour(*n);
    if (auto n = root.find("basin"))
        s.basin = parse_basin(*n);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

} // namespace gamelab
