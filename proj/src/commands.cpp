#include "gamelab/commands.hpp"

#include "gamelab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace gamelab {

using nlohmann::json;

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

unsigned thread_budget()
{
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("GAME_LAB_THREADS");
    if (!env)
        return hw;
    const std::string_view text(env);
    unsigned value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || value == 0)
        throw ConfigError("GAME_LAB_THREADS must be a positive integer, got '" + std::string(text) + "'");
    return std::min(value, hw);
}

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// nlohmann writes non-finite doubles as null.
json num(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json vec(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(num(x));
    return a;
}

json complex_list(const std::vector<std::complex<double>>& ev)
{
    json a = json::array();
    for (const auto& z : ev)
        a.push_back(json::array({num(z.real()), num(z.imag())}));
    return a;
}

json linearize(const VectorField& field, const State& q)
{
    json out;
    try {
        const auto rep = classify(field, q);
        out["classification"] = to_string(rep.classification);
        out["residual"] = num(rep.residual);
        out["eigenvalues"] = complex_list(rep.eigenvalues);
        out["max_real"] = rep.eigenvalues.empty() ? json(nullptr) : num(rep.max_real_part());
    } catch (const Error& e) {
        out["classification"] = "error";
        out["error"] = e.what();
    }
    return out;
}

[[noreturn]] void config_fail(const std::string& path, const std::string& msg)
{
    throw ConfigError("field '" + path + "': " + msg);
}

double power_cap(const PowerScenario& p)
{
    return p.cap ? *p.cap : default_power_cap(p.game);
}

const AlohaGame& two_player_aloha(const Scenario& s, const char* command)
{
    const auto& g = std::get<AlohaGame>(s.game);
    if (g.size() != 2)
        throw ConfigError(std::string(command) + " needs a two-player ALOHA game");
    return g;
}

VectorField field_for(const Scenario& s, std::string name, const std::string& path)
{
    if (auto* g = std::get_if<AlohaGame>(&s.game)) {
        if (name.empty())
            name = "selfish";
        if (name == "selfish")
            return selfish_field(*g);
        if (g->size() != 2)
            config_fail(path, "only the selfish field is defined beyond two players");
        if (name == "altruistic")
            return altruistic_field(*g);
        if (name == "partial")
            return partial_field(*g);
        if (name == "blend_linear")
            return blend_linear_field(*g);
        if (name == "blend_tilde")
            return blend_tilde_field(*g);
    } else if (auto* p = std::get_if<PowerScenario>(&s.game)) {
        if (name.empty())
            name = "selfish";
        if (name == "selfish")
            return power_selfish_field(p->game, power_cap(*p));
        if (p->game.size() != 2 && (name == "altruistic" || name == "partial"))
            config_fail(path, "the " + name + " power field needs two flows");
        if (name == "altruistic")
            return power_altruistic_field(p->game, power_cap(*p));
        if (name == "partial")
            return power_partial_field(p->game, power_cap(*p));
    } else if (auto* l = std::get_if<LinearGame>(&s.game)) {
        if (name.empty() || name == "linear")
            return linear_field(*l);
    } else {
        const auto& pc = std::get<PowerCostGame>(s.game);
        if (name.empty() || name == "approx")
            return power_cost_approx_field(pc);
        if (name == "exact")
            return power_cost_exact_field(pc);
    }
    config_fail(path, "unknown field '" + name + "' for game type " + std::string(game_type(s.game)));
}

// Empty function when the name is "none" or nothing is paired with the field.
LyapunovFn lyapunov_for(const Scenario& s, std::string name, const std::string& field, const std::string& path,
                        std::optional<double> alpha = std::nullopt)
{
    if (name == "none")
        return {};
    const bool automatic = name == "auto";
    if (auto* g = std::get_if<AlohaGame>(&s.game)) {
        if (automatic) {
            if (field.empty() || field == "selfish")
                name = "selfish";
            else if (field == "altruistic")
                name = "altruistic";
            else if (field == "blend_tilde")
                name = "blend";
            else
                return {};
        }
        const auto y = g->demands();
        if (name == "selfish")
            return [y](const State& q) { return lyapunov_selfish(y, q); };
        if (g->size() == 2) {
            if (name == "altruistic")
                return [y](const State& q) { return lyapunov_altruistic(y, q); };
            if (name == "blend") {
                const double a = alpha.value_or(g->alpha());
                return [y, a](const State& q) { return lyapunov_blend(y, a, q); };
            }
        }
    } else if (auto* p = std::get_if<PowerScenario>(&s.game)) {
        if (automatic) {
            if (field.empty() || field == "selfish")
                name = "selfish";
            else if (field == "altruistic")
                name = "altruistic";
            else
                return {};
        }
        if (p->game.size() == 2) {
            const PowerGame game = p->game;
            if (name == "selfish")
                return [game](const State& q) { return lyapunov_power_selfish(game, q); };
            if (name == "altruistic")
                return [game](const State& q) { return lyapunov_power_altruistic(game, q); };
        }
    } else if (auto* pc = std::get_if<PowerCostGame>(&s.game)) {
        if (automatic) {
            if (field.empty() || field == "approx")
                name = "selfish";
            else
                return {};
        }
        if (name == "selfish") {
            const auto y = pc->demands();
            return [y](const State& q) { return lyapunov_powercost(y, q); };
        }
    } else if (automatic) {
        return {};
    }
    config_fail(path, "no Lyapunov function '" + name + "' for game type " + std::string(game_type(s.game)));
}

GridSpec default_grid(const Scenario& s)
{
    GridSpec g;
    if (auto* a = std::get_if<AlohaGame>(&s.game)) {
        g.x_lo = g.y_lo = a->clip().q_min;
        g.x_hi = g.y_hi = a->clip().q_max;
    } else if (auto* pc = std::get_if<PowerCostGame>(&s.game)) {
        g.x_lo = g.y_lo = pc->clip.q_min;
        g.x_hi = g.y_hi = pc->clip.q_max;
    } else if (auto* p = std::get_if<PowerScenario>(&s.game)) {
        g.x_lo = g.y_lo = 0.0;
        g.x_hi = g.y_hi = power_cap(*p);
    }
    return g;
}

json aloha_nep_report(const AlohaGame& game)
{
    json out;
    out["game"] = "aloha";
    out["alpha"] = game.alpha();
    out["discriminant"] = num(game.discriminant());
    json list = json::array();
    const auto neps = interior_neps(game);
    for (std::size_t k = 0; k < neps.size(); ++k) {
        const auto& q = neps[k].q;
        json e;
        e["index"] = k;
        e["q"] = vec(q);
        e["residual"] = num(nep_residual(game, q));
        e["outside_clip"] = neps[k].outside_clip;
        try {
            const auto c = stability_criteria(game, q);
            e["sigma"] = num(c.sigma_selfish);
            e["sigma_star"] = num(c.sigma_altruistic);
            e["selfish_stable"] = c.stable_selfish();
            e["altruistic_stable"] = c.stable_altruistic();
        } catch (const Error& err) {
            e["criteria_error"] = err.what();
        }
        e["dynamics"] = {{"selfish", linearize(selfish_field(game), q)},
                         {"altruistic", linearize(altruistic_field(game), q)},
                         {"partial", linearize(partial_field(game), q)}};
        list.push_back(std::move(e));
    }
    out["neps"] = std::move(list);
    if (neps.empty())
        out["note"] = game.discriminant() < 0.0 ? "negative discriminant: no real interior equilibrium"
                                                : "no interior equilibrium inside the unit square";
    return out;
}

json power_nep_report(const PowerScenario& p)
{
    const PowerGame& game = p.game;
    json out;
    out["game"] = "power";
    out["upsilon"] = vec(game.upsilon());
    const auto nep = power_nep(game);
    const double cap = power_cap(p);
    out["cap"] = cap;
    json e;
    e["index"] = 0;
    e["q"] = vec(nep.q);
    e["feasible"] = nep.feasible;
    std::vector<double> s;
    if (nep.feasible)
        for (std::size_t i = 0; i < game.size(); ++i)
            s.push_back(sinr(game.channel(), nep.q, i));
    e["sinr"] = vec(s);
    const auto f = selfish_power_response(game, nep.q);
    double res = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        res = std::max(res, std::abs(f[i] - nep.q[i]));
    e["residual"] = num(res);
    json dyn;
    dyn["selfish"] = linearize(power_selfish_field(game, cap), nep.q);
    if (game.size() == 2)
        dyn["altruistic"] = linearize(power_altruistic_field(game, cap), nep.q);
    e["dynamics"] = std::move(dyn);
    out["neps"] = json::array({std::move(e)});

    if (game.size() == 2) {
        const auto sp = stability_products(game);
        out["stability"] = {{"product", num(sp.product)},
                            {"selfish_stable", sp.selfish_stable},
                            {"altruistic_stable", sp.altruistic_stable},
                            {"marginal", sp.marginal}};
        const Eigen::Matrix2d h = lyapunov_power_altruistic_hessian(game);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
        const auto ev = es.eigenvalues();
        out["altruistic_lyapunov_hessian"] = {
            {"matrix", json::array({json::array({num(h(0, 0)), num(h(0, 1))}),
                                    json::array({num(h(1, 0)), num(h(1, 1))})})},
            {"eigenvalues", json::array({num(ev(0)), num(ev(1))})},
            {"indefinite", ev(0) < 0.0 && ev(1) > 0.0}};
    }
    return out;
}

json linear_nep_report(const LinearGame& g)
{
    json out;
    out["game"] = "linear";
    out["alpha"] = g.alpha;
    out["cost_basis"] = g.basis == CostBasis::Throughput ? "throughput" : "power";
    const State saddle = linear_saddle(g);
    out["thresholds"] = vec(saddle);
    json list = json::array();
    list.push_back({{"label", "(0,1)"}, {"q", json::array({0.0, 1.0})}, {"kind", "stable"}});
    list.push_back({{"label", "(1,0)"}, {"q", json::array({1.0, 0.0})}, {"kind", "stable"}});
    if (saddle[0] > 0.0 && saddle[0] < 1.0 && saddle[1] > 0.0 && saddle[1] < 1.0)
        list.push_back({{"label", "phi"}, {"q", vec(saddle)}, {"kind", "saddle"}});
    out["neps"] = std::move(list);
    return out;
}

json power_cost_nep_report(const PowerCostGame& g)
{
    json out;
    out["game"] = "power_cost";
    out["demands"] = vec({g.demands()[0], g.demands()[1]});
    json list = json::array();
    for (const char* name : {"approx", "exact"}) {
        const VectorField field = std::string(name) == "approx" ? power_cost_approx_field(g) : power_cost_exact_field(g);
        json e;
        e["response"] = name;
        try {
            const auto fp = find_fixed_point(field, {0.5, 0.5}, 1e-12);
            e["q"] = vec(fp.q);
            e["residual"] = num(fp.residual);
            e["dynamics"] = linearize(field, fp.q);
        } catch (const NonConvergenceError& err) {
            e["q"] = vec(err.last_iterate());
            e["residual"] = num(err.residual());
            e["error"] = err.what();
        }
        list.push_back(std::move(e));
    }
    out["neps"] = std::move(list);
    return out;
}

std::string str(const json& v)
{
    if (v.is_null())
        return "nan";
    if (v.is_number())
        return format_number(v.get<double>());
    if (v.is_boolean())
        return v.get<bool>() ? "1" : "0";
    if (v.is_string())
        return v.get<std::string>();
    return v.dump();
}

std::string join(const std::vector<std::string>& cells)
{
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

std::string nep_csv(const json& rep)
{
    const std::string type = rep["game"];
    std::string out;
    const auto q_cols = [](std::size_t n, const char* prefix) {
        std::vector<std::string> c;
        for (std::size_t i = 1; i <= n; ++i)
            c.push_back(prefix + std::to_string(i));
        return c;
    };
    const auto dyn_cells = [](const json& d) {
        return std::vector<std::string>{str(d.value("classification", json("error"))),
                                        str(d.value("max_real", json(nullptr)))};
    };
    if (type == "aloha") {
        out += join({"nep_index", "q_1", "q_2", "residual", "outside_clip", "sigma", "sigma_star",
                     "selfish_class", "selfish_max_re", "altruistic_class", "altruistic_max_re", "partial_class",
                     "partial_max_re"});
        for (const auto& e : rep["neps"]) {
            std::vector<std::string> row{str(e["index"]), str(e["q"][0]), str(e["q"][1]), str(e["residual"]),
                                         str(e["outside_clip"]), str(e.value("sigma", json(nullptr))),
                                         str(e.value("sigma_star", json(nullptr)))};
            for (const char* k : {"selfish", "altruistic", "partial"})
                for (auto& c : dyn_cells(e["dynamics"][k]))
                    row.push_back(c);
            out += join(row);
        }
    } else if (type == "power") {
        const auto& e = rep["neps"][0];
        const std::size_t n = e["q"].size();
        auto header = std::vector<std::string>{"nep_index"};
        for (auto& c : q_cols(n, "q_"))
            header.push_back(c);
        for (auto& c : q_cols(n, "sinr_"))
            header.push_back(c);
        for (const char* c : {"feasible", "residual", "product", "selfish_stable", "altruistic_stable"})
            header.push_back(c);
        out += join(header);
        std::vector<std::string> row{str(e["index"])};
        for (const auto& v : e["q"])
            row.push_back(str(v));
        for (std::size_t i = 0; i < n; ++i)
            row.push_back(i < e["sinr"].size() ? str(e["sinr"][i]) : "nan");
        row.push_back(str(e["feasible"]));
        row.push_back(str(e["residual"]));
        const json st = rep.value("stability", json::object());
        row.push_back(str(st.value("product", json(nullptr))));
        row.push_back(str(st.value("selfish_stable", json(nullptr))));
        row.push_back(str(st.value("altruistic_stable", json(nullptr))));
        out += join(row);
    } else if (type == "linear") {
        out += join({"label", "q_1", "q_2", "kind"});
        for (const auto& e : rep["neps"])
            out += join({str(e["label"]), str(e["q"][0]), str(e["q"][1]), str(e["kind"])});
    } else {
        out += join({"response", "q_1", "q_2", "residual", "classification", "max_re"});
        for (const auto& e : rep["neps"]) {
            std::vector<std::string> row{str(e["response"]), str(e["q"][0]), str(e["q"][1]), str(e["residual"])};
            for (auto& c : dyn_cells(e.value("dynamics", json::object())))
                row.push_back(c);
            out += join(row);
        }
    }
    return out;
}

std::string dump(const json& j)
{
    return j.dump(2) + "\n";
}

} // namespace

json nep_report(const Scenario& s)
{
    if (std::holds_alternative<AlohaGame>(s.game))
        return aloha_nep_report(two_player_aloha(s, "nep"));
    if (auto* p = std::get_if<PowerScenario>(&s.game))
        return power_nep_report(*p);
    if (auto* l = std::get_if<LinearGame>(&s.game))
        return linear_nep_report(*l);
    return power_cost_nep_report(std::get<PowerCostGame>(s.game));
}

VectorField simulation_field(const Scenario& s, const std::string& name)
{
    return field_for(s, name, "simulate.field");
}

TrajectoryLog run_simulation(const Scenario& s)
{
    const auto& p = s.simulate;
    const VectorField field = field_for(s, p.field, "simulate.field");
    const LyapunovFn lyap = lyapunov_for(s, p.lyapunov, p.field, "simulate.lyapunov");
    const Box& box = field.box();
    State q0;
    if (p.random_start) {
        std::mt19937_64 rng(s.seed);
        for (std::size_t i = 0; i < box.dimension(); ++i)
            q0.push_back(std::uniform_real_distribution<double>(box.lower[i], box.upper[i])(rng));
    } else if (p.start) {
        q0 = *p.start;
        if (q0.size() != box.dimension())
            config_fail("simulate.start", "expected " + std::to_string(box.dimension()) + " entries");
        if (!box.contains(q0))
            config_fail("simulate.start", "start lies outside the state box");
    } else {
        config_fail("simulate.start", "a start point (or \"random\") is required");
    }
    return integrate(field, q0, p.dt, p.t_end, lyap);
}

AlphaSweep run_aloha_sweep(const Scenario& s, unsigned threads)
{
    const AlohaGame& game = two_player_aloha(s, "sweep-alpha");
    const auto& p = s.sweep;
    std::vector<double> alphas = p.alphas;
    if (alphas.empty())
        for (int k = 0; k <= 20; ++k)
            alphas.push_back(k / 20.0);
    const auto neps = interior_neps(game);
    std::vector<std::size_t> chosen = p.nep_indices;
    if (chosen.empty())
        for (std::size_t k = 0; k < neps.size(); ++k)
            chosen.push_back(k);
    std::vector<State> pts;
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        if (chosen[k] >= neps.size())
            config_fail("sweep.nep_indices[" + std::to_string(k) + "]",
                        "no equilibrium with index " + std::to_string(chosen[k]) + " (game has "
                            + std::to_string(neps.size()) + ")");
        pts.push_back(neps[chosen[k]].q);
    }
    SweepOptions opt;
    opt.threshold_width = p.threshold_width;
    opt.threads = threads;
    AlphaSweep out = sweep_alpha(game, pts, alphas, opt);
    for (auto& c : out.cells)
        c.nep_index = chosen[c.nep_index];
    for (auto& sw : out.switches)
        sw.nep_index = chosen[sw.nep_index];
    return out;
}

std::vector<PowerSweepRow> run_power_sweep(const Scenario& s)
{
    const auto& p = std::get<PowerScenario>(s.game);
    if (p.game.size() != 2)
        throw ConfigError("sweep-alpha needs a two-flow power game");
    std::vector<double> alphas = s.sweep.alphas;
    if (alphas.empty()) {
        for (int k = 20; k >= 1; --k)
            alphas.push_back(k / 20.0);
        alphas.push_back(0.01);
        alphas.push_back(0.0);
    }
    PowerSweepOptions opt;
    opt.cap = p.cap;
    opt.start = s.sweep.start;
    return power_cost_alpha_sweep(p.game, alphas, opt);
}

ContourGrid run_contour(const Scenario& s)
{
    if (std::holds_alternative<LinearGame>(s.game))
        throw ConfigError("contour has no Lyapunov function for linear games");
    const auto& p = s.contour;
    const std::string name = p.function.empty() ? "selfish" : p.function;
    const LyapunovFn f = lyapunov_for(s, name, "", "contour.function", p.alpha);
    ContourGrid out{name, p.grid.value_or(default_grid(s)), {}};
    out.values.reserve(out.grid.nx * out.grid.ny);
    for (std::size_t iy = 0; iy < out.grid.ny; ++iy)
        for (std::size_t ix = 0; ix < out.grid.nx; ++ix) {
            double v;
            try {
                v = f(out.grid.point(ix, iy)) + p.offset;
            } catch (const Error&) {
                v = kNaN;
            }
            out.values.push_back(std::isfinite(v) ? v : kNaN);
        }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> local_minima(const ContourGrid& c)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto nx = static_cast<long>(c.grid.nx), ny = static_cast<long>(c.grid.ny);
    for (long iy = 0; iy < ny; ++iy)
        for (long ix = 0; ix < nx; ++ix) {
            const double v = c.at(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
            if (std::isnan(v))
                continue;
            bool lowest = true;
            for (long dy = -1; dy <= 1 && lowest; ++dy)
                for (long dx = -1; dx <= 1 && lowest; ++dx) {
                    const long jx = ix + dx, jy = iy + dy;
                    if ((dx == 0 && dy == 0) || jx < 0 || jy < 0 || jx >= nx || jy >= ny)
                        continue;
                    const double w = c.at(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy));
                    lowest = std::isnan(w) || v < w;
                }
            if (lowest)
                out.emplace_back(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
        }
    return out;
}

BasinGrid run_basin(const Scenario& s, unsigned threads)
{
    const auto& p = s.basin;
    const VectorField field = field_for(s, p.field, "basin.field");
    if (field.dimension() != 2)
        config_fail("basin.field", "basin grids need a two-dimensional state");
    std::vector<Attractor> attractors = p.attractors;
    if (attractors.empty()) {
        if (auto* l = std::get_if<LinearGame>(&s.game)) {
            attractors.push_back({"(0,1)", {0.0, 1.0}, p.radius});
            attractors.push_back({"(1,0)", {1.0, 0.0}, p.radius});
            const State saddle = linear_saddle(*l);
            if (saddle[0] > 0.0 && saddle[0] < 1.0 && saddle[1] > 0.0 && saddle[1] < 1.0)
                attractors.push_back({"phi", saddle, p.radius});
        } else if (auto* a = std::get_if<AlohaGame>(&s.game)) {
            const auto neps = interior_neps(*a);
            for (std::size_t k = 0; k < neps.size(); ++k)
                if (!neps[k].outside_clip)
                    attractors.push_back({"nep" + std::to_string(k), neps[k].q, p.radius});
        } else if (auto* pw = std::get_if<PowerScenario>(&s.game)) {
            const auto nep = power_nep(pw->game);
            if (nep.feasible)
                attractors.push_back({"nep", nep.q, p.radius});
        } else {
            const auto fp = find_fixed_point(field, {0.5, 0.5}, 1e-12);
            attractors.push_back({"nep", fp.q, p.radius});
        }
    }
    BasinOptions opt;
    opt.t_end = p.t_end;
    opt.dt = p.dt;
    opt.mode = p.mode;
    opt.threads = threads;
    GridSpec grid = p.grid.value_or(default_grid(s));
    return basin_sample(field, grid, attractors, opt);
}

CommandResult cmd_nep(const Scenario& s, OutputFormat f)
{
    const json rep = nep_report(s);
    CommandResult r;
    r.text = f == OutputFormat::Json ? dump(rep) : nep_csv(rep);
    if (rep.contains("note"))
        r.notes.push_back(rep["note"].get<std::string>());
    return r;
}

CommandResult cmd_simulate(const Scenario& s, OutputFormat f)
{
    const TrajectoryLog log = run_simulation(s);
    const double tol = IntegrateOptions{}.descent_tolerance;
    const std::size_t stride = s.simulate.stride;
    const bool has_v = !log.lyapunov.empty();
    CommandResult r;
    const auto emitted = [&](std::size_t k) { return k % stride == 0 || k + 1 == log.times.size(); };
    if (f == OutputFormat::Json) {
        json t = json::array(), q = json::array(), v = json::array();
        for (std::size_t k = 0; k < log.times.size(); ++k) {
            if (!emitted(k))
                continue;
            t.push_back(log.times[k]);
            q.push_back(vec(log.states[k]));
            if (has_v)
                v.push_back(num(log.lyapunov[k]));
        }
        json out{{"t", t}, {"q", q}, {"lyapunov", has_v ? v : json(nullptr)},
                 {"descent_violations", log.descent_violations}};
        r.text = dump(out);
    } else {
        const std::size_t n = log.states.front().size();
        std::vector<std::string> header{"t"};
        for (std::size_t i = 1; i <= n; ++i)
            header.push_back("q_" + std::to_string(i));
        header.push_back("lyapunov");
        header.push_back("descent_flag");
        std::string out = join(header);
        for (std::size_t k = 0; k < log.times.size(); ++k) {
            if (!emitted(k))
                continue;
            std::vector<std::string> row{format_number(log.times[k])};
            for (double x : log.states[k])
                row.push_back(format_number(x));
            if (has_v) {
                row.push_back(format_number(log.lyapunov[k]));
                row.push_back(k > 0 && log.lyapunov[k] - log.lyapunov[k - 1] > tol ? "1" : "0");
            } else {
                row.push_back("nan");
                row.push_back("0");
            }
            out += join(row);
        }
        r.text = std::move(out);
    }
    if (has_v)
        r.notes.push_back("descent violations: " + std::to_string(log.descent_violations));
    return r;
}

CommandResult cmd_sweep(const Scenario& s, OutputFormat f, unsigned threads)
{
    CommandResult r;
    if (std::holds_alternative<AlohaGame>(s.game)) {
        const AlphaSweep sw = run_aloha_sweep(s, threads);
        const auto cls = [](const SweepCell& c) {
            return c.error.empty() ? std::string(to_string(c.classification)) : std::string("error");
        };
        if (f == OutputFormat::Json) {
            json cells = json::array(), switches = json::array();
            for (const auto& c : sw.cells) {
                json e{{"alpha", c.alpha}, {"nep_index", c.nep_index}, {"max_re_eigenvalue", num(c.max_real)},
                       {"classification", cls(c)}};
                if (!c.error.empty())
                    e["error"] = c.error;
                cells.push_back(std::move(e));
            }
            for (const auto& x : sw.switches)
                switches.push_back({{"nep_index", x.nep_index}, {"alpha_lo", x.alpha_lo}, {"alpha_hi", x.alpha_hi},
                                    {"alpha", x.alpha()}, {"stable_above", x.stable_above}});
            r.text = dump(json{{"cells", cells}, {"switches", switches}});
        } else {
            r.text = join({"alpha", "nep_index", "max_re_eigenvalue", "classification"});
            for (const auto& c : sw.cells)
                r.text += join({format_number(c.alpha), std::to_string(c.nep_index), format_number(c.max_real), cls(c)});
        }
        for (const auto& x : sw.switches)
            r.notes.push_back("nep " + std::to_string(x.nep_index) + " changes stability at alpha in ["
                              + format_number(x.alpha_lo) + ", " + format_number(x.alpha_hi) + "], stable "
                              + (x.stable_above ? "above" : "below"));
        if (sw.switches.empty())
            r.notes.push_back("no stability switch on this alpha grid");
        return r;
    }
    if (std::holds_alternative<PowerScenario>(s.game)) {
        const auto rows = run_power_sweep(s);
        if (f == OutputFormat::Json) {
            json list = json::array();
            for (const auto& row : rows) {
                json e{{"alpha", row.alpha}, {"q", vec(row.q)}, {"norm", num(row.norm())},
                       {"residual", num(row.residual)}, {"converged", row.converged}};
                if (!row.error.empty())
                    e["error"] = row.error;
                list.push_back(std::move(e));
            }
            r.text = dump(json{{"rows", list}});
        } else {
            r.text = join({"alpha", "q_1", "q_2", "norm", "residual", "converged"});
            for (const auto& row : rows)
                r.text += join({format_number(row.alpha), format_number(row.q[0]), format_number(row.q[1]),
                                format_number(row.norm()), format_number(row.residual), row.converged ? "1" : "0"});
        }
        if (!rows.empty() && rows.front().norm() > 0.0)
            r.notes.push_back("equilibrium norm at alpha=" + format_number(rows.back().alpha) + " is "
                              + format_number(rows.back().norm() / rows.front().norm()) + " of its value at alpha="
                              + format_number(rows.front().alpha));
        return r;
    }
    throw ConfigError("sweep-alpha supports aloha and power games");
}

CommandResult cmd_contour(const Scenario& s, OutputFormat f)
{
    const ContourGrid c = run_contour(s);
    std::size_t best = c.values.size();
    for (std::size_t k = 0; k < c.values.size(); ++k)
        if (!std::isnan(c.values[k]) && (best == c.values.size() || c.values[k] < c.values[best]))
            best = k;
    CommandResult r;
    if (f == OutputFormat::Json) {
        json xs = json::array(), ys = json::array();
        for (std::size_t ix = 0; ix < c.grid.nx; ++ix)
            xs.push_back(c.grid.point(ix, 0)[0]);
        for (std::size_t iy = 0; iy < c.grid.ny; ++iy)
            ys.push_back(c.grid.point(0, iy)[1]);
        json out{{"function", c.function}, {"nx", c.grid.nx}, {"ny", c.grid.ny}, {"x", xs}, {"y", ys},
                 {"values", vec(c.values)}};
        json minima = json::array();
        for (const auto& [ix, iy] : local_minima(c))
            minima.push_back({{"ix", ix}, {"iy", iy}, {"q", vec(c.grid.point(ix, iy))}, {"value", num(c.at(ix, iy))}});
        out["local_minima"] = std::move(minima);
        if (best < c.values.size())
            out["argmin"] = {{"ix", best % c.grid.nx}, {"iy", best / c.grid.nx},
                             {"q", vec(c.grid.point(best % c.grid.nx, best / c.grid.nx))}};
        r.text = dump(out);
    } else {
        r.text = join({"q1", "q2", "value"});
        for (std::size_t iy = 0; iy < c.grid.ny; ++iy)
            for (std::size_t ix = 0; ix < c.grid.nx; ++ix) {
                const State q = c.grid.point(ix, iy);
                r.text += join({format_number(q[0]), format_number(q[1]), format_number(c.at(ix, iy))});
            }
    }
    if (best < c.values.size()) {
        const State q = c.grid.point(best % c.grid.nx, best / c.grid.nx);
        r.notes.push_back("grid minimum at (" + format_number(q[0]) + ", " + format_number(q[1]) + ")");
    }
    for (const auto& [ix, iy] : local_minima(c)) {
        const State q = c.grid.point(ix, iy);
        r.notes.push_back("local minimum at (" + format_number(q[0]) + ", " + format_number(q[1]) + ")");
    }
    return r;
}

CommandResult cmd_basin(const Scenario& s, OutputFormat f, unsigned threads)
{
    const BasinGrid b = run_basin(s, threads);
    CommandResult r;
    if (f == OutputFormat::Json) {
        json out{{"nx", b.grid.nx}, {"ny", b.grid.ny}, {"labels", b.labels}};
        json pts = json::array();
        for (std::size_t iy = 0; iy < b.grid.ny; ++iy)
            for (std::size_t ix = 0; ix < b.grid.nx; ++ix)
                pts.push_back(vec(b.grid.point(ix, iy)));
        out["points"] = std::move(pts);
        r.text = dump(out);
    } else {
        r.text = join({"q1", "q2", "label"});
        for (std::size_t iy = 0; iy < b.grid.ny; ++iy)
            for (std::size_t ix = 0; ix < b.grid.nx; ++ix) {
                const State q = b.grid.point(ix, iy);
                r.text += join({format_number(q[0]), format_number(q[1]), b.at(ix, iy)});
            }
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& l : b.labels)
        ++counts[l];
    for (const auto& [label, n] : counts)
        r.notes.push_back(label + ": " + std::to_string(n) + " cells");
    return r;
}

} // namespace gamelab
