#include "gamelab/aloha.hpp"

#include "gamelab/errors.hpp"
#include "gamelab/scalar_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gamelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_two(const AlohaGame& game, const char* what)
{
    if (game.size() != 2)
        throw UnsupportedError(std::string(what) + " is defined for two players only");
}

void require_size(const std::vector<double>& demands, const StrategyVector& q)
{
    if (demands.size() != q.size())
        throw DomainError("strategy vector size does not match the number of players");
}

void require_two(const std::vector<double>& demands, const StrategyVector& q, const char* what)
{
    require_size(demands, q);
    if (q.size() != 2)
        throw UnsupportedError(std::string(what) + " is defined for two players only");
}

double product_except(const StrategyVector& q, std::size_t i)
{
    double p = 1.0;
    for (std::size_t j = 0; j < q.size(); ++j)
        if (j != i)
            p *= 1.0 - q[j];
    return p;
}

double raw_selfish(double y, double others_idle)
{
    return others_idle > 0.0 ? y / others_idle : kInf;
}

} // namespace

bool is_interior(const StrategyVector& q) noexcept
{
    return std::all_of(q.begin(), q.end(), [](double v) { return v > 0.0 && v < 1.0; });
}

AlohaGame::AlohaGame(std::vector<UtilitySpec> players, double alpha, ClipBox clip, CostBasis basis)
    : players_(std::move(players)), alpha_(alpha), clip_(clip), basis_(basis)
{
    if (players_.size() < 2)
        throw DomainError("an ALOHA game needs at least two players");
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0))
        throw DomainError("altruism alpha must lie in [0,1], got " + std::to_string(alpha_));
    if (!(clip_.q_min > 0.0 && clip_.q_min < clip_.q_max && clip_.q_max < 1.0))
        throw DomainError("clip box must satisfy 0 < q_min < q_max < 1");
    demands_.reserve(players_.size());
    for (const auto& p : players_) {
        if (!p.strictly_concave())
            throw UnsupportedError("ALOHA games need strictly concave utilities; use LinearGame for linear ones");
        const double y = demand(p);
        if (!(y > 0.0 && y < 1.0))
            throw DomainError("player demand must lie in (0,1), got " + std::to_string(y));
        demands_.push_back(y);
    }
}

AlohaGame AlohaGame::from_demands(const std::vector<double>& demands, double alpha, ClipBox clip)
{
    std::vector<UtilitySpec> players;
    players.reserve(demands.size());
    for (double y : demands)
        players.push_back(UtilitySpec::arctan(y));
    return AlohaGame(std::move(players), alpha, clip);
}

double AlohaGame::discriminant() const
{
    if (size() != 2)
        throw UnsupportedError("discriminant is defined for two players only");
    const double b = 1.0 + demands_[0] - demands_[1];
    return b * b - 4.0 * demands_[0];
}

AlohaGame AlohaGame::with_alpha(double alpha) const
{
    return AlohaGame(players_, alpha, clip_, basis_);
}

std::vector<double> throughput(const StrategyVector& q)
{
    for (double v : q)
        if (!(v >= 0.0 && v <= 1.0))
            throw DomainError("transmission probabilities must lie in [0,1]");
    std::vector<double> gamma(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        gamma[i] = q[i] * product_except(q, i);
    return gamma;
}

double nep_residual(const AlohaGame& game, const StrategyVector& q)
{
    require_size(game.demands(), q);
    const auto gamma = throughput(q);
    double r = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        r = std::max(r, std::abs(gamma[i] - game.demands()[i]));
    return r;
}

StrategyVector selfish_response(const AlohaGame& game, const StrategyVector& q)
{
    require_size(game.demands(), q);
    StrategyVector out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        out[i] = game.clip().clip(raw_selfish(game.demands()[i], product_except(q, i)));
    return out;
}

StrategyVector altruistic_response(const AlohaGame& game, const StrategyVector& q)
{
    require_two(game, "altruistic response");
    require_size(game.demands(), q);
    const auto& y = game.demands();
    StrategyVector out(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        const double raw = q[o] > 0.0 ? 1.0 - y[o] / q[o] : -kInf;
        out[i] = game.clip().clip(raw);
    }
    return out;
}

double altruistic_objective(const AlohaGame& game, std::size_t i, double q_i, double q_other)
{
    const std::size_t o = 1 - i;
    const auto& ui = game.players()[i];
    const auto& uo = game.players()[o];
    const double a = game.alpha();
    const double g_i = q_i * (1.0 - q_other);
    const double g_o = q_other * (1.0 - q_i);
    if (game.cost_basis() == CostBasis::Throughput)
        return a * (utility_value(ui, g_i) - ui.price() * g_i)
            + (1.0 - a) * (utility_value(uo, g_o) - uo.price() * g_o);
    return a * utility_value(ui, g_i) + (1.0 - a) * utility_value(uo, g_o) - ui.price() * q_i;
}

double altruistic_objective_slope(const AlohaGame& game, std::size_t i, double q_i, double q_other)
{
    const std::size_t o = 1 - i;
    const auto& ui = game.players()[i];
    const auto& uo = game.players()[o];
    const double a = game.alpha();
    const double g_i = q_i * (1.0 - q_other);
    const double g_o = q_other * (1.0 - q_i);
    if (game.cost_basis() == CostBasis::Throughput)
        return a * (utility_marginal(ui, g_i) - ui.price()) * (1.0 - q_other)
            - (1.0 - a) * (utility_marginal(uo, g_o) - uo.price()) * q_other;
    return a * utility_marginal(ui, g_i) * (1.0 - q_other)
        - (1.0 - a) * utility_marginal(uo, g_o) * q_other - ui.price();
}

double partial_response(const AlohaGame& game, std::size_t i, const StrategyVector& q)
{
    require_two(game, "partial response");
    require_size(game.demands(), q);
    if (i > 1)
        throw DomainError("player index out of range");
    const double q_other = q[1 - i];
    const auto& box = game.clip();
    const auto best = maximize_on_interval(
        [&](double x) { return altruistic_objective(game, i, x, q_other); },
        [&](double x) { return altruistic_objective_slope(game, i, x, q_other); },
        box.q_min, box.q_max);
    return best.x;
}

StrategyVector partial_response(const AlohaGame& game, const StrategyVector& q)
{
    return {partial_response(game, 0, q), partial_response(game, 1, q)};
}

StrategyVector blended_response_linear(const AlohaGame& game, const StrategyVector& q)
{
    const auto f = selfish_response(game, q);
    const auto g = altruistic_response(game, q);
    const double a = game.alpha();
    return {a * f[0] + (1.0 - a) * g[0], a * f[1] + (1.0 - a) * g[1]};
}

double tilde_altruistic_raw(const AlohaGame& game, std::size_t i, const StrategyVector& q)
{
    require_two(game, "tilde response");
    require_size(game.demands(), q);
    const auto& y = game.demands();
    const std::size_t o = 1 - i;
    const double first = q[o] > 0.0 ? 1.0 - y[o] / q[o] : -kInf;
    const double second = q[i] > 0.0 ? y[i] * y[i] * (1.0 / q[i] - 1.0) * (1.0 / q[i] - 1.0) : kInf;
    if (first == 0.0 || second == 0.0)
        return 0.0;
    return first * second;
}

StrategyVector blended_response_tilde(const AlohaGame& game, const StrategyVector& q)
{
    require_two(game, "tilde response");
    const auto& y = game.demands();
    const double a = game.alpha();
    StrategyVector out(2);
    for (std::size_t i = 0; i < 2; ++i) {
        double raw = 0.0;
        if (a > 0.0)
            raw += a * raw_selfish(y[i], 1.0 - q[1 - i]);
        if (a < 1.0)
            raw += (1.0 - a) * tilde_altruistic_raw(game, i, q);
        out[i] = std::isnan(raw) ? game.clip().q_min : game.clip().clip(raw);
    }
    return out;
}

std::vector<InteriorNep> interior_neps(const AlohaGame& game)
{
    require_two(game, "interior equilibrium solver");
    const double y1 = game.demands()[0];
    const double y2 = game.demands()[1];
    const double disc = game.discriminant();
    std::vector<InteriorNep> out;
    if (disc < 0.0)
        return out;
    // q1^2 - b q1 + y1 = 0; take the large root directly and the small one from
    // the product of roots to avoid cancellation.
    const double b = 1.0 + y1 - y2;
    const double big = 0.5 * (b + std::sqrt(disc));
    std::vector<double> roots;
    if (big > 0.0)
        roots.push_back(y1 / big);
    if (disc > 0.0)
        roots.push_back(big);
    for (double q1 : roots) {
        if (!(q1 > 0.0 && q1 < 1.0))
            continue;
        const double q2 = y2 / (1.0 - q1);
        if (!(q2 > 0.0 && q2 < 1.0))
            continue;
        InteriorNep nep{{q1, q2}, false};
        nep.outside_clip = !(game.clip().contains(q1) && game.clip().contains(q2));
        out.push_back(std::move(nep));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.q[0] < b.q[0]; });
    return out;
}

double lyapunov_selfish(const std::vector<double>& y, const StrategyVector& q)
{
    require_size(y, q);
    double prod = 1.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] < 1.0))
            throw SingularInputError("selfish Lyapunov function is singular at q_i = 1");
        prod *= y[i] / (1.0 - q[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < q.size(); ++j)
            if (j != i)
                others *= y[j];
        sum += (q[i] / (1.0 - q[i]) + std::log1p(-q[i])) * others;
    }
    return -prod + sum;
}

std::vector<double> lyapunov_selfish_gradient(const std::vector<double>& y, const StrategyVector& q)
{
    require_size(y, q);
    std::vector<double> grad(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (!(q[k] < 1.0))
            throw SingularInputError("selfish Lyapunov function is singular at q_i = 1");
        double others = 1.0;
        for (std::size_t j = 0; j < q.size(); ++j)
            if (j != k)
                others *= y[j];
        const double f = y[k] / product_except(q, k);
        grad[k] = others / ((1.0 - q[k]) * (1.0 - q[k])) * (q[k] - f);
    }
    return grad;
}

double lyapunov_altruistic(const std::vector<double>& y, const StrategyVector& q)
{
    require_two(y, q, "altruistic Lyapunov function");
    if (!(q[0] > 0.0 && q[1] > 0.0))
        throw SingularInputError("altruistic Lyapunov function is singular at q_i = 0");
    return -(1.0 - y[0] / q[0]) * (1.0 - y[1] / q[1]) + y[0] * std::log(q[0]) + y[1] * std::log(q[1]);
}

std::vector<double> lyapunov_altruistic_gradient(const std::vector<double>& y, const StrategyVector& q)
{
    require_two(y, q, "altruistic Lyapunov function");
    if (!(q[0] > 0.0 && q[1] > 0.0))
        throw SingularInputError("altruistic Lyapunov function is singular at q_i = 0");
    std::vector<double> grad(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const double g = 1.0 - y[1 - i] / q[1 - i];
        grad[i] = y[i] / (q[i] * q[i]) * (q[i] - g);
    }
    return grad;
}

double lyapunov_blend(const std::vector<double>& y, double alpha, const StrategyVector& q)
{
    require_two(y, q, "blended Lyapunov function");
    for (double v : q)
        if (!(v > 0.0 && v < 1.0))
            throw SingularInputError("blended Lyapunov function is singular at q_i in {0, 1}");
    const auto h = [&](std::size_t i) { return y[i] - y[i] * y[i] / q[i]; };
    double value = -alpha * (y[0] / (1.0 - q[0])) * (y[1] / (1.0 - q[1])) - (1.0 - alpha) * h(0) * h(1);
    for (std::size_t i = 0; i < 2; ++i)
        value += (q[i] / (1.0 - q[i]) + std::log1p(-q[i])) * y[1 - i];
    return value;
}

std::vector<double> lyapunov_blend_gradient(const std::vector<double>& y, double alpha, const StrategyVector& q)
{
    require_two(y, q, "blended Lyapunov function");
    for (double v : q)
        if (!(v > 0.0 && v < 1.0))
            throw SingularInputError("blended Lyapunov function is singular at q_i in {0, 1}");
    std::vector<double> grad(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        const double f = y[i] / (1.0 - q[o]);
        const double gt = (1.0 - y[o] / q[o]) * y[i] * y[i] * (1.0 / q[i] - 1.0) * (1.0 / q[i] - 1.0);
        const double target = alpha * f + (1.0 - alpha) * gt;
        grad[i] = y[o] / ((1.0 - q[i]) * (1.0 - q[i])) * (q[i] - target);
    }
    return grad;
}

StabilityCriteria stability_criteria(const AlohaGame& game, const StrategyVector& q, double tol)
{
    require_two(game, "stability criteria");
    if (!is_interior(q))
        throw PreconditionError("stability criteria need an interior point");
    const double r = nep_residual(game, q);
    if (!(r <= tol))
        throw PreconditionError("stability criteria are only meaningful at an equilibrium; residual "
                                + std::to_string(r));
    const double yy = game.demands()[0] * game.demands()[1];
    const double a = (1.0 - q[0]) * (1.0 - q[1]);
    const double b = q[0] * q[1];
    return {yy / (a * a), yy / (b * b)};
}

} // namespace gamelab
