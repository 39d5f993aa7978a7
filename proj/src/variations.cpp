#include "gamelab/variations.hpp"

#include "gamelab/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gamelab {

void LinearGame::validate() const
{
    if (!(price >= 0.0))
        throw DomainError("linear game price must be nonnegative");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw DomainError("altruism alpha must lie in [0,1]");
    for (double ui : u) {
        if (basis == CostBasis::Throughput && !(ui > price))
            throw DomainError("throughput-priced linear utilities need u_i > M");
        if (basis == CostBasis::Power && !(ui > 0.0))
            throw DomainError("power-priced linear utilities need u_i > 0");
    }
}

double linear_threshold(const LinearGame& g, std::size_t player)
{
    if (player > 1)
        throw DomainError("player index out of range");
    const double own = g.alpha * (g.u[player] - g.price);
    const double other = (1.0 - g.alpha) * (g.u[1 - player] - g.price);
    const double den = own + other;
    if (den == 0.0)
        throw DegenerateError("linear threshold is undefined: zero denominator");
    return own / den;
}

double power_linear_threshold(const LinearGame& g, std::size_t player)
{
    if (player > 1)
        throw DomainError("player index out of range");
    const double den = g.alpha * g.u[player] + (1.0 - g.alpha) * g.u[1 - player];
    if (den == 0.0)
        throw DegenerateError("power threshold is undefined: zero denominator");
    return g.alpha * (g.u[player] - g.price) / den;
}

double switch_threshold(const LinearGame& g, std::size_t player)
{
    return g.basis == CostBasis::Throughput ? linear_threshold(g, player) : power_linear_threshold(g, player);
}

double linear_response(const LinearGame& g, std::size_t player, const StrategyVector& q)
{
    if (q.size() != 2)
        throw DomainError("linear game has two players");
    const double opponent = q[1 - player];
    const double threshold = switch_threshold(g, player);
    if (opponent < threshold)
        return 1.0;
    if (opponent > threshold)
        return 0.0;
    return q[player];
}

StrategyVector linear_saddle(const LinearGame& g)
{
    // Component k is the threshold the *other* player reacts to.
    return {switch_threshold(g, 1), switch_threshold(g, 0)};
}

VectorField linear_field(const LinearGame& g)
{
    g.validate();
    return VectorField(
        [g](const State& q) { return State{linear_response(g, 0, q), linear_response(g, 1, q)}; },
        Box::uniform(2, 0.0, 1.0));
}

double mirror_price(double u, double price, double alpha)
{
    return u - alpha * (u - price);
}

PowerCostGame::PowerCostGame(std::array<UtilitySpec, 2> p, ClipBox box, double ratio)
    : players(std::move(p)), clip(box), regime_ratio(ratio)
{
    for (const auto& u : players)
        if (u.family() != UtilityFamily::ArctanScaled)
            throw UnsupportedError("power-cost selfish responses need arctan_scaled utilities");
    if (!(clip.q_min >= 0.0 && clip.q_min < clip.q_max && clip.q_max <= 1.0))
        throw DomainError("clip box must satisfy 0 <= q_min < q_max <= 1");
    if (!(regime_ratio > 1.0))
        throw DomainError("regime ratio must exceed 1");
}

std::array<double, 2> PowerCostGame::demands() const
{
    return {std::sqrt(players[0].u()) / players[0].beta(), std::sqrt(players[1].u()) / players[1].beta()};
}

PowerCostResponse power_cost_selfish_response(const PowerCostGame& g, std::size_t player, const StrategyVector& q)
{
    if (q.size() != 2 || player > 1)
        throw DomainError("power-cost game has two players");
    const auto& ut = g.players[player];
    const double idle = 1.0 - q[1 - player];
    const double slope = ut.u() * idle;

    PowerCostResponse r;
    // The exact response needs u (1 - q_other) > 1; otherwise the marginal never
    // reaches the price and the player transmits as little as allowed.
    if (slope > 1.0)
        r.exact = g.clip.clip(std::sqrt(slope - 1.0) / (ut.beta() * idle));
    else
        r.exact = g.clip.q_min;
    const double y = std::sqrt(ut.u()) / ut.beta();
    r.approx = idle > 0.0 ? g.clip.clip(y / std::sqrt(idle)) : g.clip.q_max;
    r.approx_valid = slope >= g.regime_ratio;
    return r;
}

StrategyVector power_cost_selfish_exact(const PowerCostGame& g, const StrategyVector& q)
{
    return {power_cost_selfish_response(g, 0, q).exact, power_cost_selfish_response(g, 1, q).exact};
}

StrategyVector power_cost_selfish_approx(const PowerCostGame& g, const StrategyVector& q)
{
    return {power_cost_selfish_response(g, 0, q).approx, power_cost_selfish_response(g, 1, q).approx};
}

VectorField power_cost_approx_field(const PowerCostGame& g)
{
    return VectorField([g](const State& q) { return power_cost_selfish_approx(g, q); },
                       Box::uniform(2, g.clip.q_min, g.clip.q_max));
}

VectorField power_cost_exact_field(const PowerCostGame& g)
{
    return VectorField([g](const State& q) { return power_cost_selfish_exact(g, q); },
                       Box::uniform(2, g.clip.q_min, g.clip.q_max));
}

double lyapunov_powercost(const std::array<double, 2>& y, const StrategyVector& q)
{
    if (q.size() != 2)
        throw DomainError("power-cost Lyapunov function has two players");
    if (!(q[0] < 1.0 && q[1] < 1.0))
        throw SingularInputError("power-cost Lyapunov function is singular at q_i = 1");
    const double s0 = std::sqrt(1.0 - q[0]);
    const double s1 = std::sqrt(1.0 - q[1]);
    return -(y[0] / s0) * (y[1] / s1) + (s0 + 1.0 / s0) * y[1] + (s1 + 1.0 / s1) * y[0];
}

std::vector<double> lyapunov_powercost_gradient(const std::array<double, 2>& y, const StrategyVector& q)
{
    if (q.size() != 2)
        throw DomainError("power-cost Lyapunov function has two players");
    if (!(q[0] < 1.0 && q[1] < 1.0))
        throw SingularInputError("power-cost Lyapunov function is singular at q_i = 1");
    std::vector<double> grad(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        const double idle = 1.0 - q[i];
        const double target = y[i] / std::sqrt(1.0 - q[o]);
        grad[i] = 0.5 * y[o] * std::pow(idle, -1.5) * (q[i] - target);
    }
    return grad;
}

bool AltruisticPowerCostNeps::is_opt_out(const StrategyVector& q) const
{
    if (q.size() != 2)
        throw DomainError("power-cost game has two players");
    return q[0] == 0.0 || q[1] == 0.0;
}

bool AltruisticPowerCostNeps::in_saturation_region(const StrategyVector& q) const
{
    if (!saturation_)
        return false;
    if (q.size() != 2)
        throw DomainError("power-cost game has two players");
    for (double v : q)
        if (!(v >= 0.0 && v <= 1.0))
            return false;
    const auto gamma = throughput(q);
    return gamma[0] > (*saturation_)[0] && gamma[1] > (*saturation_)[1];
}

bool AltruisticPowerCostNeps::saturation_region_nonempty() const
{
    if (!saturation_)
        return false;
    return std::sqrt((*saturation_)[0]) + std::sqrt((*saturation_)[1]) < 1.0;
}

AltruisticPowerCostNeps power_cost_altruistic_neps(const std::array<UtilitySpec, 2>& players)
{
    const bool sat0 = players[0].family() == UtilityFamily::SaturatingConcave;
    const bool sat1 = players[1].family() == UtilityFamily::SaturatingConcave;
    for (const auto& p : players)
        if (!p.strictly_concave())
            throw UnsupportedError("altruistic power-cost equilibria need strictly concave utilities");
    if (sat0 && sat1)
        return AltruisticPowerCostNeps({players[0].saturation(), players[1].saturation()});
    return {};
}

} // namespace gamelab
