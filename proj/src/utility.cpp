#include "gamelab/utility.hpp"

#include "gamelab/errors.hpp"
#include "gamelab/scalar_search.hpp"

#include <cmath>
#include <string>

namespace gamelab {

std::string_view to_string(UtilityFamily family)
{
    switch (family) {
    case UtilityFamily::Arctan: return "arctan";
    case UtilityFamily::ArctanScaled: return "arctan_scaled";
    case UtilityFamily::Linear: return "linear";
    case UtilityFamily::SaturatingConcave: return "saturating";
    }
    return "unknown";
}

namespace {

void require_price(double price)
{
    if (!(price > 0.0) || !std::isfinite(price))
        throw DomainError("utility price M must be positive, got " + std::to_string(price));
}

void require_gamma(double gamma)
{
    if (!(gamma >= 0.0))
        throw DomainError("service level must be nonnegative, got " + std::to_string(gamma));
}

double arctan_scale(const UtilitySpec& u)
{
    return u.price() * (1.0 + u.demand_param() * u.demand_param());
}

} // namespace

UtilitySpec UtilitySpec::arctan(double demand, double price)
{
    require_price(price);
    if (!(demand > 0.0 && demand < 1.0))
        throw DomainError("arctan demand y must lie in (0,1), got " + std::to_string(demand));
    UtilitySpec s;
    s.family_ = UtilityFamily::Arctan;
    s.price_ = price;
    s.y_ = demand;
    return s;
}

UtilitySpec UtilitySpec::arctan_scaled(double u, double beta, double price)
{
    require_price(price);
    if (!(u > 0.0) || !(beta > 0.0))
        throw DomainError("arctan_scaled requires u > 0 and beta > 0");
    UtilitySpec s;
    s.family_ = UtilityFamily::ArctanScaled;
    s.price_ = price;
    s.u_ = u;
    s.beta_ = beta;
    return s;
}

UtilitySpec UtilitySpec::linear(double slope, double price)
{
    require_price(price);
    if (!std::isfinite(slope))
        throw DomainError("linear slope must be finite");
    UtilitySpec s;
    s.family_ = UtilityFamily::Linear;
    s.price_ = price;
    s.u_ = slope;
    return s;
}

UtilitySpec UtilitySpec::saturating(double demand, double saturation, double price)
{
    UtilitySpec s = arctan(demand, price);
    if (!(saturation > 0.0 && saturation < 1.0))
        throw DomainError("saturation point must lie in (0,1), got " + std::to_string(saturation));
    s.family_ = UtilityFamily::SaturatingConcave;
    s.saturation_ = saturation;
    return s;
}

double utility_value(const UtilitySpec& u, double gamma)
{
    require_gamma(gamma);
    switch (u.family()) {
    case UtilityFamily::Arctan:
        return arctan_scale(u) * std::atan(gamma);
    case UtilityFamily::ArctanScaled:
        return u.price() * u.u() / u.beta() * std::atan(u.beta() * gamma);
    case UtilityFamily::Linear:
        return u.u() * gamma;
    case UtilityFamily::SaturatingConcave:
        return arctan_scale(u) * std::atan(std::min(gamma, u.saturation()));
    }
    return 0.0;
}

double utility_marginal(const UtilitySpec& u, double gamma)
{
    require_gamma(gamma);
    switch (u.family()) {
    case UtilityFamily::Arctan:
        return arctan_scale(u) / (1.0 + gamma * gamma);
    case UtilityFamily::ArctanScaled: {
        const double bg = u.beta() * gamma;
        return u.price() * u.u() / (1.0 + bg * bg);
    }
    case UtilityFamily::Linear:
        return u.u();
    case UtilityFamily::SaturatingConcave:
        if (gamma > u.saturation())
            return 0.0;
        return arctan_scale(u) / (1.0 + gamma * gamma);
    }
    return 0.0;
}

double utility_second_derivative(const UtilitySpec& u, double gamma)
{
    require_gamma(gamma);
    switch (u.family()) {
    case UtilityFamily::Arctan: {
        const double d = 1.0 + gamma * gamma;
        return -2.0 * arctan_scale(u) * gamma / (d * d);
    }
    case UtilityFamily::ArctanScaled: {
        const double bg = u.beta() * gamma;
        const double d = 1.0 + bg * bg;
        return -2.0 * u.price() * u.u() * u.beta() * bg / (d * d);
    }
    case UtilityFamily::Linear:
        return 0.0;
    case UtilityFamily::SaturatingConcave: {
        if (gamma > u.saturation())
            return 0.0;
        const double d = 1.0 + gamma * gamma;
        return -2.0 * arctan_scale(u) * gamma / (d * d);
    }
    }
    return 0.0;
}

double inverse_marginal(const UtilitySpec& u, double z)
{
    if (!(z > 0.0))
        throw NoSolutionError("inverse marginal needs a positive argument, got " + std::to_string(z));
    switch (u.family()) {
    case UtilityFamily::Linear:
        throw UnsupportedError("linear utility has a constant marginal; no inverse");
    case UtilityFamily::Arctan: {
        const double top = arctan_scale(u);
        if (z > top)
            throw NoSolutionError("marginal never reaches " + std::to_string(z));
        return std::sqrt(top / z - 1.0);
    }
    case UtilityFamily::ArctanScaled: {
        const double top = u.price() * u.u();
        if (z > top)
            throw NoSolutionError("marginal never reaches " + std::to_string(z));
        return std::sqrt(top / z - 1.0) / u.beta();
    }
    case UtilityFamily::SaturatingConcave: {
        // No closed form is used here: bisect on [0, g_hat] where U' is strictly
        // decreasing from U'(0) down to U'(g_hat).
        const double g_hat = u.saturation();
        const double lo_val = utility_marginal(u, g_hat);
        const double hi_val = utility_marginal(u, 0.0);
        if (z > hi_val || z < lo_val)
            throw NoSolutionError("saturating marginal never reaches " + std::to_string(z));
        return bisect_root([&](double g) { return utility_marginal(u, g) - z; }, 0.0, g_hat, 1e-12);
    }
    }
    return 0.0;
}

double demand(const UtilitySpec& u)
{
    return inverse_marginal(u, u.price());
}

} // namespace gamelab
