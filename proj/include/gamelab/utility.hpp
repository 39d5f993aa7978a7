#pragma once

#include <string_view>

namespace gamelab {

enum class UtilityFamily { Arctan, ArctanScaled, Linear, SaturatingConcave };

std::string_view to_string(UtilityFamily family);

/// A player's utility of service level gamma, together with the usage price M.
///
/// Families:
///   Arctan            U(g) = M (1 + y^2) atan(g), parameterized by its demand y
///   ArctanScaled      U(g) = (M u / beta) atan(beta g)
///   Linear            U(g) = u g
///   SaturatingConcave Arctan below the saturation point g_hat, flat above it
///
/// Construct through the named factories; they validate the parameters.
class UtilitySpec {
public:
    static UtilitySpec arctan(double demand, double price = 1.0);
    static UtilitySpec arctan_scaled(double u, double beta, double price = 1.0);
    static UtilitySpec linear(double slope, double price = 1.0);
    static UtilitySpec saturating(double demand, double saturation, double price = 1.0);

    UtilityFamily family() const noexcept { return family_; }
    double price() const noexcept { return price_; }
    // Arctan-type demand parameter y (Arctan and SaturatingConcave only).
    double demand_param() const noexcept { return y_; }
    double u() const noexcept { return u_; }
    double beta() const noexcept { return beta_; }
    double saturation() const noexcept { return saturation_; }

    bool strictly_concave() const noexcept { return family_ != UtilityFamily::Linear; }

private:
    UtilitySpec() = default;

    UtilityFamily family_ = UtilityFamily::Arctan;
    double price_ = 1.0;
    double y_ = 0.0;
    double u_ = 0.0;
    double beta_ = 1.0;
    double saturation_ = 1.0;
};

double utility_value(const UtilitySpec& u, double gamma);
double utility_marginal(const UtilitySpec& u, double gamma);
double utility_second_derivative(const UtilitySpec& u, double gamma);

// (U')^{-1}(z). Throws UnsupportedError for Linear and NoSolutionError when z
// lies outside the range of the marginal.
double inverse_marginal(const UtilitySpec& u, double z);

// The service level where marginal utility equals the price.
double demand(const UtilitySpec& u);

} // namespace gamelab
