#pragma once

#include "gamelab/aloha.hpp"
#include "gamelab/dynamics.hpp"

#include <array>
#include <cstddef>
#include <optional>

namespace gamelab {

// Two players with linear utilities U_i(g) = u_i g.
struct LinearGame {
    std::array<double, 2> u{2.0, 2.0};
    double price = 1.0;
    double alpha = 1.0;
    CostBasis basis = CostBasis::Throughput;

    void validate() const;
};

// The opponent play at which player i switches between full transmission and
// opting out: phi_{3-i}(alpha) under throughput costs. Player index is 0-based.
double linear_threshold(const LinearGame& g, std::size_t player);

// Same switch point under power costs: psi^M_{3-i}(alpha).
double power_linear_threshold(const LinearGame& g, std::size_t player);

// Dispatches on g.basis.
double switch_threshold(const LinearGame& g, std::size_t player);

// 1 below the threshold, 0 above, and the current play at exact indifference.
double linear_response(const LinearGame& g, std::size_t player, const StrategyVector& q);

// The interior saddle equilibrium (phi_1, phi_2), or (psi_1, psi_2) under power costs.
StrategyVector linear_saddle(const LinearGame& g);

VectorField linear_field(const LinearGame& g);

// Selfish price that reproduces alpha-altruistic play between identical players.
double mirror_price(double u, double price, double alpha);

// Two players with ArctanScaled utilities paying for transmit power.
struct PowerCostGame {
    std::array<UtilitySpec, 2> players;
    ClipBox clip;
    // u_i (1 - q_other) at or above this counts as the large-slope regime where
    // the approximate response is trusted.
    double regime_ratio = 20.0;

    PowerCostGame(std::array<UtilitySpec, 2> p, ClipBox box = {}, double ratio = 20.0);

    // y_i = sqrt(u_i) / beta_i
    std::array<double, 2> demands() const;
};

struct PowerCostResponse {
    double exact = 0.0;   // clipped exact selfish response
    double approx = 0.0;  // clipped y_i / sqrt(1 - q_other)
    bool approx_valid = false;
};

PowerCostResponse power_cost_selfish_response(const PowerCostGame& g, std::size_t player, const StrategyVector& q);
StrategyVector power_cost_selfish_exact(const PowerCostGame& g, const StrategyVector& q);
StrategyVector power_cost_selfish_approx(const PowerCostGame& g, const StrategyVector& q);

VectorField power_cost_approx_field(const PowerCostGame& g);
VectorField power_cost_exact_field(const PowerCostGame& g);

double lyapunov_powercost(const std::array<double, 2>& demands, const StrategyVector& q);
std::vector<double> lyapunov_powercost_gradient(const std::array<double, 2>& demands, const StrategyVector& q);

// Equilibria of the purely altruistic game under power costs: every play where a
// player opts out, plus (for saturating utilities) the plays where both
// throughputs exceed their saturation points.
class AltruisticPowerCostNeps {
public:
    AltruisticPowerCostNeps() = default;
    explicit AltruisticPowerCostNeps(std::array<double, 2> saturation) : saturation_(saturation) {}

    bool saturating() const noexcept { return saturation_.has_value(); }
    const std::optional<std::array<double, 2>>& saturation() const noexcept { return saturation_; }

    bool is_opt_out(const StrategyVector& q) const;
    bool in_saturation_region(const StrategyVector& q) const;
    bool contains(const StrategyVector& q) const { return is_opt_out(q) || in_saturation_region(q); }

    // The region {gamma_i > g_hat_i} meets [0,1]^2 iff sqrt(g_hat_1) + sqrt(g_hat_2) < 1.
    bool saturation_region_nonempty() const;

private:
    std::optional<std::array<double, 2>> saturation_;
};

AltruisticPowerCostNeps power_cost_altruistic_neps(const std::array<UtilitySpec, 2>& players);

} // namespace gamelab
