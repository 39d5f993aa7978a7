#pragma once

#include "gamelab/utility.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace gamelab {

// Joint play: one transmission probability (or power) per player.
using StrategyVector = std::vector<double>;

enum class CostBasis { Throughput, Power };

struct ClipBox {
    double q_min = 0.01;
    double q_max = 0.99;

    double clip(double v) const noexcept { return v < q_min ? q_min : (v > q_max ? q_max : v); }
    bool contains(double v) const noexcept { return v >= q_min && v <= q_max; }
};

bool is_interior(const StrategyVector& q) noexcept;

// Two or more slotted-ALOHA players under symmetric altruism alpha: each player
// weights its own net utility by alpha and the others' by (1 - alpha)/(N - 1).
// Immutable after construction.
class AlohaGame {
public:
    explicit AlohaGame(std::vector<UtilitySpec> players, double alpha = 1.0, ClipBox clip = {},
                       CostBasis basis = CostBasis::Throughput);

    // Arctan utilities with price 1 parameterized by the given demands.
    static AlohaGame from_demands(const std::vector<double>& demands, double alpha = 1.0,
                                  ClipBox clip = {});

    std::size_t size() const noexcept { return players_.size(); }
    const std::vector<UtilitySpec>& players() const noexcept { return players_; }
    const std::vector<double>& demands() const noexcept { return demands_; }
    double alpha() const noexcept { return alpha_; }
    const ClipBox& clip() const noexcept { return clip_; }
    CostBasis cost_basis() const noexcept { return basis_; }

    // (1 + y1 - y2)^2 - 4 y1; negative means no real interior equilibrium.
    double discriminant() const;
    bool has_real_interior_nep() const { return discriminant() >= 0.0; }

    AlohaGame with_alpha(double alpha) const;

private:
    std::vector<UtilitySpec> players_;
    std::vector<double> demands_;
    double alpha_;
    ClipBox clip_;
    CostBasis basis_;
};

struct InteriorNep {
    StrategyVector q;
    bool outside_clip = false;
};

struct StabilityCriteria {
    double sigma_selfish = 0.0;    // y1 y2 / ((1-q1)^2 (1-q2)^2)
    double sigma_altruistic = 0.0; // y1 y2 / (q1^2 q2^2)

    bool stable_selfish() const noexcept { return sigma_selfish < 1.0; }
    bool stable_altruistic() const noexcept { return sigma_altruistic < 1.0; }
};

/// gamma_i = q_i prod_{j != i} (1 - q_j)
std::vector<double> throughput(const StrategyVector& q);

/// max_i |gamma_i(q) - y_i|
double nep_residual(const AlohaGame& game, const StrategyVector& q);

/// Clipped selfish best response y_i / prod_{j != i}(1 - q_j), any N.
StrategyVector selfish_response(const AlohaGame& game, const StrategyVector& q);

/// Clipped purely altruistic response 1 - y_{3-i}/q_{3-i} (two players).
StrategyVector altruistic_response(const AlohaGame& game, const StrategyVector& q);

// The objective player i maximizes at the game's alpha, as a function of its own
// play with the opponent fixed at q[1-i]. Throughput basis: alpha V_i + (1-alpha)
// V_other with V_j = U_j(gamma_j) - M gamma_j. Power basis: alpha U_i + (1-alpha)
// U_other - M q_i.
double altruistic_objective(const AlohaGame& game, std::size_t i, double q_i, double q_other);
double altruistic_objective_slope(const AlohaGame& game, std::size_t i, double q_i, double q_other);

/// Player i's maximizer of the altruistic objective over [q_min, q_max].
double partial_response(const AlohaGame& game, std::size_t i, const StrategyVector& q);
StrategyVector partial_response(const AlohaGame& game, const StrategyVector& q);

/// alpha F + (1 - alpha) G, both clipped first.
StrategyVector blended_response_linear(const AlohaGame& game, const StrategyVector& q);

/// Unclipped G~_i = (1 - y_{3-i}/q_{3-i}) y_i^2 (1/q_i - 1)^2, with +-infinity at
/// the q_i = 0 singularity by the sign of the first factor.
double tilde_altruistic_raw(const AlohaGame& game, std::size_t i, const StrategyVector& q);

/// clip(alpha F_raw + (1 - alpha) G~_raw).
StrategyVector blended_response_tilde(const AlohaGame& game, const StrategyVector& q);

/// Interior equilibria of the two-player game from the exact quadratic.
std::vector<InteriorNep> interior_neps(const AlohaGame& game);

// Lyapunov functions. The selfish one is defined for any N; the others for two
// players. Each has an analytic gradient alongside.
double lyapunov_selfish(const std::vector<double>& demands, const StrategyVector& q);
std::vector<double> lyapunov_selfish_gradient(const std::vector<double>& demands, const StrategyVector& q);
double lyapunov_altruistic(const std::vector<double>& demands, const StrategyVector& q);
std::vector<double> lyapunov_altruistic_gradient(const std::vector<double>& demands, const StrategyVector& q);
double lyapunov_blend(const std::vector<double>& demands, double alpha, const StrategyVector& q);
std::vector<double> lyapunov_blend_gradient(const std::vector<double>& demands, double alpha,
                                            const StrategyVector& q);

/// Closed-form stability criteria at an interior equilibrium. Throws
/// PreconditionError when q is not an equilibrium to within tol.
StabilityCriteria stability_criteria(const AlohaGame& game, const StrategyVector& q, double tol = 1e-9);

} // namespace gamelab
