#pragma once

#include "gamelab/aloha.hpp"
#include "gamelab/dynamics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gamelab {

double db_to_linear(double db);

/// Noise plus path gains. gain(j, i) is the gain from the transmitter of flow j
/// to the receiver of flow i; cross gains are divided by the processing gain.
class ChannelModel {
public:
    ChannelModel(double noise, Eigen::MatrixXd gains, double processing_gain = 1.0);

    // Two flows with equal direct gains and equal cross gains.
    static ChannelModel two_flow(double noise, double direct, double cross, double processing_gain = 1.0);

    std::size_t size() const noexcept { return static_cast<std::size_t>(gains_.rows()); }
    double noise() const noexcept { return noise_; }
    double processing_gain() const noexcept { return processing_gain_; }
    // Effective gain from transmitter j to receiver i.
    double gain(std::size_t j, std::size_t i) const;

private:
    double noise_;
    Eigen::MatrixXd gains_;
    double processing_gain_;
};

enum class Modulation { GMSK, DBPSK, GFSK, QPSK, QAM16, QAM64, LargeNApprox };

std::string_view to_string(Modulation m);
Modulation modulation_from_string(std::string_view name);

struct ModulationModel {
    Modulation scheme = Modulation::LargeNApprox;
    int bits = 1024;
    std::optional<double> kappa; // GMSK only

    void validate() const;
};

double sinr(const ChannelModel& channel, const StrategyVector& q, std::size_t i);

// Bit error probability at the given SINR. LargeNApprox has no bit-level model.
double bit_error(const ModulationModel& mod, double sinr);

// Frame success probability Gamma(SINR): (1 - p_e)^n, or exp(-n exp(-SINR)) for
// the large-frame approximation.
double frame_success(const ModulationModel& mod, double sinr);
double frame_success_derivative(const ModulationModel& mod, double sinr);

// Gamma^{-1}(y): closed form for LargeNApprox, bisection otherwise.
double gamma_inverse(const ModulationModel& mod, double y);
// Bisection for any scheme, including LargeNApprox.
double gamma_inverse_numeric(const ModulationModel& mod, double y);

class PowerGame {
public:
    PowerGame(ChannelModel channel, ModulationModel modulation, std::vector<double> demands, double alpha = 1.0,
              CostBasis basis = CostBasis::Throughput, double price = 1.0, double power_price = 1e-3);

    const ChannelModel& channel() const noexcept { return channel_; }
    const ModulationModel& modulation() const noexcept { return modulation_; }
    const std::vector<double>& demands() const noexcept { return demands_; }
    double alpha() const noexcept { return alpha_; }
    CostBasis cost_basis() const noexcept { return basis_; }
    // Utility normalization M of the arctan utilities.
    double price() const noexcept { return price_; }
    // Cost per unit transmit power under the power cost basis.
    double power_price() const noexcept { return power_price_; }
    // Upsilon_i = Gamma^{-1}(y_i) / h_ii
    const std::vector<double>& upsilon() const noexcept { return upsilon_; }
    std::size_t size() const noexcept { return demands_.size(); }

    PowerGame with_alpha(double alpha) const;

private:
    ChannelModel channel_;
    ModulationModel modulation_;
    std::vector<double> demands_;
    double alpha_;
    CostBasis basis_;
    double price_;
    double power_price_;
    std::vector<double> upsilon_;
};

std::vector<double> upsilon(const PowerGame& game);

/// F_i = Upsilon_i (N + sum_{j != i} q_j h_ji)
StrategyVector selfish_power_response(const PowerGame& game, const StrategyVector& q);

/// G_i = (q_{3-i} / Upsilon_{3-i} - N) / h_{i,3-i}, floored at zero.
StrategyVector altruistic_power_response(const PowerGame& game, const StrategyVector& q);

struct PowerNep {
    StrategyVector q;
    bool feasible = true; // all components nonnegative
};

/// Solves (I - Psi^T) q = N Upsilon. Throws NoSolutionError when singular.
PowerNep power_nep(const PowerGame& game);

double lyapunov_power_selfish(const PowerGame& game, const StrategyVector& q);
std::vector<double> lyapunov_power_selfish_gradient(const PowerGame& game, const StrategyVector& q);
double lyapunov_power_altruistic(const PowerGame& game, const StrategyVector& q);
std::vector<double> lyapunov_power_altruistic_gradient(const PowerGame& game, const StrategyVector& q);
Eigen::Matrix2d lyapunov_power_altruistic_hessian(const PowerGame& game);

struct StabilityProducts {
    double product = 0.0; // prod_i h_{i,3-i} Upsilon_i
    bool selfish_stable = false;
    bool altruistic_stable = false;
    bool marginal = false;
};

StabilityProducts stability_products(const PowerGame& game);

// Default power cap: ten times the Euclidean norm of the equilibrium.
double default_power_cap(const PowerGame& game);

VectorField power_selfish_field(const PowerGame& game, double cap);
VectorField power_altruistic_field(const PowerGame& game, double cap);

// Altruistic objective of flow i with the other power fixed. Throughput basis:
// alpha V_i + (1-alpha) V_other with V_j = U_j(gamma_j) - M gamma_j; power basis:
// alpha U_i + (1-alpha) U_other - c q_i with c the power price. Utilities are the
// normalized arctan family built from the demands.
double power_objective(const PowerGame& game, std::size_t i, double q_i, double q_other);
double power_objective_slope(const PowerGame& game, std::size_t i, double q_i, double q_other);
double power_partial_response(const PowerGame& game, std::size_t i, const StrategyVector& q, double cap);
VectorField power_partial_field(const PowerGame& game, double cap);

struct PowerSweepRow {
    double alpha = 0.0;
    StrategyVector q;
    double residual = 0.0;
    bool converged = false;
    std::string error;

    double norm() const;
};

struct PowerSweepOptions {
    std::optional<double> cap;
    std::optional<StrategyVector> start; // defaults to the selfish equilibrium
    double tol = 1e-6;
    double eta = 0.2;
    std::size_t max_iterations = 100000;
};

/// Follows the partial-altruism equilibrium from alpha to alpha in the order
/// given, warm-starting each solve from the previous result.
std::vector<PowerSweepRow> power_cost_alpha_sweep(const PowerGame& game, const std::vector<double>& alphas,
                                                  const PowerSweepOptions& opt = {});

} // namespace gamelab
