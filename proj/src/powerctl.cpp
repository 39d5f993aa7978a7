#include "gamelab/powerctl.hpp"

#include "gamelab/errors.hpp"
#include "gamelab/scalar_search.hpp"
#include "gamelab/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace gamelab {

double db_to_linear(double db)
{
    return std::pow(10.0, db / 10.0);
}

ChannelModel::ChannelModel(double noise, Eigen::MatrixXd gains, double processing_gain)
    : noise_(noise), gains_(std::move(gains)), processing_gain_(processing_gain)
{
    if (!(noise_ > 0.0))
        throw DomainError("noise power must be positive");
    if (gains_.rows() != gains_.cols() || gains_.rows() == 0)
        throw DomainError("gain matrix must be square and non-empty");
    if (!(processing_gain_ >= 1.0))
        throw DomainError("processing gain must be at least 1");
    for (Eigen::Index j = 0; j < gains_.rows(); ++j)
        for (Eigen::Index i = 0; i < gains_.cols(); ++i) {
            if (!(gains_(j, i) >= 0.0) || !std::isfinite(gains_(j, i)))
                throw DomainError("path gains must be finite and nonnegative");
            if (i == j && !(gains_(j, i) > 0.0))
                throw DomainError("direct path gains must be positive");
        }
}

ChannelModel ChannelModel::two_flow(double noise, double direct, double cross, double processing_gain)
{
    Eigen::MatrixXd h(2, 2);
    h << direct, cross, cross, direct;
    return ChannelModel(noise, h, processing_gain);
}

double ChannelModel::gain(std::size_t j, std::size_t i) const
{
    const double g = gains_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    return i == j ? g : g / processing_gain_;
}

std::string_view to_string(Modulation m)
{
    switch (m) {
    case Modulation::GMSK: return "gmsk";
    case Modulation::DBPSK: return "dbpsk";
    case Modulation::GFSK: return "gfsk";
    case Modulation::QPSK: return "qpsk";
    case Modulation::QAM16: return "qam16";
    case Modulation::QAM64: return "qam64";
    case Modulation::LargeNApprox: return "large_n";
    }
    return "unknown";
}

Modulation modulation_from_string(std::string_view name)
{
    for (auto m : {Modulation::GMSK, Modulation::DBPSK, Modulation::GFSK, Modulation::QPSK, Modulation::QAM16,
                   Modulation::QAM64, Modulation::LargeNApprox})
        if (to_string(m) == name)
            return m;
    throw DomainError("unknown modulation scheme '" + std::string(name) + "'");
}

void ModulationModel::validate() const
{
    if (bits < 1)
        throw DomainError("bits per frame must be at least 1");
    if (scheme == Modulation::GMSK && !(kappa && *kappa > 0.0))
        throw DomainError("GMSK needs a positive kappa");
    if (scheme != Modulation::GMSK && kappa)
        throw DomainError("kappa applies to GMSK only");
}

double sinr(const ChannelModel& channel, const StrategyVector& q, std::size_t i)
{
    if (q.size() != channel.size() || i >= q.size())
        throw DomainError("power vector does not match the channel");
    double interference = channel.noise();
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (!(q[j] >= 0.0))
            throw DomainError("transmit powers must be nonnegative");
        if (j != i)
            interference += channel.gain(j, i) * q[j];
    }
    return q[i] * channel.gain(i, i) / interference;
}

namespace {

// p_e = c erfc(sqrt(k s)) or c exp(-k s)
struct BitErrorShape {
    double c;
    double k;
    bool erfc_form;
};

BitErrorShape shape_of(const ModulationModel& mod)
{
    switch (mod.scheme) {
    case Modulation::GMSK: return {0.5, *mod.kappa, true};
    case Modulation::DBPSK: return {0.5, 1.0, false};
    case Modulation::GFSK: return {0.5, 0.5, false};
    case Modulation::QPSK: return {0.5, 1.0, true};
    case Modulation::QAM16: return {3.0 / 8.0, 2.0 / 5.0, true};
    case Modulation::QAM64: return {7.0 / 32.0, 4.0 / 21.0, true};
    case Modulation::LargeNApprox: break;
    }
    throw UnsupportedError("the large-frame approximation has no bit error model");
}

void require_sinr(double s)
{
    if (!(s >= 0.0))
        throw DomainError("SINR must be nonnegative");
}

// -ln Gamma(s), decreasing in s.
double neg_log_success(const ModulationModel& mod, double s)
{
    if (mod.scheme == Modulation::LargeNApprox)
        return static_cast<double>(mod.bits) * std::exp(-s);
    return -static_cast<double>(mod.bits) * std::log1p(-bit_error(mod, s));
}

} // namespace

double bit_error(const ModulationModel& mod, double s)
{
    require_sinr(s);
    mod.validate();
    const auto sh = shape_of(mod);
    return sh.erfc_form ? sh.c * std::erfc(std::sqrt(sh.k * s)) : sh.c * std::exp(-sh.k * s);
}

double frame_success(const ModulationModel& mod, double s)
{
    require_sinr(s);
    mod.validate();
    return std::exp(-neg_log_success(mod, s));
}

double frame_success_derivative(const ModulationModel& mod, double s)
{
    require_sinr(s);
    mod.validate();
    const double n = static_cast<double>(mod.bits);
    const double g = frame_success(mod, s);
    if (mod.scheme == Modulation::LargeNApprox)
        return g * n * std::exp(-s);
    const auto sh = shape_of(mod);
    const double p = bit_error(mod, s);
    double dp;
    if (sh.erfc_form) {
        if (s == 0.0)
            return g == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        dp = -sh.c * std::sqrt(sh.k) * std::exp(-sh.k * s) / std::sqrt(std::numbers::pi * s);
    } else {
        dp = -sh.k * p;
    }
    return -n * g * dp / (1.0 - p);
}

double gamma_inverse(const ModulationModel& mod, double y)
{
    if (!(y > 0.0 && y < 1.0))
        throw DomainError("frame success target must lie in (0,1)");
    mod.validate();
    if (mod.scheme != Modulation::LargeNApprox)
        return gamma_inverse_numeric(mod, y);
    const double s = std::log(static_cast<double>(mod.bits) / -std::log(y));
    if (!(s >= 0.0))
        throw NoSolutionError("target is below the zero-SINR frame success");
    return s;
}

double gamma_inverse_numeric(const ModulationModel& mod, double y)
{
    if (!(y > 0.0 && y < 1.0))
        throw DomainError("frame success target must lie in (0,1)");
    mod.validate();
    const double target = -std::log(y);
    const auto h = [&](double s) { return neg_log_success(mod, s) - target; };
    if (h(0.0) <= 0.0) {
        if (h(0.0) == 0.0)
            return 0.0;
        throw NoSolutionError("target is below the zero-SINR frame success");
    }
    double hi = 1.0;
    while (h(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e9)
            throw NoSolutionError("frame success target not reached at any finite SINR");
    }
    return bisect_root(h, 0.0, hi, 0.0);
}

PowerGame::PowerGame(ChannelModel channel, ModulationModel modulation, std::vector<double> demands, double alpha,
                     CostBasis basis, double price, double power_price)
    : channel_(std::move(channel)), modulation_(modulation), demands_(std::move(demands)), alpha_(alpha),
      basis_(basis), price_(price), power_price_(power_price)
{
    modulation_.validate();
    if (demands_.size() != channel_.size())
        throw DomainError("one demand per flow is required");
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0))
        throw DomainError("altruism alpha must lie in [0,1]");
    if (!(price_ > 0.0))
        throw DomainError("utility price must be positive");
    if (!(power_price_ >= 0.0))
        throw DomainError("power price must be nonnegative");
    upsilon_.reserve(demands_.size());
    for (std::size_t i = 0; i < demands_.size(); ++i) {
        if (!(demands_[i] > 0.0 && demands_[i] < 1.0))
            throw DomainError("frame success demands must lie in (0,1)");
        upsilon_.push_back(gamma_inverse(modulation_, demands_[i]) / channel_.gain(i, i));
    }
}

PowerGame PowerGame::with_alpha(double alpha) const
{
    return PowerGame(channel_, modulation_, demands_, alpha, basis_, price_, power_price_);
}

std::vector<double> upsilon(const PowerGame& game)
{
    return game.upsilon();
}

StrategyVector selfish_power_response(const PowerGame& game, const StrategyVector& q)
{
    const auto& ch = game.channel();
    if (q.size() != game.size())
        throw DomainError("power vector does not match the game");
    StrategyVector out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        double load = ch.noise();
        for (std::size_t j = 0; j < q.size(); ++j)
            if (j != i)
                load += q[j] * ch.gain(j, i);
        out[i] = std::max(0.0, game.upsilon()[i] * load);
    }
    return out;
}

StrategyVector altruistic_power_response(const PowerGame& game, const StrategyVector& q)
{
    if (game.size() != 2)
        throw UnsupportedError("altruistic power responses are defined for two flows only");
    if (q.size() != 2)
        throw DomainError("power vector does not match the game");
    const auto& ch = game.channel();
    StrategyVector out(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        const double cross = ch.gain(i, o);
        if (!(cross > 0.0))
            throw SingularInputError("altruistic response needs a positive cross gain");
        out[i] = std::max(0.0, (q[o] / game.upsilon()[o] - ch.noise()) / cross);
    }
    return out;
}

PowerNep power_nep(const PowerGame& game)
{
    const std::size_t n = game.size();
    const auto& ch = game.channel();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        rhs(ii) = ch.noise() * game.upsilon()[i];
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                a(ii, static_cast<Eigen::Index>(j)) = -game.upsilon()[i] * ch.gain(j, i);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw NoSolutionError("I - Psi is singular; no unique equilibrium");
    const Eigen::VectorXd sol = lu.solve(rhs);
    PowerNep nep;
    nep.q.assign(sol.data(), sol.data() + sol.size());
    nep.feasible = std::all_of(nep.q.begin(), nep.q.end(), [](double v) { return v >= 0.0; });
    return nep;
}

namespace {

void require_two_flows(const PowerGame& game, const StrategyVector& q)
{
    if (game.size() != 2 || q.size() != 2)
        throw UnsupportedError("this power-control quantity is defined for two flows only");
}

} // namespace

double lyapunov_power_selfish(const PowerGame& game, const StrategyVector& q)
{
    require_two_flows(game, q);
    const auto& ch = game.channel();
    const auto& up = game.upsilon();
    double value = 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        value += ch.gain(i, o) * up[o] * (0.5 * q[i] * q[i] - ch.noise() * up[i] * q[i]);
        prod *= q[i] * ch.gain(i, o) * up[i];
    }
    return value - prod;
}

std::vector<double> lyapunov_power_selfish_gradient(const PowerGame& game, const StrategyVector& q)
{
    require_two_flows(game, q);
    const auto f = selfish_power_response(game, q);
    const auto& ch = game.channel();
    std::vector<double> grad(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        // Unfloored affine response; F is nonnegative for nonnegative q anyway.
        grad[i] = ch.gain(i, o) * game.upsilon()[o] * (q[i] - f[i]);
    }
    return grad;
}

double lyapunov_power_altruistic(const PowerGame& game, const StrategyVector& q)
{
    require_two_flows(game, q);
    const auto& ch = game.channel();
    const auto& up = game.upsilon();
    double value = 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        value += (ch.noise() * q[i] / ch.gain(i, o) + 0.5 * q[i] * q[i]) / (ch.gain(o, i) * up[i]);
        prod *= q[i] / (ch.gain(i, o) * up[i]);
    }
    return value - prod;
}

std::vector<double> lyapunov_power_altruistic_gradient(const PowerGame& game, const StrategyVector& q)
{
    require_two_flows(game, q);
    const auto& ch = game.channel();
    const auto& up = game.upsilon();
    std::vector<double> grad(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const std::size_t o = 1 - i;
        const double target = (q[o] / up[o] - ch.noise()) / ch.gain(i, o);
        grad[i] = (q[i] - target) / (ch.gain(o, i) * up[i]);
    }
    return grad;
}

Eigen::Matrix2d lyapunov_power_altruistic_hessian(const PowerGame& game)
{
    if (game.size() != 2)
        throw UnsupportedError("this power-control quantity is defined for two flows only");
    const auto& ch = game.channel();
    const auto& up = game.upsilon();
    const double k = 1.0 / (ch.gain(0, 1) * up[0] * ch.gain(1, 0) * up[1]);
    Eigen::Matrix2d hess;
    hess << 1.0 / (ch.gain(1, 0) * up[0]), -k, -k, 1.0 / (ch.gain(0, 1) * up[1]);
    return hess;
}

StabilityProducts stability_products(const PowerGame& game)
{
    if (game.size() != 2)
        throw UnsupportedError("stability products are defined for two flows only");
    const auto& ch = game.channel();
    StabilityProducts s;
    s.product = ch.gain(0, 1) * game.upsilon()[0] * ch.gain(1, 0) * game.upsilon()[1];
    s.selfish_stable = s.product < 1.0;
    s.altruistic_stable = s.product > 1.0;
    s.marginal = s.product == 1.0;
    return s;
}

double default_power_cap(const PowerGame& game)
{
    const auto nep = power_nep(game);
    double sq = 0.0;
    for (double v : nep.q)
        sq += v * v;
    const double cap = 10.0 * std::sqrt(sq);
    if (!(cap > 0.0) || !std::isfinite(cap))
        throw NoSolutionError("cannot derive a power cap from the equilibrium");
    return cap;
}

VectorField power_selfish_field(const PowerGame& game, double cap)
{
    return VectorField([game](const State& q) { return selfish_power_response(game, q); },
                       Box::uniform(game.size(), 0.0, cap));
}

VectorField power_altruistic_field(const PowerGame& game, double cap)
{
    return VectorField([game](const State& q) { return altruistic_power_response(game, q); },
                       Box::uniform(game.size(), 0.0, cap));
}

namespace {

struct FlowState {
    double gamma_i, gamma_o;
    double dgamma_i, dgamma_o; // derivatives with respect to q_i
};

FlowState flow_state(const PowerGame& game, std::size_t i, double q_i, double q_o)
{
    const auto& ch = game.channel();
    const std::size_t o = 1 - i;
    const double load_i = ch.noise() + ch.gain(o, i) * q_o;
    const double load_o = ch.noise() + ch.gain(i, o) * q_i;
    const double s_i = q_i * ch.gain(i, i) / load_i;
    const double s_o = q_o * ch.gain(o, o) / load_o;
    const auto& mod = game.modulation();
    FlowState fs;
    fs.gamma_i = frame_success(mod, s_i);
    fs.gamma_o = frame_success(mod, s_o);
    fs.dgamma_i = frame_success_derivative(mod, s_i) * ch.gain(i, i) / load_i;
    fs.dgamma_o = s_o > 0.0 ? -frame_success_derivative(mod, s_o) * s_o * ch.gain(i, o) / load_o : 0.0;
    return fs;
}

} // namespace

double power_objective(const PowerGame& game, std::size_t i, double q_i, double q_other)
{
    if (game.size() != 2 || i > 1)
        throw UnsupportedError("partial responses are defined for two flows only");
    const auto fs = flow_state(game, i, q_i, q_other);
    const double m = game.price();
    const auto ui = UtilitySpec::arctan(game.demands()[i], m);
    const auto uo = UtilitySpec::arctan(game.demands()[1 - i], m);
    const double a = game.alpha();
    if (game.cost_basis() == CostBasis::Throughput)
        return a * (utility_value(ui, fs.gamma_i) - m * fs.gamma_i)
            + (1.0 - a) * (utility_value(uo, fs.gamma_o) - m * fs.gamma_o);
    return a * utility_value(ui, fs.gamma_i) + (1.0 - a) * utility_value(uo, fs.gamma_o)
        - game.power_price() * q_i;
}

double power_objective_slope(const PowerGame& game, std::size_t i, double q_i, double q_other)
{
    if (game.size() != 2 || i > 1)
        throw UnsupportedError("partial responses are defined for two flows only");
    const auto fs = flow_state(game, i, q_i, q_other);
    const double m = game.price();
    const auto ui = UtilitySpec::arctan(game.demands()[i], m);
    const auto uo = UtilitySpec::arctan(game.demands()[1 - i], m);
    const double a = game.alpha();
    if (game.cost_basis() == CostBasis::Throughput)
        return a * (utility_marginal(ui, fs.gamma_i) - m) * fs.dgamma_i
            + (1.0 - a) * (utility_marginal(uo, fs.gamma_o) - m) * fs.dgamma_o;
    return a * utility_marginal(ui, fs.gamma_i) * fs.dgamma_i
        + (1.0 - a) * utility_marginal(uo, fs.gamma_o) * fs.dgamma_o - game.power_price();
}

double power_partial_response(const PowerGame& game, std::size_t i, const StrategyVector& q, double cap)
{
    if (q.size() != 2)
        throw DomainError("power vector does not match the game");
    const double q_o = q[1 - i];
    return maximize_on_interval([&](double x) { return power_objective(game, i, x, q_o); },
                                [&](double x) { return power_objective_slope(game, i, x, q_o); }, 0.0, cap)
        .x;
}

VectorField power_partial_field(const PowerGame& game, double cap)
{
    if (game.size() != 2)
        throw UnsupportedError("partial responses are defined for two flows only");
    return VectorField(
        [game, cap](const State& q) {
            return State{power_partial_response(game, 0, q, cap), power_partial_response(game, 1, q, cap)};
        },
        Box::uniform(2, 0.0, cap));
}

double PowerSweepRow::norm() const
{
    double sq = 0.0;
    for (double v : q)
        sq += v * v;
    return std::sqrt(sq);
}

std::vector<PowerSweepRow> power_cost_alpha_sweep(const PowerGame& game, const std::vector<double>& alphas,
                                                  const PowerSweepOptions& opt)
{
    if (game.size() != 2)
        throw UnsupportedError("power alpha sweeps are defined for two flows only");
    const double cap = opt.cap ? *opt.cap : default_power_cap(game);
    State current;
    if (opt.start) {
        current = *opt.start;
    } else {
        const auto nep = power_nep(game);
        current = nep.feasible ? nep.q : State(2, 0.0);
    }
    current = Box::uniform(2, 0.0, cap).project(current);

    std::vector<PowerSweepRow> rows;
    rows.reserve(alphas.size());
    for (double alpha : alphas) {
        PowerSweepRow row;
        row.alpha = alpha;
        try {
            const auto field = power_partial_field(game.with_alpha(alpha), cap);
            const auto fp = find_fixed_point(field, current, opt.tol, opt.eta, opt.max_iterations);
            row.q = fp.q;
            row.residual = fp.residual;
            row.converged = true;
        } catch (const NonConvergenceError& e) {
            row.q = e.last_iterate();
            row.residual = e.residual();
            row.error = e.what();
        } catch (const Error& e) {
            row.q = current;
            row.residual = std::numeric_limits<double>::quiet_NaN();
            row.error = e.what();
        }
        current = row.q;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace gamelab
