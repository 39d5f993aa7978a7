#pragma once

#include "gamelab/aloha.hpp"
#include "gamelab/errors.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gamelab {

using State = std::vector<double>;
using ResponseMap = std::function<State(const State&)>;
using LyapunovFn = std::function<double(const State&)>;

// Componentwise bounds on the state.
struct Box {
    State lower;
    State upper;

    static Box uniform(std::size_t dim, double lo, double hi);
    std::size_t dimension() const noexcept { return lower.size(); }
    bool contains(const State& q) const noexcept;
    bool strictly_inside(const State& q) const noexcept;
    State project(State q) const;
};

/// Continuous-time Jacobi dynamics q' = R(q) - q for a response map R.
class VectorField {
public:
    VectorField(ResponseMap response, Box box);

    std::size_t dimension() const noexcept { return box_.dimension(); }
    const Box& box() const noexcept { return box_; }
    State response(const State& q) const { return response_(q); }
    State velocity(const State& q) const;
    // ||R(q) - q||_inf
    double residual(const State& q) const;

private:
    ResponseMap response_;
    Box box_;
};

struct TrajectoryLog {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<double> lyapunov; // empty unless a function was supplied
    std::size_t descent_violations = 0;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, TrajectoryLog partial)
        : Error(what), partial_(std::move(partial)) {}
    const TrajectoryLog& partial() const noexcept { return partial_; }

private:
    TrajectoryLog partial_;
};

struct IntegrateOptions {
    double descent_tolerance = 1e-9;
    // When set, stop as soon as this predicate holds for the current state.
    std::function<bool(const State&)> stop_when;
};

/// Fixed-step RK4 with projection onto the box after every stage and step.
TrajectoryLog integrate(const VectorField& field, const State& q0, double dt, double t_end,
                        const LyapunovFn& lyapunov = {}, const IntegrateOptions& opt = {});

struct DescentSummary {
    double max_increment = 0.0;
    std::size_t violations = 0;
};

DescentSummary descent_report(const TrajectoryLog& traj, double tolerance = 1e-9);

struct FixedPoint {
    State q;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Damped iteration q <- q + eta (R(q) - q). Throws NonConvergenceError with the
/// last iterate after max_iterations.
FixedPoint find_fixed_point(const VectorField& field, const State& q_start, double tol = 1e-10,
                            double eta = 0.2, std::size_t max_iterations = 100000);

/// Central-difference Jacobian of the velocity field. The step shrinks near the
/// box boundary; a point on the boundary throws BoundaryError.
Eigen::MatrixXd jacobian_fd(const VectorField& field, const State& q, double h = 1e-6);

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m);

enum class Classification { StableNode, StableFocus, Saddle, Unstable, Boundary, Inconclusive };

std::string_view to_string(Classification c);
bool is_stable(Classification c) noexcept;

struct EquilibriumReport {
    State location;
    double residual = 0.0;
    std::vector<std::complex<double>> eigenvalues;
    Classification classification = Classification::Inconclusive;
    std::optional<StabilityCriteria> criteria;

    double max_real_part() const;
};

struct ClassifyOptions {
    double residual_tolerance = 1e-6;
    double epsilon = 1e-8;
    double step = 1e-6;
};

/// Linearizes at q and classifies by eigenvalue real parts. Throws
/// NotAnEquilibriumError when the residual exceeds the tolerance. A point on the
/// box boundary is reported as Boundary without eigenvalues.
EquilibriumReport classify(const VectorField& field, const State& q, const ClassifyOptions& opt = {});

// Response fields of the two-player ALOHA game over its clip box.
VectorField selfish_field(const AlohaGame& game);
VectorField altruistic_field(const AlohaGame& game);
VectorField partial_field(const AlohaGame& game);
VectorField blend_linear_field(const AlohaGame& game);
VectorField blend_tilde_field(const AlohaGame& game);

struct SweepCell {
    double alpha = 0.0;
    std::size_t nep_index = 0;
    double max_real = 0.0;
    Classification classification = Classification::Inconclusive;
    std::string error; // non-empty when classification failed for this cell
};

struct StabilitySwitch {
    std::size_t nep_index = 0;
    double alpha_lo = 0.0;
    double alpha_hi = 0.0;
    bool stable_above = false; // stable for alpha > alpha_hi

    double alpha() const noexcept { return 0.5 * (alpha_lo + alpha_hi); }
};

struct AlphaSweep {
    std::vector<SweepCell> cells; // ordered by alpha, then nep index
    std::vector<StabilitySwitch> switches;
};

struct SweepOptions {
    double threshold_width = 1e-3;
    unsigned threads = 1;
    ClassifyOptions classify;
};

/// Classifies every equilibrium under the partial-altruism field at each alpha and
/// brackets each stability switch by bisection on the largest eigenvalue real part.
AlphaSweep sweep_alpha(const AlohaGame& game, const std::vector<State>& neps,
                       const std::vector<double>& alphas, const SweepOptions& opt = {});

struct Attractor {
    std::string label;
    State location;
    double radius = 1e-3;
};

enum class BasinMode {
    Limit, // first attractor whose capture ball the trajectory enters
    Trend, // attractor approached in every coordinate by the initial motion
};

struct GridSpec {
    double x_lo = 0.0, x_hi = 1.0;
    double y_lo = 0.0, y_hi = 1.0;
    std::size_t nx = 50, ny = 50;

    State point(std::size_t ix, std::size_t iy) const;
};

struct BasinGrid {
    GridSpec grid;
    std::vector<std::string> labels; // row-major over (iy, ix); "none" when unresolved

    const std::string& at(std::size_t ix, std::size_t iy) const { return labels[iy * grid.nx + ix]; }
};

struct BasinOptions {
    double t_end = 200.0;
    double dt = 0.01;
    BasinMode mode = BasinMode::Limit;
    unsigned threads = 1;
};

BasinGrid basin_sample(const VectorField& field, const GridSpec& grid, const std::vector<Attractor>& attractors,
                       const BasinOptions& opt = {});

/// Runs body(i) for i in [0, n) on up to `threads` workers. body must not share
/// mutable state across indices.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace gamelab
