#include "gamelab/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace gamelab {

Box Box::uniform(std::size_t dim, double lo, double hi)
{
    return {State(dim, lo), State(dim, hi)};
}

bool Box::contains(const State& q) const noexcept
{
    if (q.size() != lower.size())
        return false;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (!(q[i] >= lower[i] && q[i] <= upper[i]))
            return false;
    return true;
}

bool Box::strictly_inside(const State& q) const noexcept
{
    if (q.size() != lower.size())
        return false;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (!(q[i] > lower[i] && q[i] < upper[i]))
            return false;
    return true;
}

State Box::project(State q) const
{
    for (std::size_t i = 0; i < q.size(); ++i)
        q[i] = std::clamp(q[i], lower[i], upper[i]);
    return q;
}

VectorField::VectorField(ResponseMap response, Box box) : response_(std::move(response)), box_(std::move(box))
{
    if (box_.lower.size() != box_.upper.size() || box_.lower.empty())
        throw DomainError("vector field box must have matching, non-empty bounds");
    for (std::size_t i = 0; i < box_.dimension(); ++i)
        if (!(box_.lower[i] <= box_.upper[i]))
            throw DomainError("vector field box has lower > upper");
}

State VectorField::velocity(const State& q) const
{
    State r = response_(q);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] -= q[i];
    return r;
}

double VectorField::residual(const State& q) const
{
    const State v = velocity(q);
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

namespace {

bool all_finite(const State& q)
{
    return std::all_of(q.begin(), q.end(), [](double v) { return std::isfinite(v); });
}

State axpy(const State& q, double a, const State& k)
{
    State out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        out[i] = q[i] + a * k[i];
    return out;
}

State rk4_step(const VectorField& field, const State& q, double dt)
{
    const Box& box = field.box();
    const State k1 = field.velocity(q);
    const State k2 = field.velocity(box.project(axpy(q, 0.5 * dt, k1)));
    const State k3 = field.velocity(box.project(axpy(q, 0.5 * dt, k2)));
    const State k4 = field.velocity(box.project(axpy(q, dt, k3)));
    State next(q.size());
    for (std::size_t i = 0; i < q.size(); ++i)
        next[i] = q[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return all_finite(next) ? box.project(std::move(next)) : next;
}

} // namespace

TrajectoryLog integrate(const VectorField& field, const State& q0, double dt, double t_end,
                        const LyapunovFn& lyapunov, const IntegrateOptions& opt)
{
    if (!(dt > 0.0 && dt <= 0.1))
        throw DomainError("integration step must lie in (0, 0.1]");
    if (!(t_end > 0.0))
        throw DomainError("integration horizon must be positive");
    if (!field.box().contains(q0))
        throw DomainError("initial state lies outside the field's box");

    TrajectoryLog log;
    const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    log.times.reserve(steps + 1);
    log.states.reserve(steps + 1);
    log.times.push_back(0.0);
    log.states.push_back(q0);
    if (lyapunov)
        log.lyapunov.push_back(lyapunov(q0));
    if (opt.stop_when && opt.stop_when(q0))
        return log;

    State q = q0;
    for (std::size_t k = 1; k <= steps; ++k) {
        q = rk4_step(field, q, dt);
        if (!all_finite(q))
            throw IntegrationError("non-finite state at t = " + std::to_string(static_cast<double>(k) * dt),
                                   std::move(log));
        log.times.push_back(static_cast<double>(k) * dt);
        log.states.push_back(q);
        if (lyapunov) {
            const double v = lyapunov(q);
            if (v - log.lyapunov.back() > opt.descent_tolerance)
                ++log.descent_violations;
            log.lyapunov.push_back(v);
        }
        if (opt.stop_when && opt.stop_when(q))
            break;
    }
    return log;
}

DescentSummary descent_report(const TrajectoryLog& traj, double tolerance)
{
    DescentSummary s;
    for (std::size_t k = 1; k < traj.lyapunov.size(); ++k) {
        const double inc = traj.lyapunov[k] - traj.lyapunov[k - 1];
        s.max_increment = std::max(s.max_increment, inc);
        if (inc > tolerance)
            ++s.violations;
    }
    return s;
}

FixedPoint find_fixed_point(const VectorField& field, const State& q_start, double tol, double eta,
                            std::size_t max_iterations)
{
    if (!field.box().contains(q_start))
        throw DomainError("fixed-point start lies outside the field's box");
    State q = q_start;
    for (std::size_t it = 0; it <= max_iterations; ++it) {
        const State v = field.velocity(q);
        double r = 0.0;
        for (double x : v)
            r = std::max(r, std::abs(x));
        if (!std::isfinite(r))
            throw NonConvergenceError("fixed-point iteration produced a non-finite residual", q, r);
        if (r < tol)
            return {q, r, it};
        if (it == max_iterations)
            throw NonConvergenceError("fixed-point iteration did not converge", q, r);
        q = field.box().project(axpy(q, eta, v));
    }
    return {q, field.residual(q), max_iterations};
}

Eigen::MatrixXd jacobian_fd(const VectorField& field, const State& q, double h)
{
    const Box& box = field.box();
    if (!box.strictly_inside(q))
        throw BoundaryError("finite-difference Jacobian needs a point strictly inside the box");
    const std::size_t n = q.size();
    Eigen::MatrixXd jac(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double room = std::min(q[k] - box.lower[k], box.upper[k] - q[k]);
        const double step = std::min(h, 0.5 * room);
        State plus = q;
        State minus = q;
        plus[k] += step;
        minus[k] -= step;
        const State vp = field.velocity(plus);
        const State vm = field.velocity(minus);
        for (std::size_t i = 0; i < n; ++i)
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (vp[i] - vm[i]) / (2.0 * step);
    }
    return jac;
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols())
        throw DomainError("eigenvalues need a square matrix");
    if (m.rows() == 2) {
        const double half_tr = 0.5 * (m(0, 0) + m(1, 1));
        const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
        const double half_diff = 0.5 * (m(0, 0) - m(1, 1));
        // half_tr^2 - det written without cancellation for near-equal diagonals.
        const double disc = half_diff * half_diff + m(0, 1) * m(1, 0);
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            const double big = half_tr >= 0.0 ? half_tr + s : half_tr - s;
            const double other = big != 0.0 ? det / big : half_tr - s;
            std::vector<std::complex<double>> ev{{big, 0.0}, {other, 0.0}};
            std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() < b.real(); });
            return ev;
        }
        const double s = std::sqrt(-disc);
        return {{half_tr, -s}, {half_tr, s}};
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success)
        throw Error("eigenvalue iteration failed");
    std::vector<std::complex<double>> ev(solver.eigenvalues().begin(), solver.eigenvalues().end());
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() < b.real(); });
    return ev;
}

std::string_view to_string(Classification c)
{
    switch (c) {
    case Classification::StableNode: return "stable_node";
    case Classification::StableFocus: return "stable_focus";
    case Classification::Saddle: return "saddle";
    case Classification::Unstable: return "unstable";
    case Classification::Boundary: return "boundary";
    case Classification::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

bool is_stable(Classification c) noexcept
{
    return c == Classification::StableNode || c == Classification::StableFocus;
}

double EquilibriumReport::max_real_part() const
{
    if (eigenvalues.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& e : eigenvalues)
        m = std::max(m, e.real());
    return m;
}

EquilibriumReport classify(const VectorField& field, const State& q, const ClassifyOptions& opt)
{
    EquilibriumReport rep;
    rep.location = q;
    rep.residual = field.residual(q);
    if (!(rep.residual <= opt.residual_tolerance))
        throw NotAnEquilibriumError("point is not an equilibrium of the field", rep.residual);
    if (!field.box().strictly_inside(q)) {
        rep.classification = Classification::Boundary;
        return rep;
    }
    rep.eigenvalues = eigenvalues(jacobian_fd(field, q, opt.step));
    bool any_neg = false;
    bool any_pos = false;
    bool any_zero = false;
    bool complex_pair = false;
    for (const auto& e : rep.eigenvalues) {
        if (std::abs(e.real()) <= opt.epsilon)
            any_zero = true;
        else if (e.real() < 0.0)
            any_neg = true;
        else
            any_pos = true;
        if (e.imag() != 0.0)
            complex_pair = true;
    }
    if (any_zero)
        rep.classification = Classification::Inconclusive;
    else if (any_neg && any_pos)
        rep.classification = Classification::Saddle;
    else if (any_pos)
        rep.classification = Classification::Unstable;
    else
        rep.classification = complex_pair ? Classification::StableFocus : Classification::StableNode;
    return rep;
}

namespace {

Box clip_box(const AlohaGame& game)
{
    return Box::uniform(game.size(), game.clip().q_min, game.clip().q_max);
}

} // namespace

VectorField selfish_field(const AlohaGame& game)
{
    return VectorField([game](const State& q) { return selfish_response(game, q); }, clip_box(game));
}

VectorField altruistic_field(const AlohaGame& game)
{
    return VectorField([game](const State& q) { return altruistic_response(game, q); }, clip_box(game));
}

VectorField partial_field(const AlohaGame& game)
{
    return VectorField([game](const State& q) { return partial_response(game, q); }, clip_box(game));
}

VectorField blend_linear_field(const AlohaGame& game)
{
    return VectorField([game](const State& q) { return blended_response_linear(game, q); }, clip_box(game));
}

VectorField blend_tilde_field(const AlohaGame& game)
{
    return VectorField([game](const State& q) { return blended_response_tilde(game, q); }, clip_box(game));
}

AlphaSweep sweep_alpha(const AlohaGame& game, const std::vector<State>& neps, const std::vector<double>& alphas,
                       const SweepOptions& opt)
{
    if (game.size() != 2)
        throw UnsupportedError("alpha sweeps are defined for two players only");
    std::vector<double> grid = alphas;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const auto max_real_at = [&](double alpha, const State& nep) {
        return classify(partial_field(game.with_alpha(alpha)), nep, opt.classify).max_real_part();
    };

    AlphaSweep out;
    out.cells.resize(grid.size() * neps.size());
    parallel_for(out.cells.size(), opt.threads, [&](std::size_t idx) {
        SweepCell& cell = out.cells[idx];
        cell.alpha = grid[idx / neps.size()];
        cell.nep_index = idx % neps.size();
        try {
            const auto rep = classify(partial_field(game.with_alpha(cell.alpha)), neps[cell.nep_index], opt.classify);
            cell.classification = rep.classification;
            cell.max_real = rep.max_real_part();
        } catch (const Error& e) {
            cell.error = e.what();
            cell.max_real = std::numeric_limits<double>::quiet_NaN();
        }
    });

    struct Bracket {
        std::size_t nep;
        double lo, hi, f_lo;
    };
    std::vector<Bracket> brackets;
    for (std::size_t n = 0; n < neps.size(); ++n) {
        for (std::size_t a = 0; a + 1 < grid.size(); ++a) {
            const SweepCell& lo = out.cells[a * neps.size() + n];
            const SweepCell& hi = out.cells[(a + 1) * neps.size() + n];
            if (!lo.error.empty() || !hi.error.empty())
                continue;
            if (!std::isfinite(lo.max_real) || !std::isfinite(hi.max_real))
                continue;
            if ((lo.max_real < 0.0) != (hi.max_real < 0.0))
                brackets.push_back({n, lo.alpha, hi.alpha, lo.max_real});
        }
    }
    out.switches.resize(brackets.size());
    parallel_for(brackets.size(), opt.threads, [&](std::size_t b) {
        Bracket br = brackets[b];
        const bool stable_lo = br.f_lo < 0.0;
        while (br.hi - br.lo > opt.threshold_width) {
            const double mid = 0.5 * (br.lo + br.hi);
            const double f = max_real_at(mid, neps[br.nep]);
            if ((f < 0.0) == stable_lo)
                br.lo = mid;
            else
                br.hi = mid;
        }
        out.switches[b] = {br.nep, br.lo, br.hi, !stable_lo};
    });
    return out;
}

State GridSpec::point(std::size_t ix, std::size_t iy) const
{
    const double fx = nx > 1 ? static_cast<double>(ix) / static_cast<double>(nx - 1) : 0.5;
    const double fy = ny > 1 ? static_cast<double>(iy) / static_cast<double>(ny - 1) : 0.5;
    return {x_lo + fx * (x_hi - x_lo), y_lo + fy * (y_hi - y_lo)};
}

namespace {

double distance_inf(const State& a, const State& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

int captured_by(const State& q, const std::vector<Attractor>& attractors)
{
    for (std::size_t a = 0; a < attractors.size(); ++a)
        if (distance_inf(q, attractors[a].location) <= attractors[a].radius)
            return static_cast<int>(a);
    return -1;
}

int trend_label(const VectorField& field, const State& q0, double dt, const std::vector<Attractor>& attractors)
{
    const TrajectoryLog step = integrate(field, q0, dt, dt);
    const State& q1 = step.states.back();
    int found = -1;
    for (std::size_t a = 0; a < attractors.size(); ++a) {
        const State& e = attractors[a].location;
        bool agrees = true;
        for (std::size_t k = 0; k < q0.size() && agrees; ++k) {
            const double move = q1[k] - q0[k];
            const double gap = e[k] - q0[k];
            if (std::abs(move) <= 1e-14)
                agrees = std::abs(gap) <= attractors[a].radius;
            else
                agrees = move * gap > 0.0;
        }
        if (agrees) {
            if (found >= 0)
                return -1; // ambiguous
            found = static_cast<int>(a);
        }
    }
    return found;
}

} // namespace

BasinGrid basin_sample(const VectorField& field, const GridSpec& grid, const std::vector<Attractor>& attractors,
                       const BasinOptions& opt)
{
    if (field.dimension() != 2)
        throw UnsupportedError("basin sampling is defined on two-dimensional grids");
    if (grid.nx == 0 || grid.ny == 0)
        throw DomainError("basin grid must be non-empty");
    BasinGrid out{grid, std::vector<std::string>(grid.nx * grid.ny, "none")};
    parallel_for(out.labels.size(), opt.threads, [&](std::size_t idx) {
        const State q0 = field.box().project(grid.point(idx % grid.nx, idx / grid.nx));
        int label = captured_by(q0, attractors);
        if (label < 0) {
            try {
                if (opt.mode == BasinMode::Trend) {
                    label = trend_label(field, q0, opt.dt, attractors);
                } else {
                    IntegrateOptions io;
                    io.stop_when = [&](const State& q) { return captured_by(q, attractors) >= 0; };
                    const TrajectoryLog traj = integrate(field, q0, opt.dt, opt.t_end, {}, io);
                    label = captured_by(traj.states.back(), attractors);
                }
            } catch (const Error&) {
                label = -1;
            }
        }
        if (label >= 0)
            out.labels[idx] = attractors[static_cast<std::size_t>(label)].label;
    });
    return out;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace gamelab
