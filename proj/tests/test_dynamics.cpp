#include "gamelab/dynamics.hpp"
#include "gamelab/errors.hpp"
#include "gamelab/powerctl.hpp"
#include "gamelab/variations.hpp"

#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>

using namespace gamelab;
using testing_support::max_abs_diff;

namespace {

const std::vector<double> kY{8.0 / 15.0, 1.0 / 15.0};
const State kNepA{2.0 / 3.0, 1.0 / 5.0};
const State kNepB{4.0 / 5.0, 1.0 / 3.0};

AlohaGame base_game(double alpha = 1.0)
{
    return AlohaGame::from_demands(kY, alpha);
}

// Plain undamped iteration q <- F(q), written out here. Converges at the stable NEP.
State iterate_selfish(State q, int n)
{
    for (int k = 0; k < n; ++k)
        q = {kY[0] / (1.0 - q[1]), kY[1] / (1.0 - q[0])};
    return q;
}

PowerGame power_example()
{
    return PowerGame(ChannelModel::two_flow(1.0, 0.1, 0.005), ModulationModel{Modulation::LargeNApprox, 1024, {}},
                     {0.97, 0.98});
}

VectorField affine(Eigen::Matrix2d a, Eigen::Vector2d c, double lo = -10, double hi = 10)
{
    // velocity A (q - c)
    return VectorField(
        [a, c](const State& q) {
            const Eigen::Vector2d x(q[0], q[1]);
            const Eigen::Vector2d r = x + a * (x - c);
            return State{r[0], r[1]};
        },
        Box::uniform(2, lo, hi));
}

} // namespace

TEST_CASE("box")
{
    const Box b = Box::uniform(2, 0.0, 1.0);
    CHECK(b.contains({0.0, 1.0}));
    CHECK_FALSE(b.strictly_inside({0.0, 0.5}));
    CHECK(b.strictly_inside({0.2, 0.5}));
    CHECK(b.project({-1.0, 2.0}) == State{0.0, 1.0});
}

TEST_CASE("integrate converges to the stable selfish equilibrium")
{
    const State oracle = iterate_selfish({0.6, 0.22}, 5000);
    CHECK(max_abs_diff(oracle, kNepA) < 1e-12);
    const auto traj = integrate(selfish_field(base_game()), {0.6, 0.22}, 0.01, 50.0);
    CHECK(max_abs_diff(traj.states.back(), oracle) < 1e-4);
    CHECK(traj.times.back() == doctest::Approx(50.0));
    for (std::size_t k = 1; k < traj.times.size(); ++k)
        REQUIRE(traj.times[k] > traj.times[k - 1]);
}

TEST_CASE("integrate converges to the stable altruistic equilibrium")
{
    const auto traj = integrate(altruistic_field(base_game(0.0)), {0.78, 0.30}, 0.01, 50.0);
    CHECK(max_abs_diff(traj.states.back(), kNepB) < 1e-4);
}

TEST_CASE("integrate holds an exact equilibrium")
{
    const auto field = affine(-Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.3, 0.4));
    const auto traj = integrate(field, {0.3, 0.4}, 0.01, 10.0);
    for (const auto& s : traj.states)
        CHECK(max_abs_diff(s, {0.3, 0.4}) == 0.0);

    const auto g = integrate(selfish_field(base_game()), kNepA, 0.01, 1.0);
    CHECK(max_abs_diff(g.states.back(), kNepA) < 1e-12);
}

TEST_CASE("integrate preconditions and failures")
{
    const auto field = selfish_field(base_game());
    CHECK_THROWS_AS(integrate(field, {0.5, 0.3}, 0.2, 1.0), DomainError);
    CHECK_THROWS_AS(integrate(field, {0.5, 0.3}, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(integrate(field, {0.5, 1.3}, 0.01, 1.0), DomainError);

    const VectorField bad([](const State& q) { return State{q[0] > 0.6 ? std::nan("") : q[0] + 0.5, q[1]}; },
                          Box::uniform(2, 0.0, 1.0));
    try {
        integrate(bad, {0.5, 0.5}, 0.01, 5.0);
        FAIL("expected an integration error");
    } catch (const IntegrationError& e) {
        CHECK_FALSE(e.partial().states.empty());
        CHECK(e.partial().states.front() == State{0.5, 0.5});
    }
}

TEST_CASE("clip absorption")
{
    const VectorField out([](const State&) { return State{2.0, -1.0}; }, Box::uniform(2, 0.0, 1.0));
    const auto traj = integrate(out, {0.5, 0.5}, 0.05, 10.0);
    for (const auto& s : traj.states) {
        REQUIRE(s[0] <= 1.0);
        REQUIRE(s[1] >= 0.0);
    }
    CHECK(traj.states.back() == State{1.0, 0.0});

    // random selfish trajectories stay inside the clip box
    for (int k = 0; k < 10; ++k) {
        const State q0{testing_support::uniform(0.01, 0.99), testing_support::uniform(0.01, 0.99)};
        for (const auto& s : integrate(selfish_field(base_game()), q0, 0.05, 20.0).states)
            REQUIRE(Box::uniform(2, 0.01, 0.99).contains(s));
    }
}

TEST_CASE("RK4 error is fourth order on the affine power field")
{
    const auto game = power_example();
    const double cap = default_power_cap(game);
    const auto field = power_selfish_field(game, cap);
    const auto q_star = power_nep(game).q;
    const auto ups = game.upsilon();
    // velocity = -(q - q*) + K (q - q*), K = [[0, a], [b, 0]]
    const double a = ups[0] * game.channel().gain(1, 0), b = ups[1] * game.channel().gain(0, 1);
    const double r = std::sqrt(a * b);
    const State q0{100.0, 150.0};
    const double t = 1.0, e = std::exp(-t);
    const double d0 = q0[0] - q_star[0], d1 = q0[1] - q_star[1];
    const State exact{q_star[0] + e * (std::cosh(r * t) * d0 + a / r * std::sinh(r * t) * d1),
                      q_star[1] + e * (b / r * std::sinh(r * t) * d0 + std::cosh(r * t) * d1)};

    std::vector<double> errs;
    for (double dt : {0.1, 0.05, 0.025})
        errs.push_back(max_abs_diff(integrate(field, q0, dt, t).states.back(), exact));
    for (std::size_t k = 1; k < errs.size(); ++k) {
        const double ratio = errs[k - 1] / errs[k];
        CAPTURE(ratio);
        CHECK(ratio > 12.0);
        CHECK(ratio < 20.0);
    }
}

TEST_CASE("fixed points")
{
    const auto field = selfish_field(base_game());
    const auto fp = find_fixed_point(field, {0.6, 0.22});
    CHECK(max_abs_diff(fp.q, iterate_selfish({0.6, 0.22}, 5000)) < 1e-9);
    CHECK(fp.residual < 1e-10);

    const auto at = find_fixed_point(field, kNepA);
    CHECK(at.iterations == 0);

    const auto half = find_fixed_point(partial_field(base_game(0.5)), {0.79, 0.32});
    CHECK(max_abs_diff(half.q, kNepB) < 1e-6);

    const VectorField drift([](const State& q) { return State{q[0] + 0.1, q[1]}; }, Box::uniform(2, 0.0, 100.0));
    try {
        find_fixed_point(drift, {0.5, 0.5}, 1e-10, 0.2, 50);
        FAIL("expected non-convergence");
    } catch (const NonConvergenceError& e) {
        CHECK(e.last_iterate().size() == 2);
        CHECK(e.residual() > 0.0);
    }
}

TEST_CASE("jacobian")
{
    const auto field = selfish_field(base_game());
    // kept where neither response is clipped
    for (int k = 0; k < 20; ++k) {
        const State q{testing_support::uniform(0.05, 0.85), testing_support::uniform(0.05, 0.4)};
        const auto j = jacobian_fd(field, q);
        CHECK(j(0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
        CHECK(j(1, 1) == doctest::Approx(-1.0).epsilon(1e-5));
        CHECK(std::abs(j(0, 1) - kY[0] / ((1 - q[1]) * (1 - q[1]))) < 1e-5);
        CHECK(std::abs(j(1, 0) - kY[1] / ((1 - q[0]) * (1 - q[0]))) < 1e-5);
    }

    const VectorField constant([](const State&) { return State{0.3, 0.7}; }, Box::uniform(2, 0.0, 1.0));
    const auto jc = jacobian_fd(constant, {0.5, 0.5});
    CHECK((jc + Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);

    const auto game = power_example();
    const auto pf = power_selfish_field(game, default_power_cap(game));
    const auto ups = game.upsilon();
    for (const State q : {State{10.0, 20.0}, State{300.0, 1000.0}}) {
        const auto jp = jacobian_fd(pf, q);
        CHECK(jp(0, 0) == doctest::Approx(-1.0));
        CHECK(jp(0, 1) == doctest::Approx(ups[0] * game.channel().gain(1, 0)));
        CHECK(jp(1, 0) == doctest::Approx(ups[1] * game.channel().gain(0, 1)));
    }

    CHECK_THROWS_AS(jacobian_fd(field, {0.01, 0.5}), BoundaryError);
    // the step shrinks near the boundary instead of crossing it
    CHECK(std::abs(jacobian_fd(field, {0.0100001, 0.5})(1, 0) - kY[1] / (0.9899999 * 0.9899999)) < 1e-4);
}

TEST_CASE("classification")
{
    const auto sel = selfish_field(base_game());
    const auto a = classify(sel, kNepA);
    CHECK(a.classification == Classification::StableNode);
    CHECK(a.max_real_part() == doctest::Approx(-1.0 + std::sqrt(0.5)).epsilon(1e-6));
    const auto b = classify(sel, kNepB);
    CHECK(b.classification == Classification::Saddle);
    CHECK(b.max_real_part() == doctest::Approx(-1.0 + std::sqrt(2.0)).epsilon(1e-6));
    CHECK(classify(altruistic_field(base_game(0.0)), kNepB).classification == Classification::StableNode);
    CHECK(classify(altruistic_field(base_game(0.0)), kNepA).classification == Classification::Saddle);

    CHECK_THROWS_AS(classify(sel, {0.5, 0.5}), NotAnEquilibriumError);

    Eigen::Matrix2d focus;
    focus << -1, -2, 2, -1;
    const auto f = classify(affine(focus, Eigen::Vector2d(0.5, 0.5)), {0.5, 0.5});
    CHECK(f.classification == Classification::StableFocus);
    CHECK(std::abs(f.eigenvalues[0].imag()) == doctest::Approx(2.0));
    CHECK(classify(affine(Eigen::Matrix2d::Identity(), Eigen::Vector2d(0.5, 0.5)), {0.5, 0.5}).classification ==
          Classification::Unstable);
    CHECK(classify(affine(Eigen::Matrix2d::Zero(), Eigen::Vector2d(0.5, 0.5)), {0.5, 0.5}).classification ==
          Classification::Inconclusive);

    const VectorField corner([](const State&) { return State{1.0, 1.0}; }, Box::uniform(2, 0.0, 1.0));
    const auto c = classify(corner, {1.0, 1.0});
    CHECK(c.classification == Classification::Boundary);
    CHECK(c.eigenvalues.empty());
}

TEST_CASE("eigenvalues of the relaxation field are -1 +- sqrt(ab)")
{
    for (int k = 0; k < 50; ++k) {
        const double a = testing_support::uniform(0.0, 3.0), b = testing_support::uniform(0.0, 3.0);
        Eigen::Matrix2d m;
        m << -1, a, b, -1;
        auto ev = eigenvalues(m);
        std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return x.real() < y.real(); });
        CHECK(ev[0].real() == doctest::Approx(-1 - std::sqrt(a * b)));
        CHECK(ev[1].real() == doctest::Approx(-1 + std::sqrt(a * b)));
    }
}

TEST_CASE("classification agrees with the closed-form criteria at both endpoints")
{
    for (double alpha : {0.0, 1.0}) {
        const auto g = base_game(alpha);
        for (const auto& q : {kNepA, kNepB}) {
            const auto s = stability_criteria(g, q);
            const bool predicted = alpha == 1.0 ? s.stable_selfish() : s.stable_altruistic();
            CHECK(is_stable(classify(partial_field(g), q).classification) == predicted);
            CHECK(is_stable(classify(alpha == 1.0 ? selfish_field(g) : altruistic_field(g), q).classification) ==
                  predicted);
        }
    }
}

TEST_CASE("alpha sweep brackets both stability switches")
{
    std::vector<double> alphas;
    for (int k = 0; k <= 20; ++k)
        alphas.push_back(k / 20.0);
    SweepOptions opt;
    opt.threads = 2;
    const auto sweep = sweep_alpha(base_game(), {kNepA, kNepB}, alphas, opt);
    CHECK(sweep.cells.size() == 42);
    REQUIRE(sweep.switches.size() == 2);
    for (const auto& sw : sweep.switches) {
        CHECK(sw.alpha_hi - sw.alpha_lo <= 1e-3);
        if (sw.nep_index == 0) {
            CHECK(sw.alpha() >= 0.40);
            CHECK(sw.alpha() <= 0.44);
            CHECK(sw.stable_above);
        } else {
            CHECK(sw.alpha() >= 0.56);
            CHECK(sw.alpha() <= 0.60);
            CHECK_FALSE(sw.stable_above);
        }
    }
    for (const auto& c : sweep.cells) {
        CHECK(c.error.empty());
        if (c.alpha == 0.5)
            CHECK(is_stable(c.classification));
        if (c.alpha == 0.0)
            CHECK(is_stable(c.classification) == (c.nep_index == 1));
        if (c.alpha == 1.0)
            CHECK(is_stable(c.classification) == (c.nep_index == 0));
    }

    // a bad point records a per-cell error instead of aborting
    const auto bad = sweep_alpha(base_game(), {kNepA, {0.5, 0.5}}, {0.0, 1.0});
    CHECK(bad.cells.size() == 4);
    CHECK(bad.cells[0].error.empty());
    CHECK_FALSE(bad.cells[1].error.empty());

    // thread count does not change the result
    const auto serial = sweep_alpha(base_game(), {kNepA, kNepB}, alphas);
    REQUIRE(serial.cells.size() == sweep.cells.size());
    for (std::size_t k = 0; k < serial.cells.size(); ++k)
        CHECK(serial.cells[k].max_real == sweep.cells[k].max_real);
}

TEST_CASE("basin sampling on the linear game")
{
    LinearGame g;
    g.u = {3.0, 2.0};
    g.alpha = 0.5;
    const auto phi = linear_saddle(g);
    const std::vector<Attractor> att{{"(0,1)", {0.0, 1.0}, 1e-3}, {"(1,0)", {1.0, 0.0}, 1e-3}, {"phi", phi, 1e-3}};
    GridSpec grid{0.0, 1.0, 0.0, 1.0, 21, 21};
    BasinOptions opt;
    opt.t_end = 50.0;
    opt.threads = 3;
    const auto limit = basin_sample(linear_field(g), grid, att, opt);
    CHECK(limit.labels.size() == 21 * 21);
    CHECK(limit.at(2, 19) == "(0,1)");  // left of phi_1, above phi_2
    CHECK(limit.at(19, 2) == "(1,0)");

    // a start at the saddle stays there
    GridSpec single{phi[0], phi[0], phi[1], phi[1], 1, 1};
    CHECK(basin_sample(linear_field(g), single, att, opt).labels.front() == "phi");

    opt.mode = BasinMode::Trend;
    const auto trend = basin_sample(linear_field(g), grid, att, opt);
    CHECK(trend.at(2, 19) == "(0,1)");
    CHECK(trend.at(19, 2) == "(1,0)");
    CHECK(trend.at(2, 2) == "phi");
    CHECK(trend.at(19, 19) == "phi");
}

TEST_CASE("grid points")
{
    GridSpec g{0.0, 1.0, 2.0, 4.0, 3, 5};
    CHECK(g.point(0, 0) == State{0.0, 2.0});
    CHECK(g.point(2, 4) == State{1.0, 4.0});
    CHECK(g.point(1, 2) == State{0.5, 3.0});
}

TEST_CASE("descent reports")
{
    const auto lam = [](const State& q) { return lyapunov_selfish(kY, q); };
    const auto sel = integrate(selfish_field(base_game()), {0.3, 0.5}, 0.01, 30.0, lam);
    CHECK(sel.descent_violations == 0);
    CHECK(descent_report(sel).violations == 0);
    CHECK(descent_report(sel).max_increment <= 1e-9);

    TrajectoryLog flat;
    flat.times = {0, 1, 2};
    flat.states = {{0.1}, {0.1}, {0.1}};
    flat.lyapunov = {3.0, 3.0, 3.0};
    CHECK(descent_report(flat).max_increment == 0.0);
    CHECK(descent_report(flat).violations == 0);

    // negative control: Lambda is not a Lyapunov function for the altruistic dynamics
    std::size_t total = 0;
    for (const State q0 : {State{0.3, 0.5}, State{0.5, 0.1}, State{0.9, 0.6}, State{0.2, 0.2}})
        total += integrate(altruistic_field(base_game(0.0)), q0, 0.01, 30.0, lam).descent_violations;
    CHECK(total > 0);
}

TEST_CASE("parallel_for visits each index once")
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits)
        CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw DomainError("x"); }), DomainError);
}
