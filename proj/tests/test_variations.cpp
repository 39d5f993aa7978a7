#include "gamelab/errors.hpp"
#include "gamelab/variations.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace gamelab;
using testing_support::uniform;

namespace {

LinearGame linear(double u1, double u2, double alpha, double price = 1.0, CostBasis basis = CostBasis::Throughput)
{
    LinearGame g;
    g.u = {u1, u2};
    g.price = price;
    g.alpha = alpha;
    g.basis = basis;
    return g;
}

PowerCostGame power_cost(double u1, double u2, double b1, double b2)
{
    return PowerCostGame({UtilitySpec::arctan_scaled(u1, b1), UtilitySpec::arctan_scaled(u2, b2)});
}

// Quadrant label the linear-game table predicts for a start q.
std::string expected_region(const StrategyVector& q, const StrategyVector& phi)
{
    const bool left = q[0] < phi[0], low = q[1] < phi[1];
    if (left && !low)
        return "(0,1)";
    if (!left && low)
        return "(1,0)";
    return "phi";
}

} // namespace

TEST_CASE("linear thresholds")
{
    CHECK(linear_threshold(linear(2.5, 2.5, 0.5), 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(linear_threshold(linear(3, 2, 1.0), 0) == 1.0);
    CHECK(linear_threshold(linear(3, 2, 1.0), 1) == 1.0);
    // own weight 1/2 * (2 - 1) against other 1/2 * (3 - 1)
    CHECK(linear_threshold(linear(3, 2, 0.5), 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(linear_threshold(linear(3, 2, 0.5), 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(linear_threshold(linear(2, 1, 0.0), 0), DegenerateError);
    CHECK_THROWS_AS(linear_threshold(linear(3, 2, 0.5), 2), DomainError);
}

TEST_CASE("power thresholds")
{
    const auto g = linear(3, 2, 0.5, 1.0, CostBasis::Power);
    CHECK(power_linear_threshold(g, 1) == doctest::Approx(0.5 * 1.0 / (0.5 * 2 + 0.5 * 3)).epsilon(1e-15));
    CHECK(power_linear_threshold(g, 0) == doctest::Approx(0.5 * 2.0 / (0.5 * 3 + 0.5 * 2)).epsilon(1e-15));
    CHECK(power_linear_threshold(linear(3, 2, 1.0, 1.0, CostBasis::Power), 0) == doctest::Approx(2.0 / 3.0));
    // M = 0 coincides with the throughput threshold at M = 0
    for (double a : {0.1, 0.5, 0.9}) {
        const auto p = linear(3, 2, a, 0.0, CostBasis::Power);
        const auto t = linear(3, 2, a, 0.0);
        CHECK(power_linear_threshold(p, 0) == doctest::Approx(linear_threshold(t, 0)).epsilon(1e-15));
    }
    CHECK(switch_threshold(g, 0) == power_linear_threshold(g, 0));
    CHECK(switch_threshold(linear(3, 2, 0.5), 0) == linear_threshold(linear(3, 2, 0.5), 0));
}

TEST_CASE("linear responses")
{
    CHECK(linear_response(linear(3, 2, 1.0), 0, {0.2, 0.5}) == 1.0);
    CHECK(linear_response(linear(3, 2, 0.0), 0, {0.2, 0.5}) == 0.0);
    const auto g = linear(3, 2, 0.5);
    const double phi = linear_threshold(g, 0);
    CHECK(linear_response(g, 0, {0.37, phi}) == 0.37);
    CHECK(linear_response(g, 0, {0.37, phi - 1e-9}) == 1.0);
    CHECK(linear_response(g, 0, {0.37, phi + 1e-9}) == 0.0);
}

TEST_CASE("linear saddle")
{
    CHECK(linear_saddle(linear(3, 2, 1.0)) == StrategyVector{1.0, 1.0});
    const auto s = linear_saddle(linear(2.5, 2.5, 0.5));
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[1] == doctest::Approx(0.5));
    const auto a = linear_saddle(linear(3, 2, 0.5));
    CHECK(a[0] == doctest::Approx(1.0 / 3.0));
    CHECK(a[1] == doctest::Approx(2.0 / 3.0));
    // the saddle is an equilibrium of the response
    const auto g = linear(3, 2, 0.5);
    CHECK(linear_response(g, 0, a) == a[0]);
    CHECK(linear_response(g, 1, a) == a[1]);
}

TEST_CASE("property: (0,1) and (1,0) are fixed for every alpha")
{
    for (int k = 0; k <= 20; ++k) {
        const auto g = linear(3, 2, k / 20.0);
        for (const StrategyVector q : {StrategyVector{0.0, 1.0}, StrategyVector{1.0, 0.0}}) {
            CAPTURE(k);
            if (k == 0) // alpha = 0: thresholds are 0, so the opponent at 0 is indifference
                continue;
            CHECK(linear_response(g, 0, q) == q[0]);
            CHECK(linear_response(g, 1, q) == q[1]);
        }
    }
    // alpha = 0 keeps them too: a player facing a silent opponent is indifferent
    const auto g0 = linear(3, 2, 0.0);
    CHECK(linear_response(g0, 0, {0.0, 1.0}) == 0.0);
    CHECK(linear_response(g0, 1, {0.0, 1.0}) == 1.0);
}

TEST_CASE("linear game validation")
{
    CHECK_THROWS_AS(linear_field(linear(1.0, 2.0, 0.5)), DomainError);
    CHECK_THROWS_AS(linear_field(linear(3, 2, 1.5)), DomainError);
    CHECK_NOTHROW(linear_field(linear(0.5, 2.0, 0.5, 1.0, CostBasis::Power)));
}

TEST_CASE("linear regime table on a 50x50 grid")
{
    for (double alpha : {0.3, 0.5, 0.7}) {
        const auto g = linear(3, 2, alpha);
        const auto phi = linear_saddle(g);
        const std::vector<Attractor> att{{"(0,1)", {0.0, 1.0}, 1e-3}, {"(1,0)", {1.0, 0.0}, 1e-3}, {"phi", phi, 1e-3}};
        const GridSpec grid{0.0, 1.0, 0.0, 1.0, 50, 50};
        BasinOptions opt;
        opt.mode = BasinMode::Trend;
        const auto basin = basin_sample(linear_field(g), grid, att, opt);
        const double step = 1.0 / 49.0;
        std::size_t checked = 0;
        std::map<std::string, std::size_t> seen;
        for (std::size_t iy = 0; iy < 50; ++iy)
            for (std::size_t ix = 0; ix < 50; ++ix) {
                const auto q = grid.point(ix, iy);
                if (std::abs(q[0] - phi[0]) <= 2 * step || std::abs(q[1] - phi[1]) <= 2 * step)
                    continue;
                CAPTURE(alpha);
                CAPTURE(q[0]);
                CAPTURE(q[1]);
                CHECK(basin.at(ix, iy) == expected_region(q, phi));
                ++seen[basin.at(ix, iy)];
                ++checked;
            }
        CHECK(checked > 1500);
        CHECK(seen.size() == 3);
    }
}

TEST_CASE("mirror price")
{
    CHECK(mirror_price(2.0, 1.0, 1.0) == 1.0);
    CHECK(mirror_price(2.0, 1.0, 0.0) == 2.0);
    CHECK(mirror_price(2.0, 1.0, 0.25) == 1.75);
    const auto at = linear(2, 2, 0.25, 1.0, CostBasis::Power);
    const auto mirror = linear(2, 2, 1.0, 1.75, CostBasis::Power);
    CHECK(std::abs(power_linear_threshold(at, 0) - power_linear_threshold(mirror, 0)) < 1e-12);
}

TEST_CASE("property: mirror identity on random symmetric instances")
{
    for (int k = 0; k < 100; ++k) {
        const double u = uniform(0.1, 10.0), m = uniform(0.0, u), a = uniform(0.0, 1.0);
        const auto g = linear(u, u, a, m, CostBasis::Power);
        const auto h = linear(u, u, 1.0, mirror_price(u, m, a), CostBasis::Power);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(std::abs(power_linear_threshold(g, i) - power_linear_threshold(h, i)) < 1e-12);
    }
}

TEST_CASE("power-cost selfish response")
{
    // u (1 - q_other) = 1 exactly: the square root vanishes
    const auto r1 = power_cost_selfish_response(power_cost(2, 2, 1, 1), 0, {0.3, 0.5});
    CHECK(r1.exact == 0.01);
    // u = 2 with q_other = 0.6: below one, infeasible branch
    CHECK(power_cost_selfish_response(power_cost(2, 2, 1, 1), 0, {0.3, 0.6}).exact == 0.01);

    // u = 100, beta = 20 keeps the response inside the box: sqrt(99)/20 against 10/20
    const auto r = power_cost_selfish_response(power_cost(100, 100, 20, 20), 0, {0.4, 0.0});
    CHECK(r.exact == doctest::Approx(std::sqrt(99.0) / 20.0).epsilon(1e-15));
    CHECK(r.approx == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(r.exact / r.approx - 1.0) < 0.006);
    CHECK(r.approx_valid);
    CHECK_FALSE(power_cost_selfish_response(power_cost(100, 100, 20, 20), 0, {0.4, 0.9}).approx_valid);

    // opponent always on
    const auto full = power_cost_selfish_response(power_cost(100, 100, 20, 20), 0, {0.4, 1.0});
    CHECK(full.exact == 0.01);
    CHECK(full.approx == 0.99);

    CHECK(power_cost(225, 100, 50, 50).demands()[0] == doctest::Approx(0.3));
    CHECK(power_cost(225, 100, 50, 50).demands()[1] == doctest::Approx(0.2));
    CHECK_THROWS_AS(PowerCostGame({UtilitySpec::arctan(0.3), UtilitySpec::arctan_scaled(4, 1)}), UnsupportedError);
}

TEST_CASE("property: approximate response within 5% in the large-slope regime")
{
    int used = 0;
    for (int k = 0; k < 2000; ++k) {
        const double u = uniform(20.0, 2000.0), beta = uniform(1.0, 200.0), qo = uniform(0.0, 0.99);
        const auto g = PowerCostGame({UtilitySpec::arctan_scaled(u, beta), UtilitySpec::arctan_scaled(u, beta)},
                                     ClipBox{1e-6, 1.0});
        const auto r = power_cost_selfish_response(g, 0, {0.5, qo});
        if (u * (1 - qo) < 20.0)
            continue;
        ++used;
        CHECK(r.approx_valid);
        CHECK(std::abs(r.exact - r.approx) <= 0.05 * r.approx);
    }
    CHECK(used > 100);
}

TEST_CASE("power-cost Lyapunov function")
{
    const std::array<double, 2> y{0.3, 0.2};
    CHECK(lyapunov_powercost(y, {0.0, 0.0}) == doctest::Approx(-0.06 + 2 * 0.5).epsilon(1e-15));
    CHECK_THROWS_AS(lyapunov_powercost(y, {1.0, 0.2}), SingularInputError);
    const std::array<double, 2> ys{0.25, 0.25};
    CHECK(lyapunov_powercost(ys, {0.3, 0.6}) == doctest::Approx(lyapunov_powercost(ys, {0.6, 0.3})).epsilon(1e-15));

    for (int k = 0; k < 30; ++k) {
        const StrategyVector q{uniform(0.0, 0.95), uniform(0.0, 0.95)};
        const auto fd = testing_support::fd_gradient([&](const auto& x) { return lyapunov_powercost(y, x); }, q);
        const auto an = lyapunov_powercost_gradient(y, q);
        CHECK(testing_support::rel_close(an[0], fd[0], 1e-6, 1e-9));
        CHECK(testing_support::rel_close(an[1], fd[1], 1e-6, 1e-9));
    }

    const auto g = power_cost(225, 100, 50, 50);
    const auto yy = g.demands();
    for (int k = 0; k < 10; ++k) {
        const StrategyVector q0{uniform(0.02, 0.98), uniform(0.02, 0.98)};
        const auto traj = integrate(power_cost_approx_field(g), q0, 0.01, 30.0,
                                    [&](const State& q) { return lyapunov_powercost(yy, q); });
        CHECK(traj.descent_violations == 0);
    }
}

TEST_CASE("altruistic power-cost equilibria")
{
    const auto plain = power_cost_altruistic_neps({UtilitySpec::arctan(0.3), UtilitySpec::arctan(0.2)});
    CHECK_FALSE(plain.saturating());
    CHECK(plain.contains({0.0, 0.4}));
    CHECK(plain.contains({0.7, 0.0}));
    CHECK_FALSE(plain.contains({0.1, 0.4}));
    CHECK_FALSE(plain.saturation_region_nonempty());

    const auto sat = AltruisticPowerCostNeps({0.1, 0.1});
    CHECK_FALSE(sat.in_saturation_region({0.9, 0.05}));
    CHECK(AltruisticPowerCostNeps({0.05, 0.05}).in_saturation_region({0.5, 0.5}));

    const auto both = power_cost_altruistic_neps({UtilitySpec::saturating(0.3, 0.2), UtilitySpec::saturating(0.3, 0.1)});
    REQUIRE(both.saturating());
    CHECK((*both.saturation())[0] == 0.2);
    CHECK(both.in_saturation_region({0.5, 0.4}) == (0.5 * 0.6 > 0.2 && 0.4 * 0.5 > 0.1));

    CHECK_THROWS_AS(power_cost_altruistic_neps({UtilitySpec::linear(2), UtilitySpec::arctan(0.2)}), UnsupportedError);
}

TEST_CASE("saturation region nonemptiness against a grid scan")
{
    int decided = 0;
    for (int k = 0; k < 60; ++k) {
        const double a = uniform(0.0, 0.6), b = uniform(0.0, 0.6);
        if (std::abs(std::sqrt(a) + std::sqrt(b) - 1.0) < 0.05)
            continue;
        const AltruisticPowerCostNeps n({a, b});
        bool found = false;
        for (int i = 0; i <= 400 && !found; ++i)
            for (int j = 0; j <= 400 && !found; ++j)
                found = n.in_saturation_region({i / 400.0, j / 400.0});
        CAPTURE(a);
        CAPTURE(b);
        CHECK(found == n.saturation_region_nonempty());
        ++decided;
    }
    CHECK(decided > 30);
}
