#include <doctest.h>

#include <cmath>
#include <random>

#include "semistatic/dual.hpp"
#include "semistatic/errors.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"
#include "oracles.hpp"

using namespace semistatic;

namespace {

// closed forms on instance A with log utility, from the first-order system:
// g = (1/(3p), 1/(3(1-3p)), 1/(6p)) at x = 1 and everything scales in x
double instance_a_log_value(double x, double p) {
    return std::log(x) -
           (std::log(3 * p) + std::log(3 * (1 - 3 * p)) + std::log(6 * p)) / 3.0;
}
double instance_a_log_position(double x, double p) {
    return x * (1.0 - 1.0 / (3.0 * (1.0 - 3.0 * p))) / p;
}

MarketModel no_stock_market() {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0}, {"a", 0, 1, 0.5}, {"b", 0, 1, 0.5}};
    return assemble_market(tree, Matrix::Zero(3, 0), {}, Matrix::Zero(2, 0));
}

} // namespace

TEST_CASE("stock-only optimum on instance A with log utility") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    PrimalSolution s = solve_u(m, u, 1.0, Vector::Zero(1));
    REQUIRE(s.status == PrimalStatus::Interior);
    CHECK(s.value == doctest::Approx(std::log(9.0 / 8.0) / 3.0).epsilon(1e-10));
    CHECK(s.strategy.holdings(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(s.g[0] == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(s.g[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.g[2] == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(s.marginal_value == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("log-optimal wealth in a complete market is x dP/dQ") {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0}, {"u", 0, 1, 0.6}, {"d", 0, 1, 0.4}};
    Matrix stock(3, 1);
    stock << 1.0, 2.0, 0.5;
    MarketModel m = assemble_market(tree, stock, {}, Matrix::Zero(2, 0));
    // unique martingale measure: q_u 1 + q_d (-1/2) = 0, q_u + q_d = 1
    const double qu = 1.0 / 3.0, qd = 2.0 / 3.0;
    UtilityFunction u = UtilityFunction::log_utility();
    for (double x : {1.0, 2.5}) {
        PrimalSolution s = solve_u(m, u, x, Vector::Zero(0));
        REQUIRE(s.status == PrimalStatus::Interior);
        CHECK(s.g[0] == doctest::Approx(x * 0.6 / qu).epsilon(1e-8));
        CHECK(s.g[1] == doctest::Approx(x * 0.4 / qd).epsilon(1e-8));
    }
}

TEST_CASE("zero endowment pins the payoff at zero") {
    MarketModel m = builtin_market("instance-a");
    {
        PrimalSolution s = solve_u(m, UtilityFunction::power(0.5), 0.0, Vector::Zero(1));
        CHECK(s.status == PrimalStatus::Boundary);
        CHECK(s.value == doctest::Approx(0.0).scale(1).epsilon(1e-12));
        CHECK(s.g.cwiseAbs().maxCoeff() <= 1e-9);
    }
    {
        PrimalSolution s = solve_u(m, UtilityFunction::log_utility(), 0.0, Vector::Zero(1));
        CHECK(s.status == PrimalStatus::Boundary);
        CHECK(s.value == -kInf);
    }
}

TEST_CASE("endowments outside the cone are infeasible") {
    MarketModel m = builtin_market("instance-a");
    PrimalSolution s =
        solve_u(m, UtilityFunction::log_utility(), 1.0, Vector::Constant(1, -3.5));
    CHECK(s.status == PrimalStatus::Infeasible);
    CHECK(s.value == -kInf);
}

TEST_CASE("semi-static optimum on instance A matches the closed form") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    for (double x : {1.0, 2.0}) {
        for (double p : {1.0 / 12.0, 1.0 / 6.0, 2.0 / 9.0, 0.3}) {
            PrimalSolution s = solve_u_tilde(m, u, x, Vector::Constant(1, p));
            REQUIRE(s.status == PrimalStatus::Interior);
            CHECK(s.value == doctest::Approx(instance_a_log_value(x, p)).epsilon(1e-9));
            CHECK(s.static_position[0] ==
                  doctest::Approx(instance_a_log_position(x, p)).scale(1).epsilon(1e-7));
            CHECK(s.marginal_value == doctest::Approx(1.0 / x).epsilon(1e-8));
            CHECK(s.unique_position);
            CHECK(s.g.minCoeff() >= -1e-12);
            // solution consistency: g reproduces the combined payoff
            TerminalWealth g2 = combined_payoff(m, x, s.strategy, s.static_position,
                                                Vector::Constant(1, p));
            CHECK((g2 - s.g).cwiseAbs().maxCoeff() <= 1e-9);
            const Vector& P = m.probabilities();
            double val = 0.0;
            for (int w = 0; w < 3; ++w) val += P[w] * u.value(s.g[w]);
            CHECK(val == doctest::Approx(s.value).epsilon(1e-12));
        }
    }
}

TEST_CASE("at the marginal price the static position vanishes") {
    MarketModel m = builtin_market("instance-a");
    PrimalSolution s = solve_u_tilde(m, UtilityFunction::log_utility(), 1.0,
                                     Vector::Constant(1, 2.0 / 9.0));
    CHECK(std::abs(s.static_position[0]) <= 1e-7);
    CHECK(s.value == doctest::Approx(std::log(9.0 / 8.0) / 3.0).epsilon(1e-9));
}

TEST_CASE("counter-example market: exact piecewise values") {
    MarketModel m = builtin_market("s10");
    UtilityFunction u = UtilityFunction::builtin_s10();
    {
        PrimalSolution s = solve_u_tilde(m, u, 2.0, Vector::Constant(1, 0.1));
        CHECK(s.value == doctest::Approx((4.0 / 3.0) / 1.1).epsilon(1e-10));
        CHECK(s.static_position[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-9));
    }
    {
        // q = (1-p)^{-1} and value 4/3 - (2/3) p/(1-p), here with p = -0.1
        PrimalSolution s = solve_u_tilde(m, u, 2.0, Vector::Constant(1, -0.1));
        CHECK(s.value ==
              doctest::Approx(4.0 / 3.0 + (2.0 / 3.0) * (0.1 / 1.1)).epsilon(1e-10));
        CHECK(s.static_position[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-9));
    }
    {
        PrimalSolution s = solve_u_tilde(m, u, 2.0, Vector::Constant(1, 0.0));
        CHECK(s.value == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
        CHECK(s.static_position[0] == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("arbitrage prices are rejected") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    CHECK_THROWS_AS(solve_u_tilde(m, u, 1.0, Vector::Constant(1, 0.5)), ArbitrageError);
    CHECK_THROWS_AS(solve_u_tilde(m, u, 1.0, Vector::Constant(1, 1.0 / 3.0)),
                    ArbitrageError);
    CHECK_THROWS_AS(solve_u_tilde(m, u, 1.0, Vector::Constant(1, 0.0)), ArbitrageError);
    CHECK_THROWS(solve_u_tilde(m, u, 0.0, Vector::Constant(1, 0.1)));
}

TEST_CASE("no derivatives: the semi-static value is the stock-only value") {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0},
                  {"u", 0, 1, 1.0 / 3.0},
                  {"m", 0, 1, 1.0 / 3.0},
                  {"d", 0, 1, 1.0 / 3.0}};
    Matrix stock(4, 1);
    stock << 1.0, 2.0, 1.0, 0.5;
    MarketModel m = assemble_market(tree, stock, {}, Matrix::Zero(3, 0));
    UtilityFunction u = UtilityFunction::log_utility();
    PrimalSolution tilde = solve_u_tilde(m, u, 1.5, Vector::Zero(0));
    PrimalSolution w = stock_only_value(m, u, 1.5);
    CHECK(tilde.value == doctest::Approx(w.value).epsilon(1e-10));
}

TEST_CASE("stock-only value properties") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    // log separation: w(2) = ln 2 + w(1)
    const double w1 = stock_only_value(m, u, 1.0).value;
    const double w2 = stock_only_value(m, u, 2.0).value;
    CHECK(w2 == doctest::Approx(std::log(2.0) + w1).epsilon(1e-9));
    // without stocks, w(x) = U(x)
    MarketModel ns = no_stock_market();
    CHECK(stock_only_value(ns, u, 1.7).value == doctest::Approx(std::log(1.7)).epsilon(1e-12));
}

TEST_CASE("value is concave and strictly increasing in wealth") {
    MarketModel m = builtin_market("instance-a");
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> ux(0.2, 4.0);
    std::uniform_real_distribution<double> ul(0.1, 0.9);
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5)}) {
        const Vector p = Vector::Constant(1, 1.0 / 6.0);
        double prev = -kInf;
        for (double x = 0.5; x <= 3.0; x += 0.25) {
            const double val = solve_u_tilde(m, u, x, p).value;
            CHECK(val > prev);
            prev = val;
        }
        for (int i = 0; i < 10; ++i) {
            const double x0 = ux(rng), x1 = ux(rng), lam = ul(rng);
            const double mid = solve_u_tilde(m, u, lam * x0 + (1 - lam) * x1, p).value;
            const double bound = lam * solve_u_tilde(m, u, x0, p).value +
                                 (1 - lam) * solve_u_tilde(m, u, x1, p).value;
            CHECK(mid >= bound - 1e-9);
        }
    }
}

TEST_CASE("semi-static value dominates the stock-only value") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const double w = stock_only_value(m, u, 1.0).value;
    for (double p : {0.05, 1.0 / 6.0, 2.0 / 9.0, 0.3}) {
        const double val = solve_u_tilde(m, u, 1.0, Vector::Constant(1, p)).value;
        CHECK(val >= w - 1e-10);
        if (std::abs(p - 2.0 / 9.0) > 1e-3) CHECK(val > w + 1e-6);
    }
}

TEST_CASE("endowed values dominate the zero endowment when U(0) is finite") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::power(0.5);
    const double floor = solve_u(m, u, 0.0, Vector::Zero(1)).value;  // = U(0)
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> uq(-2.0, 2.0);
    MarketGeometry geo(m);
    for (int i = 0; i < 25; ++i) {
        Vector q = Vector::Constant(1, uq(rng));
        double xmin = -kInf;
        for (int v = 0; v < geo.vertex_prices().rows(); ++v)
            xmin = std::max(xmin, -geo.vertex_prices().row(v).dot(q));
        for (double pad : {0.0, 0.3}) {
            PrimalSolution s = solve_u(m, u, xmin + pad, q);
            CHECK(s.value >= floor - 1e-9);
        }
    }
}

TEST_CASE("boundary endowments with finite U(0) solve on the face") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::power(0.5);
    // (x, q) = (1, -3) sits on the cone boundary: the binding vertex measure
    // charges the up and down states, so both payoffs are pinned at zero and
    // the middle state is forced to one by the other vertex
    PrimalSolution s = solve_u(m, u, 1.0, Vector::Constant(1, -3.0));
    REQUIRE(s.status == PrimalStatus::Boundary);
    CHECK(s.value == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(s.g[0] == doctest::Approx(0.0).scale(1).epsilon(1e-9));
    CHECK(s.g[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.g[2] == doctest::Approx(0.0).scale(1).epsilon(1e-9));
    TerminalWealth direct = combined_payoff(m, 1.0, s.strategy, Vector::Constant(1, -3.0),
                                            Vector::Zero(1));
    CHECK((direct - s.g).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("two-period incomplete market solves through the tree") {
    // trinomial first period, binomial continuations; one derivative
    ScenarioTree tree;
    tree.horizon = 2;
    tree.nodes = {{"r", -1, 0, 1.0},   {"u", 0, 1, 0.3},   {"m", 0, 1, 0.4},
                  {"d", 0, 1, 0.3},    {"uu", 1, 2, 0.5},  {"ud", 1, 2, 0.5},
                  {"mu", 2, 2, 0.6},   {"md", 2, 2, 0.4},  {"du", 3, 2, 0.5},
                  {"dd", 3, 2, 0.5}};
    Matrix stock(10, 1);
    stock << 1.0, 1.4, 1.0, 0.6, 1.8, 1.1, 1.3, 0.8, 0.8, 0.45;
    Matrix payoff(6, 1);
    payoff << 0.8, 0.1, 0.3, 0.0, 0.0, 0.0;
    MarketModel m = assemble_market(tree, stock, {"claim"}, payoff);
    MarketGeometry geo(m);
    PriceSet ps = geo.price_set();
    REQUIRE(ps.upper()[0] - ps.lower()[0] > 0.01);
    const double pv = 0.5 * (ps.lower()[0] + ps.upper()[0]);
    UtilityFunction u = UtilityFunction::log_utility();
    PrimalSolution s = solve_u_tilde(m, u, 1.0, Vector::Constant(1, pv));
    REQUIRE(s.status == PrimalStatus::Interior);
    // strategies live on four nodes; the payoff identity closes the loop
    TerminalWealth direct = combined_payoff(m, 1.0, s.strategy, s.static_position,
                                            Vector::Constant(1, pv));
    CHECK((direct - s.g).cwiseAbs().maxCoeff() <= 1e-9);
    // independent dual route agrees
    DualSolution ds = solve_v_tilde(m, u, s.marginal_value, Vector::Constant(1, pv));
    REQUIRE(ds.status == DualStatus::Optimal);
    CHECK(std::abs(ds.value + 1.0 * s.marginal_value - s.value) <=
          1e-8 * (1.0 + std::abs(s.value)));
    for (int w = 0; w < m.num_terminals(); ++w)
        CHECK(ds.density[w] == doctest::Approx(u.marginal(s.g[w])).epsilon(1e-6));
}

TEST_CASE("two stocks hedge a basket") {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0},
                  {"a", 0, 1, 0.25},
                  {"b", 0, 1, 0.25},
                  {"c", 0, 1, 0.25},
                  {"d", 0, 1, 0.25}};
    Matrix stock(5, 2);
    stock << 1.0, 1.0,
             1.5, 1.2,
             1.1, 0.7,
             0.8, 1.3,
             0.6, 0.9;
    Matrix payoff(4, 1);
    payoff << 1.0, 0.4, 0.2, 0.0;
    MarketModel m = assemble_market(tree, stock, {"basket"}, payoff);
    MarketGeometry geo(m);
    PriceSet ps = geo.price_set();
    const double pv = 0.5 * (ps.lower()[0] + ps.upper()[0]);
    UtilityFunction u = UtilityFunction::power(0.5);
    PrimalSolution s = solve_u_tilde(m, u, 1.0, Vector::Constant(1, pv));
    REQUIRE(s.status == PrimalStatus::Interior);
    CHECK(s.strategy.holdings.rows() == 1);
    CHECK(s.strategy.holdings.cols() == 2);
    DualSolution ds = solve_v_tilde(m, u, s.marginal_value, Vector::Constant(1, pv));
    REQUIRE(ds.status == DualStatus::Optimal);
    CHECK(std::abs(ds.value + s.marginal_value - s.value) <=
          1e-8 * (1.0 + std::abs(s.value)));
}

TEST_CASE("radial slices are differentiable inside the cone") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const double x = 1.0, q = 0.5;
    auto slice = [&](double t) {
        return solve_u(m, u, t * x, Vector::Constant(1, t * q)).value;
    };
    const double h = 1e-5;
    const double fwd = (slice(1.0 + h) - slice(1.0)) / h;
    const double bwd = (slice(1.0) - slice(1.0 - h)) / h;
    CHECK(std::abs(fwd - bwd) <= 1e-4);
}

TEST_CASE("duplicated claim: minimum-norm position and uniqueness flag") {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0},
                  {"u", 0, 1, 1.0 / 3.0},
                  {"m", 0, 1, 1.0 / 3.0},
                  {"d", 0, 1, 1.0 / 3.0}};
    Matrix stock(4, 1);
    stock << 1.0, 2.0, 1.0, 0.5;
    Matrix payoff(3, 2);
    payoff << 1.0, 2.0, 0.0, 0.0, 0.0, 0.0;
    MarketModel m = assemble_market(tree, stock, {"f", "2f"}, payoff);
    UtilityFunction u = UtilityFunction::log_utility();
    Vector p(2);
    p << 1.0 / 6.0, 1.0 / 3.0;
    PrimalSolution s = solve_u_tilde(m, u, 1.0, p);
    REQUIRE(s.status == PrimalStatus::Interior);
    CHECK(!s.unique_position);
    // same value as the single-claim market at p = 1/6, position q (1, 2)/5 * q_single
    MarketModel single = builtin_market("instance-a");
    PrimalSolution s1 = solve_u_tilde(single, u, 1.0, Vector::Constant(1, 1.0 / 6.0));
    CHECK(s.value == doctest::Approx(s1.value).epsilon(1e-9));
    const double q_single = s1.static_position[0];
    CHECK(s.static_position[0] == doctest::Approx(q_single * 0.2).epsilon(1e-6));
    CHECK(s.static_position[1] == doctest::Approx(q_single * 0.4).epsilon(1e-6));
}

TEST_CASE("grid-search oracle agrees on instance A") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    for (double p : {1.0 / 12.0, 1.0 / 6.0, 0.25}) {
        const double solver = solve_u_tilde(m, u, 1.0, Vector::Constant(1, p)).value;
        const double grid = oracles::grid_search_u_tilde(m, u, 1.0, p);
        CHECK(std::abs(solver - grid) <= 1e-3);
    }
}

TEST_CASE("solver output is deterministic") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::power(-1.0);
    PrimalSolution a = solve_u_tilde(m, u, 1.0, Vector::Constant(1, 1.0 / 6.0));
    PrimalSolution b = solve_u_tilde(m, u, 1.0, Vector::Constant(1, 1.0 / 6.0));
    CHECK(a.value == b.value);
    CHECK((a.g.array() == b.g.array()).all());
    CHECK((a.static_position.array() == b.static_position.array()).all());
}
