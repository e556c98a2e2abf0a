#include <doctest.h>

#include <cmath>
#include <random>

#include "semistatic/dual.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"

using namespace semistatic;

namespace {

MarketModel single_state_market() {
    ScenarioTree tree;
    tree.horizon = 1;
    tree.nodes = {{"r", -1, 0, 1.0}, {"a", 0, 1, 1.0}};
    return assemble_market(tree, Matrix::Zero(2, 0), {}, Matrix::Zero(1, 0));
}

// golden-section minimization of a scalar convex function
template <typename F>
double golden_min(F f, double lo, double hi, int iters = 200) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

namespace {

// the moment-system invariants every optimal dual solution must satisfy
void check_dual_invariants(const semistatic::MarketModel& m,
                           const semistatic::UtilityFunction& u,
                           const semistatic::DualSolution& s, double y,
                           const semistatic::Vector& r) {
    using namespace semistatic;
    REQUIRE(s.status == DualStatus::Optimal);
    CHECK(s.density.minCoeff() >= 0.0);
    const Vector& P = m.probabilities();
    CHECK(std::abs(P.dot(s.density) - y) <= 1e-9);
    for (int j = 0; j < r.size(); ++j)
        CHECK(std::abs(P.dot(s.density.cwiseProduct(m.payoffs.col(j))) - r[j]) <= 1e-9);
    const Matrix mart = m.martingale_rows();
    if (mart.rows() > 0)
        CHECK((mart * P.cwiseProduct(s.density).matrix()).cwiseAbs().maxCoeff() <= 1e-9);
    double val = 0.0;
    for (int w = 0; w < m.num_terminals(); ++w)
        val += P[w] * (s.density[w] > 0 ? u.conjugate(s.density[w]) : u.conjugate_at_zero());
    CHECK(std::abs(val - s.value) <= 1e-9 * (1.0 + std::abs(s.value)));
}

} // namespace

TEST_CASE("dual optimum on instance A at the marginal-price pin") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    DualSolution s = solve_v(m, u, 1.0, Vector::Constant(1, 2.0 / 9.0));
    REQUIRE(s.status == DualStatus::Optimal);
    check_dual_invariants(m, u, s, 1.0, Vector::Constant(1, 2.0 / 9.0));
    CHECK(s.density[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
    CHECK(s.density[1] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(s.density[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
    CHECK(s.value == doctest::Approx(-std::log(8.0 / 9.0) / 3.0 - 1.0).epsilon(1e-10));
    CHECK(s.dv_dy == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(s.dv_dr[0] == doctest::Approx(0.0).scale(1).epsilon(1e-7));
    // the measure h.P is a martingale measure of mass one here
    CHECK(s.measure.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("single-state market dual") {
    MarketModel m = single_state_market();
    UtilityFunction u = UtilityFunction::log_utility();
    DualSolution s = solve_v(m, u, 1.0, Vector::Zero(0));
    REQUIRE(s.status == DualStatus::Optimal);
    CHECK(s.density[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(s.value == doctest::Approx(-1.0).epsilon(1e-10));  // V(1) = -ln 1 - 1
}

TEST_CASE("pins outside the price closure are infeasible") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    DualSolution s = solve_v(m, u, 1.0, Vector::Constant(1, 0.5));
    CHECK(s.status == DualStatus::Infeasible);
    CHECK(s.value == kInf);
}

TEST_CASE("v-tilde is v at the scaled pin") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const Vector p = Vector::Constant(1, 1.0 / 6.0);
    DualSolution a = solve_v_tilde(m, u, 2.0, p);
    DualSolution b = solve_v(m, u, 2.0, Vector(2.0 * p));
    REQUIRE(a.status == DualStatus::Optimal);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-10));
}

TEST_CASE("mass scalings of the conjugate family") {
    MarketModel m = builtin_market("instance-a");
    const Vector p = Vector::Constant(1, 1.0 / 6.0);
    {
        UtilityFunction u = UtilityFunction::log_utility();
        const double v1 = solve_v_tilde(m, u, 1.0, p).value;
        const double v2 = solve_v_tilde(m, u, 2.0, p).value;
        CHECK(v2 == doctest::Approx(v1 - std::log(2.0)).epsilon(1e-9));
    }
    {
        UtilityFunction u = UtilityFunction::power(0.5);  // beta = -1
        const double v1 = solve_v_tilde(m, u, 1.0, p).value;
        const double v2 = solve_v_tilde(m, u, 2.0, p).value;
        CHECK(v2 == doctest::Approx(v1 / 2.0).epsilon(1e-9));
    }
}

TEST_CASE("unpinned dual minimum sits at the marginal price") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    WTilde wt = dual_w_tilde(m, u, 1.0);
    REQUIRE(wt.solution.status == DualStatus::Optimal);
    CHECK(wt.argmin_price[0] == doctest::Approx(2.0 / 9.0).epsilon(1e-7));
    const double pinned = solve_v(m, u, 1.0, Vector::Constant(1, 2.0 / 9.0)).value;
    CHECK(wt.solution.value == doctest::Approx(pinned).epsilon(1e-10));

    // dominated by every pinned value
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> up(0.01, 1.0 / 3.0 - 0.01);
    for (int i = 0; i < 20; ++i) {
        const double p = up(rng);
        CHECK(wt.solution.value <=
              solve_v_tilde(m, u, 1.0, Vector::Constant(1, p)).value + 1e-10);
    }
}

TEST_CASE("unpinned dual agrees with a scalar search") {
    MarketModel m = builtin_market("s10");
    UtilityFunction u = UtilityFunction::log_utility();
    WTilde wt = dual_w_tilde(m, u, 1.0);
    REQUIRE(wt.solution.status == DualStatus::Optimal);
    auto pinned_value = [&](double r) {
        return solve_v(m, u, 1.0, Vector::Constant(1, r)).value;
    };
    const double r_star = golden_min(pinned_value, -0.95, 0.95);
    CHECK(wt.argmin_price[0] == doctest::Approx(r_star).epsilon(1e-5));
    // stationarity of the one-state-each market: h = 1, r* = E[f] = 1/3
    CHECK(wt.argmin_price[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
    CHECK(wt.solution.value == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("weak duality against the primal") {
    MarketModel m = builtin_market("instance-a");
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> ux(0.3, 3.0);
    std::uniform_real_distribution<double> uy(0.2, 4.0);
    const Vector p = Vector::Constant(1, 0.2);
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5)}) {
        for (int i = 0; i < 100; ++i) {
            const double x = ux(rng), y = uy(rng);
            const double primal = solve_u_tilde(m, u, x, p).value;
            DualSolution d = solve_v_tilde(m, u, y, p);
            REQUIRE(d.status == DualStatus::Optimal);
            CHECK(primal <= d.value + x * y + 1e-9);
        }
    }
}

TEST_CASE("strong duality at the conjugate point") {
    MarketModel m = builtin_market("instance-a");
    for (const auto& u : {UtilityFunction::log_utility(), UtilityFunction::power(0.5),
                          UtilityFunction::power(-1.0)}) {
        for (double p : {1.0 / 12.0, 1.0 / 6.0, 1.0 / 4.0}) {
            for (double x : {0.5, 1.0, 3.0}) {
                PrimalSolution ps = solve_u_tilde(m, u, x, Vector::Constant(1, p));
                REQUIRE(ps.status == PrimalStatus::Interior);
                const double ytilde = ps.marginal_value;
                DualSolution ds = solve_v_tilde(m, u, ytilde, Vector::Constant(1, p));
                REQUIRE(ds.status == DualStatus::Optimal);
                const double gap = ds.value + x * ytilde - ps.value;
                CHECK(std::abs(gap) <= 1e-8 * (1.0 + std::abs(ps.value)));
            }
        }
    }
}

TEST_CASE("dual values are convex along pinned segments") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    std::mt19937 rng(67);
    std::uniform_real_distribution<double> uy(0.5, 2.0);
    std::uniform_real_distribution<double> ur(0.02, 0.31);
    for (int i = 0; i < 25; ++i) {
        const double y0 = uy(rng), y1 = uy(rng);
        const double r0 = ur(rng) * y0, r1 = ur(rng) * y1;
        const double v0 = solve_v(m, u, y0, Vector::Constant(1, r0)).value;
        const double v1 = solve_v(m, u, y1, Vector::Constant(1, r1)).value;
        const double vm =
            solve_v(m, u, 0.5 * (y0 + y1), Vector::Constant(1, 0.5 * (r0 + r1))).value;
        CHECK(vm <= 0.5 * (v0 + v1) + 1e-9);
    }
}

TEST_CASE("inward difference quotients blow down near the boundary") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    double prev = 0.0;
    bool have_prev = false;
    double last = 0.0;
    for (int k = 1; k <= 6; ++k) {
        const double r = 1.0 / 3.0 - std::pow(10.0, -k);
        const double gap = 1.0 / 3.0 - r;
        const double step = 0.1 * gap;
        const double v0 = solve_v(m, u, 1.0, Vector::Constant(1, r)).value;
        const double v1 = solve_v(m, u, 1.0, Vector::Constant(1, r - step)).value;
        const double quotient = (v1 - v0) / step;  // toward the interior
        if (have_prev) CHECK(quotient < prev);
        prev = quotient;
        have_prev = true;
        last = quotient;
    }
    CHECK(last < -1e3);
}

TEST_CASE("primal and dual optimizers pair off at fixed endowments") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::log_utility();
    const double x = 1.0;
    const Vector q = Vector::Constant(1, 0.8);
    PrimalSolution ps = solve_u(m, u, x, q);
    REQUIRE(ps.status == PrimalStatus::Interior);
    Vector h_primal(3);
    for (int w = 0; w < 3; ++w) h_primal[w] = u.marginal(ps.g[w]);
    const Vector& P = m.probabilities();
    const double y = P.dot(h_primal);
    const double r = P.dot(h_primal.cwiseProduct(m.payoffs.col(0)));
    DualSolution ds = solve_v(m, u, y, Vector::Constant(1, r));
    REQUIRE(ds.status == DualStatus::Optimal);
    CHECK((ds.density - h_primal).cwiseAbs().maxCoeff() <= 1e-7);
    const double pairing = P.dot(ds.density.cwiseProduct(ps.g));
    CHECK(pairing == doctest::Approx(x * y + q[0] * r).epsilon(1e-8));
}

TEST_CASE("piecewise dual through the epigraph program") {
    MarketModel m = builtin_market("s10");
    UtilityFunction u = UtilityFunction::builtin_s10();
    // primal at x = 2, p = 0.1 has value (4/3)/1.1 and slope 40/33 in x
    PrimalSolution ps = solve_u_tilde(m, u, 2.0, Vector::Constant(1, 0.1));
    const double ytilde = ps.marginal_value;
    CHECK(ytilde == doctest::Approx(40.0 / 33.0).epsilon(1e-9));
    DualSolution ds = solve_v_tilde(m, u, ytilde, Vector::Constant(1, 0.1));
    REQUIRE(ds.status == DualStatus::Optimal);
    // zero duality gap for the paired linear programs
    CHECK(ds.value + 2.0 * ytilde - ps.value == doctest::Approx(0.0).scale(1).epsilon(1e-8));
    // v is polyhedral here, so the subdifferential at the conjugate point is
    // a face; both the primal optimizer and the reported multiplier must be
    // Fenchel maximizers of u(a,b) - a y - b r
    const double y = ytilde, r = ytilde * 0.1;
    const double xhat = 2.0 - ps.static_position[0] * 0.1;
    const double qhat = ps.static_position[0];
    CHECK(ps.value - xhat * y - qhat * r == doctest::Approx(ds.value).epsilon(1e-8));
    PrimalSolution at_mult = solve_u(m, u, -ds.dv_dy, Vector(-ds.dv_dr));
    CHECK(at_mult.value + ds.dv_dy * y + ds.dv_dr[0] * r ==
          doctest::Approx(ds.value).epsilon(1e-8));
}

TEST_CASE("dual solves are deterministic") {
    MarketModel m = builtin_market("instance-a");
    UtilityFunction u = UtilityFunction::power(-1.0);
    DualSolution a = solve_v(m, u, 1.3, Vector::Constant(1, 0.2));
    DualSolution b = solve_v(m, u, 1.3, Vector::Constant(1, 0.2));
    CHECK(a.value == b.value);
    CHECK((a.density.array() == b.density.array()).all());
    check_dual_invariants(m, u, a, 1.3, Vector::Constant(1, 0.2));
}
