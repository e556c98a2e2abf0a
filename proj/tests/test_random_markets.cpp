#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "semistatic/dual.hpp"
#include "semistatic/errors.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"
#include "semistatic/verify.hpp"

using namespace semistatic;

namespace {

// Random one- or two-period trees with mixed branching, up to two stocks and
// up to two derivatives. Markets that fail the no-arbitrage check are
// discarded and resampled.
struct RandomMarkets {
    std::mt19937 rng;
    explicit RandomMarkets(unsigned seed) : rng(seed) {}

    MarketModel next() {
        std::uniform_int_distribution<int> periods(1, 2);
        std::uniform_int_distribution<int> branches(2, 3);
        std::uniform_int_distribution<int> stocks(1, 2);
        std::uniform_int_distribution<int> claims(0, 2);
        std::uniform_real_distribution<double> weight(0.2, 1.0);
        std::uniform_real_distribution<double> ret(-0.45, 0.6);
        std::uniform_real_distribution<double> pay(0.0, 1.5);

        for (int attempt = 0; attempt < 200; ++attempt) {
            const int T = periods(rng);
            const int d = stocks(rng);
            ScenarioTree tree;
            tree.horizon = T;
            std::vector<std::vector<double>> prices;
            tree.nodes.push_back({"n0", -1, 0, 1.0});
            prices.push_back(std::vector<double>(d, 1.0));
            std::vector<int> frontier = {0};
            int counter = 1;
            for (int t = 1; t <= T; ++t) {
                std::vector<int> next_frontier;
                for (int parent : frontier) {
                    const int b = branches(rng);
                    std::vector<double> w(b);
                    double total = 0.0;
                    for (double& x : w) total += (x = weight(rng));
                    for (int c = 0; c < b; ++c) {
                        ScenarioTree::Node node;
                        node.id = "n" + std::to_string(counter);
                        node.parent = parent;
                        node.time = t;
                        node.cond_prob = w[c] / total;
                        tree.nodes.push_back(node);
                        std::vector<double> sp(d);
                        for (int i = 0; i < d; ++i)
                            sp[i] = prices[parent][i] * (1.0 + ret(rng));
                        prices.push_back(sp);
                        next_frontier.push_back(counter);
                        ++counter;
                    }
                }
                frontier = next_frontier;
            }
            Matrix stock(static_cast<int>(prices.size()), d);
            for (size_t i = 0; i < prices.size(); ++i)
                for (int k = 0; k < d; ++k) stock(static_cast<int>(i), k) = prices[i][k];

            const int n = claims(rng);
            Matrix payoff(static_cast<int>(frontier.size()), n);
            std::vector<std::string> names;
            for (int j = 0; j < n; ++j) {
                names.push_back("c" + std::to_string(j));
                for (int w = 0; w < payoff.rows(); ++w) payoff(w, j) = pay(rng);
            }
            try {
                return assemble_market(tree, stock, names, payoff);
            } catch (const ArbitrageError&) {
                continue;  // all branches drifted one way; resample
            }
        }
        throw std::runtime_error("could not sample an arbitrage-free market");
    }
};

// an interior price: a strictly mixed convex combination of the vertex prices
Vector interior_price(const MarketGeometry& geo, std::mt19937& rng) {
    const Matrix& vp = geo.vertex_prices();
    std::uniform_real_distribution<double> mix(0.3, 1.0);
    Vector lambda(vp.rows());
    for (int i = 0; i < lambda.size(); ++i) lambda[i] = mix(rng);
    lambda /= lambda.sum();
    return vp.transpose() * lambda;
}

} // namespace

TEST_CASE("solvers scale past the vertex-enumeration envelope") {
    // three periods of ternary branching: 27 terminal states, too many for
    // the martingale-vertex cache, but the solvers only need the moment
    // system. A strictly positive martingale witness supplies a valid price.
    RandomMarkets gen(31337);
    ScenarioTree tree;
    tree.horizon = 3;
    tree.nodes.push_back({"n0", -1, 0, 1.0});
    std::vector<double> prices = {1.0};
    int counter = 1;
    std::vector<int> frontier = {0};
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    const double fan[3] = {0.7, 1.0, 1.4};  // children straddle the parent
    for (int t = 1; t <= 3; ++t) {
        std::vector<int> next_frontier;
        for (int parent : frontier) {
            for (int c = 0; c < 3; ++c) {
                tree.nodes.push_back(
                    {"n" + std::to_string(counter), parent, t, 1.0 / 3.0});
                prices.push_back(prices[parent] * (fan[c] + jitter(rng)));
                next_frontier.push_back(counter);
                ++counter;
            }
        }
        frontier = next_frontier;
    }
    Matrix stock(static_cast<int>(prices.size()), 1);
    for (size_t i = 0; i < prices.size(); ++i) stock(static_cast<int>(i), 0) = prices[i];
    Matrix payoff(27, 1);
    std::uniform_real_distribution<double> pay(0.0, 1.0);
    for (int w = 0; w < 27; ++w) payoff(w, 0) = pay(rng);
    MarketModel m = assemble_market(tree, stock, {"claim"}, payoff);
    REQUIRE(m.num_terminals() == 27);

    StrictFeasibility sf =
        strict_feasibility(m.martingale_system_lhs(), m.martingale_system_rhs());
    REQUIRE(sf.value > 1e-6);
    const Vector p = Vector::Constant(1, sf.witness.dot(payoff.col(0)));

    UtilityFunction u = UtilityFunction::log_utility();
    PrimalSolution ps = solve_u_tilde(m, u, 1.0, p);
    REQUIRE(ps.status == PrimalStatus::Interior);
    DualSolution ds = solve_v_tilde(m, u, ps.marginal_value, p);
    REQUIRE(ds.status == DualStatus::Optimal);
    CHECK(std::abs(ds.value + ps.marginal_value - ps.value) <=
          1e-7 * (1.0 + std::abs(ps.value)));
    for (int w = 0; w < 27; ++w)
        CHECK(ds.density[w] == doctest::Approx(u.marginal(ps.g[w])).epsilon(1e-6));
}

TEST_CASE("random markets satisfy the primal/dual contracts") {
    RandomMarkets gen(424242);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ux(0.4, 2.5);

    int solved = 0;
    for (int trial = 0; trial < 25; ++trial) {
        MarketModel m = gen.next();
        MarketGeometry geo(m);
        const int n = m.num_derivatives();
        Vector p = n > 0 ? interior_price(geo, rng) : Vector::Zero(0);
        if (n > 0 && !geo.price_set().contains(p)) continue;  // degenerate basket
        const double x = ux(rng);

        for (const auto& u :
             {UtilityFunction::log_utility(), UtilityFunction::power(0.5)}) {
            CAPTURE(trial);
            CAPTURE(m.num_terminals());
            PrimalSolution ps = solve_u_tilde(m, u, x, p);
            REQUIRE(ps.status == PrimalStatus::Interior);
            CHECK(ps.g.minCoeff() > 0.0);

            // payoff identity
            TerminalWealth direct =
                combined_payoff(m, x, ps.strategy, ps.static_position, p);
            CHECK((direct - ps.g).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + x));

            // the marginal density closes the moment system
            const Vector& P = m.probabilities();
            Vector h(m.num_terminals());
            for (int w = 0; w < h.size(); ++w) h[w] = u.marginal(ps.g[w]);
            CHECK(std::abs(P.dot(h) - ps.marginal_value) <= 1e-7 * ps.marginal_value);
            const Matrix mart = m.martingale_rows();
            if (mart.rows() > 0)
                CHECK((mart * P.cwiseProduct(h).matrix()).cwiseAbs().maxCoeff() <=
                      1e-7 * ps.marginal_value);

            // independent dual route: matching density and a closed gap
            DualSolution ds = solve_v_tilde(m, u, ps.marginal_value, p);
            REQUIRE(ds.status == DualStatus::Optimal);
            CHECK((ds.density - h).cwiseAbs().maxCoeff() <=
                  1e-6 * (1.0 + h.cwiseAbs().maxCoeff()));
            CHECK(std::abs(ds.value + x * ps.marginal_value - ps.value) <=
                  1e-7 * (1.0 + std::abs(ps.value)));
        }
        ++solved;
    }
    CHECK(solved >= 20);
}
