#ifndef SEMISTATIC_PRIMAL_HPP
#define SEMISTATIC_PRIMAL_HPP

#include "semistatic/market.hpp"
#include "semistatic/types.hpp"
#include "semistatic/utility.hpp"

namespace semistatic {

enum class PrimalStatus {
    Interior,    // optimizer has terminal payoff > 0 in every state
    Boundary,    // some terminal payoff sits at the domain edge
    Infeasible,  // endowment outside the feasible cone; value -inf
    Infinite,    // value +inf (only reachable past the arbitrage guard)
};

struct PrimalSolution {
    PrimalStatus status = PrimalStatus::Infeasible;
    double value = -kInf;
    TerminalWealth g;           // X_T + q.f per terminal node
    TradingStrategy strategy;
    Vector static_position;     // optimal q; zero-length for the fixed-q problem
    double marginal_value = 0;  // d/dx of the value (= y-tilde at interior optima)
    bool unique_position = true;  // false when a replicable basket direction exists
    int iterations = 0;
    bool used_fallback = false;  // projected-gradient fallback engaged
};

struct PrimalOptions {
    double grad_tol = 1e-10;  // relative to the initial gradient norm
    int max_newton = 200;
    int max_fallback = 500;
    double feas_tol = 1e-9;
    double boundary_tol = 1e-11;        // interior-start threshold
    double price_interior_tol = 1e-10;  // arbitrage-free price test
};

// max E[U(x + (H.S)_T + q.f)] over strategies. Endowments outside the
// feasible cone return status Infeasible with value -inf.
PrimalSolution solve_u(const MarketModel& m, const UtilityFunction& u, double x,
                       const Vector& q, const PrimalOptions& opts = {});

// max E[U(x - q.p + (H.S)_T + q.f)] jointly over (q, H), for x > 0 and an
// arbitrage-free price p (else ArbitrageError). When several q attain the
// optimum the minimum-norm one is reported with unique_position = false.
PrimalSolution solve_u_tilde(const MarketModel& m, const UtilityFunction& u, double x,
                             const Vector& p, const PrimalOptions& opts = {});

// w(x): optimal investment in the stocks alone.
PrimalSolution stock_only_value(const MarketModel& m, const UtilityFunction& u,
                                double x, const PrimalOptions& opts = {});

} // namespace semistatic

#endif
