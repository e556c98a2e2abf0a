#ifndef SEMISTATIC_DUAL_HPP
#define SEMISTATIC_DUAL_HPP

#include "semistatic/market.hpp"
#include "semistatic/types.hpp"
#include "semistatic/utility.hpp"

namespace semistatic {

enum class DualStatus { Optimal, Infeasible };

// Minimizer of E[V(h)] over non-negative densities h whose measure h.P is a
// martingale measure with mass y and derivative expectation r.
struct DualSolution {
    DualStatus status = DualStatus::Infeasible;
    double value = kInf;
    Vector density;       // h per terminal node
    Vector measure;       // normalized h.P when the total mass is positive
    double dv_dy = 0.0;   // multiplier of the mass pin: dv/dy
    Vector dv_dr;         // multipliers of the derivative pins: grad_r v
    double dy_v_tilde = 0.0;  // d/dy of v(y, y p); filled by solve_v_tilde
    int iterations = 0;
    std::string note;
};

struct DualOptions {
    double grad_tol = 1e-10;
    int max_newton = 200;
    double feas_tol = 1e-9;
    double boundary_tol = 1e-11;
};

// v(y, r) = min E[V(h)] s.t. E[h] = y, E[h f] = r, h.P martingale, h >= 0.
DualSolution solve_v(const MarketModel& m, const UtilityFunction& u, double y,
                     const Vector& r, const DualOptions& opts = {});

// v-tilde(y, p) = v(y, y p); also reports d/dy v-tilde via the chain rule
// on the multipliers.
DualSolution solve_v_tilde(const MarketModel& m, const UtilityFunction& u, double y,
                           const Vector& p, const DualOptions& opts = {});

// w-tilde(y) = min over r of v(y, r); returns the solution and the attaining
// price r*/y.
struct WTilde {
    DualSolution solution;
    Vector argmin_price;
};
WTilde dual_w_tilde(const MarketModel& m, const UtilityFunction& u, double y,
                    const DualOptions& opts = {});

} // namespace semistatic

#endif
