#ifndef SEMISTATIC_LP_HPP
#define SEMISTATIC_LP_HPP

#include <optional>
#include <vector>

#include "semistatic/errors.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

// Dense linear program
//
//   min (or max)  objective . x
//   s.t.          eq_lhs x  = eq_rhs
//                 ub_lhs x <= ub_rhs
//                 x_i >= lower_bounds[i]   (nullopt: free variable)
//
// Upper bounds on variables are expressed as ub rows.
struct LinearProgram {
    Vector objective;
    bool maximize = false;

    Matrix eq_lhs;  // may have zero rows
    Vector eq_rhs;
    Matrix ub_lhs;  // may have zero rows
    Vector ub_rhs;

    std::vector<std::optional<double>> lower_bounds;  // size = #variables

    int num_vars() const { return static_cast<int>(objective.size()); }

    static LinearProgram make(int nvars);  // zero objective, no rows, x free
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

// Duals follow the sensitivity convention: eq_duals[i] = d(value)/d(eq_rhs[i])
// and ub_duals[j] = d(value)/d(ub_rhs[j]), in the problem's own sense
// (minimize or maximize). For a minimize problem ub_duals <= 0, for a
// maximize problem ub_duals >= 0.
struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector point;
    double value = 0.0;
    Vector eq_duals;
    Vector ub_duals;

    bool optimal() const { return status == LpStatus::Optimal; }
};

struct LpOptions {
    double feas_tol = 1e-9;    // feasibility / status tolerance
    double pivot_tol = 1e-11;  // entries below this are not pivot candidates
    int max_iterations = 0;    // 0: automatic cap from problem size
};

// Two-phase dense simplex with Bland's anti-cycling rule. Deterministic:
// identical inputs produce identical outputs. Throws SolverError if the
// iteration cap is hit (unreachable on valid input thanks to Bland's rule)
// and DimensionError on inconsistent inputs.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

// Decides whether  { x : eq_lhs x = eq_rhs, x > 0 }  is non-empty by
// maximizing t subject to x_i >= t for every variable. value > 0 iff a
// strictly positive solution exists; value == 0 separates the
// feasible-but-boundary case; system_feasible == false means the equality
// system itself has no solution.
struct StrictFeasibility {
    bool system_feasible = false;
    double value = 0.0;
    Vector witness;
};

StrictFeasibility strict_feasibility(const Matrix& eq_lhs, const Vector& eq_rhs,
                                     const LpOptions& opts = {});

} // namespace semistatic

#endif
