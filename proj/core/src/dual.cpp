#include "semistatic/dual.hpp"

#include <algorithm>
#include <cmath>

#include "semistatic/errors.hpp"
#include "semistatic/lp.hpp"
#include "numeric_detail.hpp"

namespace semistatic {

namespace {

// Moment system C h = b over terminal densities h: a mass row, one row per
// derivative pin (dropped for the unpinned problem), then the martingale
// rows of the measure h.P.
struct MomentSystem {
    Matrix C;
    Vector b;
    int n_pins = 0;
};

MomentSystem build_system(const MarketModel& m, double y, const Vector* r) {
    const int T = m.num_terminals();
    const int n = r ? static_cast<int>(r->size()) : 0;
    const Matrix mart = m.martingale_rows();
    MomentSystem sys;
    sys.n_pins = n;
    sys.C = Matrix::Zero(1 + n + mart.rows(), T);
    sys.b = Vector::Zero(sys.C.rows());
    const Vector& P = m.probabilities();
    sys.C.row(0) = P.transpose();
    sys.b[0] = y;
    for (int j = 0; j < n; ++j) {
        sys.C.row(1 + j) = (P.cwiseProduct(m.payoffs.col(j))).transpose();
        sys.b[1 + j] = (*r)[j];
    }
    for (int k = 0; k < mart.rows(); ++k)
        sys.C.row(1 + n + k) = mart.row(k).cwiseProduct(P.transpose());
    return sys;
}

double dual_objective(const UtilityFunction& u, const Vector& prob, const Vector& h) {
    double s = 0.0;
    for (int w = 0; w < h.size(); ++w) {
        const double v = h[w] <= 0.0 ? u.conjugate_at_zero() : u.conjugate(h[w]);
        if (v == kInf) return kInf;
        s += prob[w] * v;
    }
    return s;
}

// Equality-constrained Newton for min sum prob_w V(h_w) s.t. C h = b,
// starting from a strictly positive feasible h. Multipliers lambda satisfy
// grad = C^T lambda at the optimum.
struct NewtonDualOut {
    Vector h;
    Vector lambda;
    double value = 0.0;
    int iterations = 0;
};

NewtonDualOut newton_dual(const UtilityFunction& u, const Vector& prob, const Matrix& C,
                          Vector h, const DualOptions& opts) {
    NewtonDualOut out;
    const int T = static_cast<int>(h.size());
    double val = dual_objective(u, prob, h);
    double scale = 1.0;
    bool first = true;
    Vector lambda = Vector::Zero(C.rows());

    int iter = 0;
    while (iter < opts.max_newton) {
        Vector grad(T), curv(T);
        for (int w = 0; w < T; ++w) {
            grad[w] = prob[w] * u.conjugate_derivative(h[w]);
            curv[w] = prob[w] * u.conjugate_second(h[w]);
        }
        Vector inv_curv = curv.cwiseInverse();
        Matrix M = C * inv_curv.asDiagonal() * C.transpose();
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(M);
        cod.setThreshold(1e-13);
        lambda = cod.solve(C * (grad.cwiseProduct(inv_curv)));
        Vector residual = grad - C.transpose() * lambda;
        if (first) {
            scale = std::max(1.0, residual.cwiseAbs().maxCoeff());
            first = false;
        }
        if (residual.cwiseAbs().maxCoeff() <= opts.grad_tol * scale) break;
        ++iter;

        Vector d = -residual.cwiseProduct(inv_curv);
        double tmax = kInf;
        for (int w = 0; w < T; ++w)
            if (d[w] < 0.0) tmax = std::min(tmax, -h[w] / d[w]);
        double t = std::min(1.0, 0.995 * tmax);
        const double slope = residual.dot(d);  // = grad.d on the feasible plane
        bool moved = false;
        for (int ls = 0; ls < 60 && t > 0.0; ++ls) {
            Vector h_try = h + t * d;
            const double v_try = dual_objective(u, prob, h_try);
            if (v_try < val + 0.25 * t * slope || (v_try < val && v_try != kInf)) {
                h = h_try;
                val = v_try;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;
    }
    out.h = h;
    out.lambda = lambda;
    out.value = val;
    out.iterations = iter;
    return out;
}

DualSolution solve_moments_smooth(const MarketModel& m, const UtilityFunction& u,
                                  const MomentSystem& sys, const DualOptions& opts) {
    DualSolution sol;
    StrictFeasibility sf = strict_feasibility(sys.C, sys.b);
    if (!sf.system_feasible) {
        sol.status = DualStatus::Infeasible;
        sol.note = "moment system infeasible";
        return sol;
    }
    const Vector& P = m.probabilities();
    const int T = m.num_terminals();

    std::vector<int> free_states(T);
    Vector h0;
    std::vector<int> pinned;
    if (sf.value > opts.boundary_tol) {
        for (int w = 0; w < T; ++w) free_states[w] = w;
        h0 = sf.witness;
    } else {
        // boundary of the dual cone: some states can never leave zero
        if (u.conjugate_at_zero() == kInf) {
            sol.status = DualStatus::Infeasible;
            sol.value = kInf;
            sol.note = "dual value +inf on the boundary face";
            return sol;
        }
        free_states.clear();
        for (int w = 0; w < T; ++w) {
            LinearProgram lp = LinearProgram::make(T);
            for (auto& b : lp.lower_bounds) b = 0.0;
            lp.maximize = true;
            lp.objective[w] = 1.0;
            lp.eq_lhs = sys.C;
            lp.eq_rhs = sys.b;
            LpResult r = solve_lp(lp);
            if (!r.optimal()) throw SolverError("dual boundary probe LP failed");
            if (r.value <= opts.feas_tol)
                pinned.push_back(w);
            else
                free_states.push_back(w);
        }
        if (free_states.empty()) {
            sol.status = DualStatus::Infeasible;
            sol.note = "dual feasible set is the origin";
            return sol;
        }
        // strictly positive start on the face
        LinearProgram lp = LinearProgram::make(T + 1);
        lp.maximize = true;
        lp.objective[T] = 1.0;
        lp.eq_lhs = Matrix::Zero(sys.C.rows() + pinned.size(), T + 1);
        lp.eq_rhs = Vector::Zero(sys.C.rows() + pinned.size());
        lp.eq_lhs.topLeftCorner(sys.C.rows(), T) = sys.C;
        lp.eq_rhs.head(sys.C.rows()) = sys.b;
        for (size_t i = 0; i < pinned.size(); ++i)
            lp.eq_lhs(sys.C.rows() + i, pinned[i]) = 1.0;
        lp.ub_lhs = Matrix::Zero(free_states.size() + 1, T + 1);
        lp.ub_rhs = Vector::Zero(free_states.size() + 1);
        for (size_t i = 0; i < free_states.size(); ++i) {
            lp.ub_lhs(i, free_states[i]) = -1.0;
            lp.ub_lhs(i, T) = 1.0;
        }
        lp.ub_lhs(free_states.size(), T) = 1.0;
        lp.ub_rhs[free_states.size()] = 1e6 * (1.0 + sys.b.cwiseAbs().maxCoeff());
        LpResult r = solve_lp(lp);
        if (!r.optimal() || r.value <= 0.0)
            throw SolverError("dual boundary face: no interior start");
        h0 = r.point.head(T);
    }

    // Newton on the free block
    const int F = static_cast<int>(free_states.size());
    Matrix Cf(sys.C.rows(), F);
    Vector hf(F), Pf(F);
    for (int i = 0; i < F; ++i) {
        Cf.col(i) = sys.C.col(free_states[i]);
        hf[i] = h0[free_states[i]];
        Pf[i] = P[free_states[i]];
    }
    NewtonDualOut nk = newton_dual(u, Pf, Cf, hf, opts);

    sol.status = DualStatus::Optimal;
    sol.density = Vector::Zero(T);
    for (int i = 0; i < F; ++i) sol.density[free_states[i]] = nk.h[i];
    sol.value = nk.value;
    for (int w : pinned) sol.value += P[w] * u.conjugate_at_zero();
    sol.iterations = nk.iterations;
    sol.dv_dy = nk.lambda[0];
    sol.dv_dr = nk.lambda.segment(1, sys.n_pins);
    const double mass = P.dot(sol.density);
    if (mass > 0.0) sol.measure = P.cwiseProduct(sol.density) / mass;
    return sol;
}

DualSolution solve_moments_pwl(const MarketModel& m, const UtilityFunction& u,
                               const MomentSystem& sys, const DualOptions& opts) {
    const int T = m.num_terminals();
    const Vector& P = m.probabilities();
    const auto& bps = u.breakpoints();
    const auto& vals = u.breakpoint_values();
    const int S = static_cast<int>(bps.size());
    const double h_min = u.slopes().back();  // V = +inf below the least slope

    // vars: h (>= h_min) | w (epigraph, free)
    LinearProgram lp = LinearProgram::make(2 * T);
    for (int w = 0; w < T; ++w) {
        lp.lower_bounds[w] = h_min;
        lp.objective[T + w] = P[w];
    }
    lp.eq_lhs = Matrix::Zero(sys.C.rows(), 2 * T);
    lp.eq_lhs.leftCols(T) = sys.C;
    lp.eq_rhs = sys.b;
    lp.ub_lhs = Matrix::Zero(T * S, 2 * T);
    lp.ub_rhs = Vector::Zero(T * S);
    for (int w = 0; w < T; ++w) {
        for (int s = 0; s < S; ++s) {
            // w_w >= vals_s - b_s h_w
            const int row = w * S + s;
            lp.ub_lhs(row, w) = -bps[s];
            lp.ub_lhs(row, T + w) = -1.0;
            lp.ub_rhs[row] = -vals[s];
        }
    }
    LpOptions lo;
    lo.feas_tol = opts.feas_tol;
    LpResult r = solve_lp(lp, lo);

    DualSolution sol;
    if (r.status == LpStatus::Infeasible) {
        sol.status = DualStatus::Infeasible;
        sol.note = "moment system infeasible (piecewise domain)";
        return sol;
    }
    if (r.status == LpStatus::Unbounded)
        throw SolverError("dual LP unbounded");
    sol.status = DualStatus::Optimal;
    sol.density = r.point.head(T);
    sol.value = r.value;
    sol.dv_dy = r.eq_duals[0];
    sol.dv_dr = r.eq_duals.segment(1, sys.n_pins);
    const double mass = P.dot(sol.density);
    if (mass > 0.0) sol.measure = P.cwiseProduct(sol.density) / mass;
    return sol;
}

DualSolution solve_moments(const MarketModel& m, const UtilityFunction& u,
                           const MomentSystem& sys, const DualOptions& opts) {
    return u.inada() ? solve_moments_smooth(m, u, sys, opts)
                     : solve_moments_pwl(m, u, sys, opts);
}

} // namespace

DualSolution solve_v(const MarketModel& m, const UtilityFunction& u, double y,
                     const Vector& r, const DualOptions& opts) {
    if (r.size() != m.num_derivatives()) throw DimensionError("solve_v: r length");
    DualSolution sol;
    if (!(y > 0.0)) {
        sol.status = DualStatus::Infeasible;
        sol.note = "y must be positive";
        return sol;
    }
    MomentSystem sys = build_system(m, y, &r);
    return solve_moments(m, u, sys, opts);
}

DualSolution solve_v_tilde(const MarketModel& m, const UtilityFunction& u, double y,
                           const Vector& p, const DualOptions& opts) {
    if (p.size() != m.num_derivatives()) throw DimensionError("solve_v_tilde: p length");
    DualSolution sol = solve_v(m, u, y, Vector(y * p), opts);
    if (sol.status == DualStatus::Optimal)
        sol.dy_v_tilde = sol.dv_dy + p.dot(sol.dv_dr);
    return sol;
}

WTilde dual_w_tilde(const MarketModel& m, const UtilityFunction& u, double y,
                    const DualOptions& opts) {
    if (!(y > 0.0)) throw std::domain_error("dual_w_tilde: y must be > 0");
    MomentSystem sys = build_system(m, y, nullptr);
    WTilde out;
    out.solution = solve_moments(m, u, sys, opts);
    if (out.solution.status == DualStatus::Optimal) {
        const Vector mu = m.probabilities().cwiseProduct(out.solution.density);
        out.argmin_price = (m.payoffs.transpose() * mu) / y;
    }
    return out;
}

} // namespace semistatic
