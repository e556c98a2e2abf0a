#include "semistatic/primal.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "semistatic/errors.hpp"
#include "semistatic/lp.hpp"
#include "numeric_detail.hpp"

namespace semistatic {

namespace {

// g = base + A z over free coordinates z; the first n_q columns of A belong
// to the static position.
struct AffineProblem {
    Vector base;
    Matrix A;
    int n_q = 0;
};

struct AffineResult {
    PrimalStatus status = PrimalStatus::Infeasible;
    double value = -kInf;
    Vector g;
    Vector z;  // some preimage of g - base under A
    double marginal = 0.0;
    int iterations = 0;
    bool used_fallback = false;
};

double expected_utility(const UtilityFunction& u, const Vector& prob, const Vector& g) {
    double s = 0.0;
    for (int w = 0; w < g.size(); ++w) {
        const double uw = u.value(g[w]);
        if (uw == -kInf) return -kInf;
        s += prob[w] * uw;
    }
    return s;
}

// max t s.t. base + A z >= t. Returns (t*, attaining z).
std::pair<double, Vector> max_min_slack(const AffineProblem& prob, double feas_tol) {
    const int T = static_cast<int>(prob.base.size());
    const int k = static_cast<int>(prob.A.cols());
    LinearProgram lp = LinearProgram::make(k + 1);
    lp.maximize = true;
    lp.objective[k] = 1.0;
    lp.ub_lhs = Matrix::Zero(T + 1, k + 1);
    lp.ub_rhs = Vector::Zero(T + 1);
    for (int w = 0; w < T; ++w) {
        lp.ub_lhs.block(w, 0, 1, k) = -prob.A.row(w);
        lp.ub_lhs(w, k) = 1.0;
        lp.ub_rhs[w] = prob.base[w];
    }
    // the minimum slack never exceeds E_Q[g] <= max(base) under a martingale
    // measure; the cap only has to clear that
    lp.ub_lhs(T, k) = 1.0;
    lp.ub_rhs[T] = 1.0 + prob.base.cwiseAbs().maxCoeff();
    LpOptions o;
    o.feas_tol = feas_tol;
    LpResult r = solve_lp(lp, o);
    if (!r.optimal()) throw SolverError("max_min_slack: unexpected LP status");
    return {r.value, r.point.head(k)};
}

// Damped Newton ascent of sum_w prob_w U(base_w + (B c)_w) over c, starting
// from an interior point. B has orthonormal columns.
struct NewtonOut {
    Vector g;
    double value = 0.0;
    int iterations = 0;
    bool used_fallback = false;
};

NewtonOut newton_max(const UtilityFunction& u, const Vector& prob, const Vector& base,
                     const Matrix& B, Vector c, const PrimalOptions& opts) {
    NewtonOut out;
    const int k = static_cast<int>(B.cols());
    Vector g = base + B * c;
    double val = expected_utility(u, prob, g);

    auto gradient = [&](const Vector& gv) {
        Vector w(gv.size());
        for (int i = 0; i < gv.size(); ++i) w[i] = prob[i] * u.marginal(gv[i]);
        return Vector(B.transpose() * w);
    };

    double grad_scale = 1.0;
    bool first = true;
    int iter = 0;
    const int total_cap = opts.max_newton + opts.max_fallback;
    while (iter < total_cap && k > 0) {
        Vector grad = gradient(g);
        if (first) {
            grad_scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
            first = false;
        }
        if (grad.cwiseAbs().maxCoeff() <= opts.grad_tol * grad_scale) break;
        ++iter;

        Vector dir;
        bool newton_step = iter <= opts.max_newton;
        if (newton_step) {
            Vector curv(g.size());
            for (int i = 0; i < g.size(); ++i) curv[i] = -prob[i] * u.second(g[i]);
            Matrix H = B.transpose() * curv.asDiagonal() * B;
            Eigen::LDLT<Matrix> ldlt(H);
            if (ldlt.info() == Eigen::Success) {
                dir = ldlt.solve(grad);
                if (!dir.allFinite() || grad.dot(dir) <= 0.0) dir = grad;
            } else {
                dir = grad;
            }
        } else {
            out.used_fallback = true;
            dir = grad / grad_scale;
        }

        Vector dg = B * dir;
        double tmax = kInf;
        for (int i = 0; i < g.size(); ++i)
            if (dg[i] < 0.0) tmax = std::min(tmax, -g[i] / dg[i]);
        double t = std::min(1.0, 0.995 * tmax);
        const double slope = grad.dot(dir);
        bool moved = false;
        for (int ls = 0; ls < 60 && t > 0.0; ++ls) {
            Vector g_try = g + t * dg;
            double v_try = expected_utility(u, prob, g_try);
            if (v_try > val + 0.25 * t * slope || (v_try > val && v_try != -kInf)) {
                c += t * dir;
                g = g_try;
                val = v_try;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break;  // step collapsed below resolution
    }
    out.g = g;
    out.value = val;
    out.iterations = iter;
    return out;
}

AffineResult solve_affine_smooth(const UtilityFunction& u, const Vector& prob,
                                 const AffineProblem& prob_def, const PrimalOptions& opts) {
    AffineResult res;
    double slack;
    Vector z0;
    if (prob_def.base.minCoeff() > opts.boundary_tol) {
        // the do-nothing portfolio is already interior
        slack = prob_def.base.minCoeff();
        z0 = Vector::Zero(prob_def.A.cols());
    } else {
        std::tie(slack, z0) = max_min_slack(prob_def, opts.feas_tol);
    }

    if (slack < -opts.feas_tol) {
        res.status = PrimalStatus::Infeasible;
        return res;
    }

    const Matrix B = detail::column_space_basis(prob_def.A);

    if (slack <= opts.boundary_tol) {
        // every feasible payoff touches the domain edge somewhere
        res.status = PrimalStatus::Boundary;
        if (u.value_at_zero() == -kInf) {
            res.value = -kInf;
            res.g = (prob_def.base + prob_def.A * z0).cwiseMax(0.0);
            res.z = z0;
            return res;
        }
        // states that can never leave zero are pinned; the rest are solved
        // on the face
        const int T = static_cast<int>(prob_def.base.size());
        std::vector<int> pinned, free_states;
        for (int w = 0; w < T; ++w) {
            LinearProgram lp = LinearProgram::make(static_cast<int>(prob_def.A.cols()));
            lp.maximize = true;
            lp.objective = prob_def.A.row(w).transpose();
            lp.ub_lhs = -prob_def.A;
            lp.ub_rhs = prob_def.base;
            LpResult r = solve_lp(lp);
            const double reach =
                r.status == LpStatus::Unbounded ? kInf : r.value + prob_def.base[w];
            if (reach <= opts.feas_tol * (1.0 + std::abs(prob_def.base[w])))
                pinned.push_back(w);
            else
                free_states.push_back(w);
        }
        if (free_states.empty()) {
            res.g = Vector::Zero(T);
            res.z = Vector::Zero(prob_def.A.cols());
            res.value = prob.sum() * u.value_at_zero();
            res.marginal = 0.0;
            return res;
        }
        // directions that keep pinned states at zero
        Matrix A_pin(static_cast<int>(pinned.size()), prob_def.A.cols());
        for (size_t i = 0; i < pinned.size(); ++i) A_pin.row(i) = prob_def.A.row(pinned[i]);
        Matrix N = detail::kernel_basis(A_pin);
        Matrix A_free(static_cast<int>(free_states.size()), N.cols());
        Vector base_free(free_states.size()), prob_free(free_states.size());
        Matrix AN = prob_def.A * N;
        // particular solution: z_p with (A z_p)_pinned = -base_pinned and
        // free states strictly positive
        Vector z_p;
        {
            LinearProgram lp = LinearProgram::make(static_cast<int>(prob_def.A.cols()) + 1);
            lp.maximize = true;
            lp.objective[prob_def.A.cols()] = 1.0;
            lp.eq_lhs = Matrix::Zero(pinned.size(), prob_def.A.cols() + 1);
            lp.eq_rhs = Vector::Zero(pinned.size());
            for (size_t i = 0; i < pinned.size(); ++i) {
                lp.eq_lhs.block(i, 0, 1, prob_def.A.cols()) = prob_def.A.row(pinned[i]);
                lp.eq_rhs[i] = -prob_def.base[pinned[i]];
            }
            lp.ub_lhs = Matrix::Zero(free_states.size() + 1, prob_def.A.cols() + 1);
            lp.ub_rhs = Vector::Zero(free_states.size() + 1);
            for (size_t i = 0; i < free_states.size(); ++i) {
                const int w = free_states[i];
                lp.ub_lhs.block(i, 0, 1, prob_def.A.cols()) = -prob_def.A.row(w);
                lp.ub_lhs(i, prob_def.A.cols()) = 1.0;
                lp.ub_rhs[i] = prob_def.base[w];
            }
            lp.ub_lhs(free_states.size(), prob_def.A.cols()) = 1.0;
            lp.ub_rhs[free_states.size()] = 1e6 * (1.0 + prob_def.base.cwiseAbs().maxCoeff());
            LpResult r = solve_lp(lp);
            if (!r.optimal() || r.value <= 0.0)
                throw SolverError("boundary face: no interior start on the face");
            z_p = r.point.head(prob_def.A.cols());
        }
        for (size_t i = 0; i < free_states.size(); ++i) {
            const int w = free_states[i];
            A_free.row(i) = AN.row(w);
            base_free[i] = prob_def.base[w] + prob_def.A.row(w).dot(z_p);
            prob_free[i] = prob[w];
        }
        Matrix B2 = detail::column_space_basis(A_free);
        NewtonOut nk = newton_max(u, prob_free, base_free, B2, Vector::Zero(B2.cols()), opts);
        res.g = Vector::Zero(T);
        for (size_t i = 0; i < free_states.size(); ++i) res.g[free_states[i]] = nk.g[i];
        res.value = nk.value;
        for (int w : pinned) res.value += prob[w] * u.value_at_zero();
        // z: recover a preimage of g - base
        if (prob_def.A.cols() == 0) {
            res.z = Vector::Zero(0);
        } else {
            Eigen::ColPivHouseholderQR<Matrix> qr(prob_def.A);
            res.z = qr.solve(res.g - prob_def.base);
        }
        res.iterations = nk.iterations;
        res.used_fallback = nk.used_fallback;
        double marg = 0.0;
        for (size_t i = 0; i < free_states.size(); ++i)
            marg += prob_free[i] * u.marginal(nk.g[i]);
        res.marginal = marg;
        return res;
    }

    // interior path
    Vector c0 = B.transpose() * (prob_def.A * z0);
    Vector g_start = prob_def.base + B * c0;
    if (g_start.minCoeff() <= 0.0)
        throw SolverError("interior start lost after reduction");
    NewtonOut nk = newton_max(u, prob, prob_def.base, B, c0, opts);
    res.status = PrimalStatus::Interior;
    res.g = nk.g;
    res.value = nk.value;
    res.iterations = nk.iterations;
    res.used_fallback = nk.used_fallback;
    if (prob_def.A.cols() == 0) {
        res.z = Vector::Zero(0);
    } else {
        Eigen::ColPivHouseholderQR<Matrix> qr(prob_def.A);
        res.z = qr.solve(res.g - prob_def.base);
    }
    double marg = 0.0;
    for (int w = 0; w < res.g.size(); ++w) marg += prob[w] * u.marginal(res.g[w]);
    res.marginal = marg;
    return res;
}

AffineResult solve_affine_pwl(const UtilityFunction& u, const Vector& prob,
                              const AffineProblem& prob_def, const PrimalOptions& opts) {
    const int T = static_cast<int>(prob_def.base.size());
    const int k = static_cast<int>(prob_def.A.cols());
    const auto& bps = u.breakpoints();
    const auto& slopes = u.slopes();
    const auto& vals = u.breakpoint_values();
    const int S = static_cast<int>(bps.size());

    // vars: z (free) | g (>= 0) | t (hypograph values, free)
    LinearProgram lp = LinearProgram::make(k + 2 * T);
    lp.maximize = true;
    for (int w = 0; w < T; ++w) {
        lp.lower_bounds[k + w] = 0.0;           // g_w >= 0
        lp.objective[k + T + w] = prob[w];      // max E[t]
    }
    lp.eq_lhs = Matrix::Zero(T, k + 2 * T);
    lp.eq_rhs = prob_def.base;
    for (int w = 0; w < T; ++w) {
        lp.eq_lhs.block(w, 0, 1, k) = -prob_def.A.row(w);
        lp.eq_lhs(w, k + w) = 1.0;              // g - A z = base
    }
    lp.ub_lhs = Matrix::Zero(T * S, k + 2 * T);
    lp.ub_rhs = Vector::Zero(T * S);
    for (int w = 0; w < T; ++w) {
        for (int s = 0; s < S; ++s) {
            const int row = w * S + s;
            lp.ub_lhs(row, k + T + w) = 1.0;    // t_w
            lp.ub_lhs(row, k + w) = -slopes[s]; // - s_i g_w
            lp.ub_rhs[row] = vals[s] - slopes[s] * bps[s];
        }
    }
    LpOptions lo;
    lo.feas_tol = opts.feas_tol;
    LpResult r = solve_lp(lp, lo);

    AffineResult res;
    if (r.status == LpStatus::Infeasible) {
        res.status = PrimalStatus::Infeasible;
        return res;
    }
    if (r.status == LpStatus::Unbounded) {
        res.status = PrimalStatus::Infinite;
        res.value = kInf;
        return res;
    }
    res.z = r.point.head(k);
    res.g = r.point.segment(k, T);
    res.value = r.value;
    res.marginal = r.eq_duals.sum();  // each equality rhs moves one-for-one with x
    res.status = res.g.minCoeff() > 1e-7 * (1.0 + prob_def.base.cwiseAbs().maxCoeff())
                     ? PrimalStatus::Interior
                     : PrimalStatus::Boundary;
    return res;
}

// Minimum-norm static position among optimal ones; flags non-uniqueness.
void canonicalize_position(const AffineProblem& prob_def, Vector& z, bool& unique) {
    unique = true;
    const int n_q = prob_def.n_q;
    if (n_q == 0) return;
    Matrix K = detail::kernel_basis(prob_def.A);
    if (K.cols() == 0) return;
    Matrix Kq = K.topRows(n_q);
    if (Kq.cwiseAbs().maxCoeff() <= 1e-10) return;
    unique = false;
    Vector q0 = z.head(n_q);
    Eigen::ColPivHouseholderQR<Matrix> qr(Kq);
    Vector t = qr.solve(-q0);
    z += K * t;
}

PrimalSolution finish(const MarketModel& m, const AffineProblem& prob_def,
                      AffineResult&& ar, bool semistatic_problem) {
    PrimalSolution sol;
    sol.status = ar.status;
    sol.value = ar.value;
    sol.iterations = ar.iterations;
    sol.used_fallback = ar.used_fallback;
    sol.marginal_value = ar.marginal;
    if (ar.status == PrimalStatus::Infeasible || ar.status == PrimalStatus::Infinite) {
        sol.strategy = TradingStrategy::zero(m);
        sol.static_position = semistatic_problem ? Vector::Zero(m.num_derivatives()) : Vector();
        return sol;
    }
    bool unique = true;
    canonicalize_position(prob_def, ar.z, unique);
    sol.unique_position = unique;
    sol.g = ar.g;

    const int n_q = prob_def.n_q;
    const int d = m.num_stocks();
    sol.static_position = semistatic_problem ? Vector(ar.z.head(n_q)) : Vector();
    sol.strategy = TradingStrategy::zero(m);
    for (int nt = 0; nt < m.num_nonterminals(); ++nt)
        for (int i = 0; i < d; ++i)
            sol.strategy.holdings(nt, i) = ar.z[n_q + nt * d + i];
    return sol;
}

} // namespace

PrimalSolution solve_u(const MarketModel& m, const UtilityFunction& u, double x,
                       const Vector& q, const PrimalOptions& opts) {
    if (q.size() != m.num_derivatives()) throw DimensionError("solve_u: q length");
    AffineProblem prob_def;
    prob_def.base = Vector::Constant(m.num_terminals(), x);
    if (q.size() > 0) prob_def.base += m.payoffs * q;
    prob_def.A = m.strategy_map;
    prob_def.n_q = 0;
    AffineResult ar = u.inada() ? solve_affine_smooth(u, m.probabilities(), prob_def, opts)
                                : solve_affine_pwl(u, m.probabilities(), prob_def, opts);
    return finish(m, prob_def, std::move(ar), false);
}

PrimalSolution solve_u_tilde(const MarketModel& m, const UtilityFunction& u, double x,
                             const Vector& p, const PrimalOptions& opts) {
    const int n = m.num_derivatives();
    if (p.size() != n) throw DimensionError("solve_u_tilde: p length");
    if (!(x > 0.0)) throw std::domain_error("solve_u_tilde: x must be > 0");

    if (n > 0) {
        Matrix lhs(m.martingale_system_lhs().rows() + n, m.num_terminals());
        lhs.topRows(m.martingale_system_lhs().rows()) = m.martingale_system_lhs();
        lhs.bottomRows(n) = m.payoffs.transpose();
        Vector rhs(lhs.rows());
        rhs.head(lhs.rows() - n) = m.martingale_system_rhs();
        rhs.tail(n) = p;
        StrictFeasibility sf = strict_feasibility(lhs, rhs);
        if (!sf.system_feasible || sf.value <= opts.price_interior_tol)
            throw ArbitrageError("solve_u_tilde: p is not an arbitrage-free price");
    }

    const int T = m.num_terminals();
    AffineProblem prob_def;
    prob_def.base = Vector::Constant(T, x);
    prob_def.n_q = n;
    prob_def.A = Matrix::Zero(T, n + m.strategy_map.cols());
    for (int j = 0; j < n; ++j)
        prob_def.A.col(j) = m.payoffs.col(j) - Vector::Constant(T, p[j]);
    prob_def.A.rightCols(m.strategy_map.cols()) = m.strategy_map;

    AffineResult ar = u.inada() ? solve_affine_smooth(u, m.probabilities(), prob_def, opts)
                                : solve_affine_pwl(u, m.probabilities(), prob_def, opts);
    return finish(m, prob_def, std::move(ar), true);
}

PrimalSolution stock_only_value(const MarketModel& m, const UtilityFunction& u,
                                double x, const PrimalOptions& opts) {
    if (!(x > 0.0)) throw std::domain_error("stock_only_value: x must be > 0");
    return solve_u(m, u, x, Vector::Zero(m.num_derivatives()), opts);
}

} // namespace semistatic
