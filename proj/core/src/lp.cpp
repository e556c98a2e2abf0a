#include "semistatic/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace semistatic {

LinearProgram LinearProgram::make(int nvars) {
    LinearProgram lp;
    lp.objective = Vector::Zero(nvars);
    lp.eq_lhs = Matrix::Zero(0, nvars);
    lp.eq_rhs = Vector::Zero(0);
    lp.ub_lhs = Matrix::Zero(0, nvars);
    lp.ub_rhs = Vector::Zero(0);
    lp.lower_bounds.assign(nvars, std::nullopt);
    return lp;
}

namespace {

struct StandardForm {
    // min c.z  s.t.  A z = b, z >= 0, after shifting finite lower bounds,
    // splitting free variables and adding slacks. Rows keep input order
    // (equalities first, then ub rows with their slacks); rhs is made
    // non-negative by row negation, recorded in row_sign.
    Matrix A;           // m x n
    Vector b;           // m, non-negative
    Vector cost;        // n
    std::vector<double> row_sign;
    std::vector<double> row_scale;
    int n_struct = 0;
    std::vector<int> col_var;      // structural column -> original variable
    std::vector<double> col_sign;  // +1 / -1 for split halves
};

StandardForm to_standard_form(const LinearProgram& lp, double pivot_tol) {
    const int nv = lp.num_vars();
    if (static_cast<int>(lp.lower_bounds.size()) != nv ||
        lp.eq_lhs.cols() != nv || lp.ub_lhs.cols() != nv ||
        lp.eq_lhs.rows() != lp.eq_rhs.size() || lp.ub_lhs.rows() != lp.ub_rhs.size()) {
        throw DimensionError("solve_lp: inconsistent dimensions");
    }
    if ((lp.eq_rhs.size() && !lp.eq_rhs.allFinite()) ||
        (lp.ub_rhs.size() && !lp.ub_rhs.allFinite()))
        throw DimensionError("solve_lp: non-finite rhs");

    const double sense = lp.maximize ? -1.0 : 1.0;

    StandardForm sf;
    Vector shift = Vector::Zero(nv);
    std::vector<int> var_col(nv, -1);
    std::vector<bool> var_split(nv, false);
    for (int i = 0; i < nv; ++i) {
        var_col[i] = sf.n_struct;
        if (lp.lower_bounds[i].has_value()) {
            shift[i] = *lp.lower_bounds[i];
            sf.col_var.push_back(i);
            sf.col_sign.push_back(1.0);
            sf.n_struct += 1;
        } else {
            var_split[i] = true;
            sf.col_var.push_back(i);
            sf.col_sign.push_back(1.0);
            sf.col_var.push_back(i);
            sf.col_sign.push_back(-1.0);
            sf.n_struct += 2;
        }
    }

    const int m_eq = static_cast<int>(lp.eq_lhs.rows());
    const int m_ub = static_cast<int>(lp.ub_lhs.rows());
    const int m = m_eq + m_ub;
    const int n = sf.n_struct + m_ub;

    sf.A = Matrix::Zero(m, n);
    sf.b = Vector::Zero(m);
    sf.row_sign.assign(m, 1.0);
    sf.row_scale.assign(m, 1.0);
    sf.cost = Vector::Zero(n);

    for (int i = 0; i < nv; ++i) {
        const double c = sense * lp.objective[i];
        sf.cost[var_col[i]] += c;
        if (var_split[i]) sf.cost[var_col[i] + 1] -= c;
    }

    auto fill_row = [&](int r, const Eigen::Ref<const Eigen::RowVectorXd>& a, double rhs) {
        double scale = a.cwiseAbs().maxCoeff();
        if (scale < pivot_tol) scale = 1.0;
        sf.row_scale[r] = scale;
        sf.b[r] = (rhs - a.dot(shift.transpose())) / scale;
        for (int i = 0; i < nv; ++i) {
            const double v = a[i] / scale;
            sf.A(r, var_col[i]) += v;
            if (var_split[i]) sf.A(r, var_col[i] + 1) -= v;
        }
    };
    for (int r = 0; r < m_eq; ++r) fill_row(r, lp.eq_lhs.row(r), lp.eq_rhs[r]);
    for (int r = 0; r < m_ub; ++r) {
        fill_row(m_eq + r, lp.ub_lhs.row(r), lp.ub_rhs[r]);
        sf.A(m_eq + r, sf.n_struct + r) = 1.0;
    }
    for (int r = 0; r < m; ++r) {
        if (sf.b[r] < 0.0) {
            sf.A.row(r) = -sf.A.row(r);
            sf.b[r] = -sf.b[r];
            sf.row_sign[r] = -1.0;
        }
    }
    return sf;
}

// Revised simplex with a fresh basis factorization at every iteration:
// nothing accumulates, so mixed-magnitude rows (utility slopes spanning
// 1e-6..1e6) stay numerically tame. Bland's rule guarantees termination.
// Artificial columns are the slots basis[i] >= n; their constraint column is
// the unit vector of their row.
class RevisedSimplex {
  public:
    RevisedSimplex(const Matrix& A, const Vector& b, double pivot_tol)
        : A_(A), b_(b), m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())),
          pivot_tol_(pivot_tol) {
        basis_.resize(m_);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;  // artificial start
    }

    Matrix basis_matrix() const {
        Matrix B = Matrix::Zero(m_, m_);
        for (int k = 0; k < m_; ++k) {
            if (basis_[k] < n_)
                B.col(k) = A_.col(basis_[k]);
            else
                B(basis_[k] - n_, k) = 1.0;
        }
        return B;
    }

    // cost of artificials is `art_cost`; structural costs in `cost`.
    // Returns 0 on optimal, 2 on unbounded.
    int run(const Vector& cost, double art_cost, int& iter, int max_iter) {
        while (true) {
            if (++iter > max_iter) throw SolverError("solve_lp: iteration cap");
            Eigen::FullPivLU<Matrix> lu;
            if (m_ > 0) lu.compute(basis_matrix());
            Vector cb(m_);
            for (int k = 0; k < m_; ++k)
                cb[k] = basis_[k] < n_ ? cost[basis_[k]] : art_cost;
            Vector xb = m_ > 0 ? lu.solve(b_) : Vector();
            Vector y = m_ > 0 ? lu.transpose().solve(cb) : Vector();
            const double y_scale = m_ > 0 ? y.cwiseAbs().maxCoeff() : 0.0;

            // entering: smallest index with meaningfully negative reduced cost
            int enter = -1;
            std::vector<bool> in_basis(n_, false);
            for (int k = 0; k < m_; ++k)
                if (basis_[k] < n_) in_basis[basis_[k]] = true;
            for (int j = 0; j < n_; ++j) {
                if (in_basis[j]) continue;
                const double col_scale = m_ > 0 ? A_.col(j).cwiseAbs().maxCoeff() : 0.0;
                const double rc = cost[j] - (m_ > 0 ? y.dot(A_.col(j)) : 0.0);
                const double tol = 1e-9 * (1.0 + std::abs(cost[j]) + y_scale * col_scale);
                if (rc < -tol) { enter = j; break; }
            }
            if (enter < 0) return 0;

            Vector w = m_ > 0 ? lu.solve(A_.col(enter)) : Vector();
            const double w_scale = m_ > 0 ? std::max(1.0, w.cwiseAbs().maxCoeff()) : 1.0;
            int leave = -1;
            double best_ratio = kInf;
            for (int i = 0; i < m_; ++i) {
                if (w[i] > pivot_tol_ * w_scale) {
                    const double ratio = std::max(xb[i], 0.0) / w[i];
                    if (leave < 0) {
                        best_ratio = ratio;
                        leave = i;
                        continue;
                    }
                    const double tie = 1e-12 * (1.0 + std::abs(best_ratio));
                    if (ratio < best_ratio - tie) {
                        best_ratio = ratio;
                        leave = i;
                    } else if (ratio < best_ratio + tie && basis_[i] < basis_[leave]) {
                        leave = i;
                    }
                }
            }
            if (leave < 0) return 2;
            basis_[leave] = enter;
        }
    }

    // replace basic artificials by structural columns where possible; rows
    // whose artificial cannot leave are redundant and reported for deletion
    std::vector<int> drive_out_artificials() {
        std::vector<int> redundant_rows;
        for (int k = 0; k < m_; ++k) {
            if (basis_[k] < n_) continue;
            Eigen::FullPivLU<Matrix> lu(basis_matrix());
            std::vector<bool> in_basis(n_, false);
            for (int t = 0; t < m_; ++t)
                if (basis_[t] < n_) in_basis[basis_[t]] = true;
            int enter = -1;
            for (int j = 0; j < n_ && enter < 0; ++j) {
                if (in_basis[j]) continue;
                Vector w = lu.solve(A_.col(j));
                if (std::abs(w[k]) > 1e-7 * std::max(1.0, w.cwiseAbs().maxCoeff()))
                    enter = j;
            }
            if (enter >= 0)
                basis_[k] = enter;
            else
                redundant_rows.push_back(basis_[k] - n_);
        }
        return redundant_rows;
    }

    const std::vector<int>& basis() const { return basis_; }
    bool has_artificial() const {
        for (int k = 0; k < m_; ++k)
            if (basis_[k] >= n_) return true;
        return false;
    }

  private:
    const Matrix& A_;
    const Vector& b_;
    int m_, n_;
    double pivot_tol_;
    std::vector<int> basis_;
};

} // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts) {
    StandardForm sf = to_standard_form(lp, opts.pivot_tol);
    const int m0 = static_cast<int>(sf.A.rows());
    const int n = static_cast<int>(sf.A.cols());

    const int max_iter =
        opts.max_iterations > 0 ? opts.max_iterations : 500 * (m0 + n + 10);
    int iter = 0;

    RevisedSimplex simplex(sf.A, sf.b, opts.pivot_tol);

    // Phase 1
    {
        const int status = simplex.run(Vector::Zero(n), 1.0, iter, max_iter);
        if (status == 2) throw SolverError("solve_lp: phase-1 ray");
        // infeasibility = sum of artificial levels
        Eigen::FullPivLU<Matrix> lu;
        if (m0 > 0) lu.compute(simplex.basis_matrix());
        Vector xb = m0 > 0 ? lu.solve(sf.b) : Vector();
        double infeas = 0.0;
        for (int k = 0; k < m0; ++k)
            if (simplex.basis()[k] >= n) infeas += std::max(xb[k], 0.0);
        const double rhs_scale = 1.0 + (sf.b.size() ? sf.b.maxCoeff() : 0.0);
        if (infeas > opts.feas_tol * rhs_scale) {
            LpResult res;
            res.status = LpStatus::Infeasible;
            return res;
        }
    }

    std::vector<int> redundant = simplex.drive_out_artificials();

    // Phase 2 (redundant rows keep their zero-level artificial in the basis;
    // artificial cost 0 and the entering rule never re-selects them)
    {
        const int status = simplex.run(sf.cost, 0.0, iter, max_iter);
        if (status == 2) {
            LpResult res;
            res.status = LpStatus::Unbounded;
            return res;
        }
    }

    // solution and duals from a final factorization
    Eigen::FullPivLU<Matrix> lu;
    if (m0 > 0) lu.compute(simplex.basis_matrix());
    Vector cb(m0);
    for (int k = 0; k < m0; ++k)
        cb[k] = simplex.basis()[k] < n ? sf.cost[simplex.basis()[k]] : 0.0;
    Vector xb = m0 > 0 ? lu.solve(sf.b) : Vector();
    Vector y = m0 > 0 ? lu.transpose().solve(cb) : Vector();

    Vector z = Vector::Zero(n);
    for (int k = 0; k < m0; ++k)
        if (simplex.basis()[k] < n) z[simplex.basis()[k]] = std::max(xb[k], 0.0);

    const int nv = lp.num_vars();
    Vector x = Vector::Zero(nv);
    for (int i = 0; i < nv; ++i)
        if (lp.lower_bounds[i].has_value()) x[i] = *lp.lower_bounds[i];
    for (int j = 0; j < sf.n_struct; ++j) x[sf.col_var[j]] += sf.col_sign[j] * z[j];

    const double sense = lp.maximize ? -1.0 : 1.0;
    Vector y_orig(m0);
    for (int r = 0; r < m0; ++r)
        y_orig[r] = sense * y[r] * sf.row_sign[r] / sf.row_scale[r];
    for (int r : redundant) y_orig[r] = 0.0;

    LpResult res;
    res.status = LpStatus::Optimal;
    res.point = x;
    res.value = lp.objective.dot(x);
    const int m_eq = static_cast<int>(lp.eq_lhs.rows());
    res.eq_duals = y_orig.head(m_eq);
    res.ub_duals = y_orig.tail(m0 - m_eq);
    return res;
}

StrictFeasibility strict_feasibility(const Matrix& eq_lhs, const Vector& eq_rhs,
                                     const LpOptions& opts) {
    const int nv = static_cast<int>(eq_lhs.cols());
    if (eq_lhs.rows() != eq_rhs.size()) throw DimensionError("strict_feasibility: dimensions");

    // max t  s.t.  E x = e,  t - x_i <= 0;  a cap on t keeps the LP bounded
    // for systems without a mass constraint.
    LinearProgram lp = LinearProgram::make(nv + 1);
    lp.maximize = true;
    lp.objective[nv] = 1.0;
    lp.eq_lhs = Matrix::Zero(eq_lhs.rows(), nv + 1);
    lp.eq_lhs.leftCols(nv) = eq_lhs;
    lp.eq_rhs = eq_rhs;
    lp.ub_lhs = Matrix::Zero(nv + 1, nv + 1);
    lp.ub_rhs = Vector::Zero(nv + 1);
    for (int i = 0; i < nv; ++i) {
        lp.ub_lhs(i, nv) = 1.0;
        lp.ub_lhs(i, i) = -1.0;
    }
    lp.ub_lhs(nv, nv) = 1.0;
    lp.ub_rhs[nv] = 1e6 * std::max(1.0, eq_rhs.size() ? eq_rhs.cwiseAbs().maxCoeff() : 1.0);

    LpResult r = solve_lp(lp, opts);
    StrictFeasibility out;
    if (r.status == LpStatus::Infeasible) {
        out.system_feasible = false;
        return out;
    }
    if (r.status != LpStatus::Optimal) throw SolverError("strict_feasibility: unexpected LP status");
    out.system_feasible = true;
    out.value = r.value;
    out.witness = r.point.head(nv);
    return out;
}

} // namespace semistatic
