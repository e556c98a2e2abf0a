#include "semistatic/polytope.hpp"

#include <algorithm>
#include <cmath>

#include "semistatic/errors.hpp"

namespace semistatic {

Polytope Polytope::make(int dim) {
    Polytope p;
    p.dim = dim;
    p.eq_lhs = Matrix::Zero(0, dim);
    p.eq_rhs = Vector::Zero(0);
    return p;
}

void Polytope::add_halfspace(const Vector& normal, double offset) {
    if (normal.size() != dim) throw DimensionError("Polytope::add_halfspace: dimension");
    halfspaces.push_back({normal, offset});
}

Polytope Polytope::box(const Vector& lo, const Vector& hi) {
    Polytope p = make(static_cast<int>(lo.size()));
    for (int i = 0; i < p.dim; ++i) {
        Vector n = Vector::Zero(p.dim);
        n[i] = 1.0;
        p.add_halfspace(n, hi[i]);
        p.add_halfspace(-n, -lo[i]);
    }
    return p;
}

namespace {

LinearProgram feasibility_lp(const Polytope& poly) {
    LinearProgram lp = LinearProgram::make(poly.dim);
    lp.eq_lhs = poly.eq_lhs;
    lp.eq_rhs = poly.eq_rhs;
    const int m = static_cast<int>(poly.halfspaces.size());
    lp.ub_lhs = Matrix::Zero(m, poly.dim);
    lp.ub_rhs = Vector::Zero(m);
    for (int i = 0; i < m; ++i) {
        lp.ub_lhs.row(i) = poly.halfspaces[i].normal.transpose();
        lp.ub_rhs[i] = poly.halfspaces[i].offset;
    }
    return lp;
}

bool feasible_point(const Polytope& poly, const Vector& x, double tol) {
    for (const Halfspace& h : poly.halfspaces)
        if (h.normal.dot(x) > h.offset + tol * (1.0 + std::abs(h.offset))) return false;
    if (poly.eq_lhs.rows() > 0) {
        Vector r = poly.eq_lhs * x - poly.eq_rhs;
        for (int i = 0; i < r.size(); ++i)
            if (std::abs(r[i]) > tol * (1.0 + std::abs(poly.eq_rhs[i]))) return false;
    }
    return true;
}

} // namespace

bool polytope_is_bounded(const Polytope& poly, const LpOptions& lp_opts) {
    LinearProgram lp = feasibility_lp(poly);
    for (int i = 0; i < poly.dim; ++i) {
        for (double s : {1.0, -1.0}) {
            lp.objective.setZero();
            lp.objective[i] = s;
            lp.maximize = true;
            LpResult r = solve_lp(lp, lp_opts);
            if (r.status == LpStatus::Unbounded) return false;
            if (r.status == LpStatus::Infeasible) return true;  // empty is bounded
        }
    }
    return true;
}

std::vector<Vector> enumerate_vertices(const Polytope& poly,
                                       const VertexEnumOptions& opts) {
    const int d = poly.dim;
    if (d > opts.dim_cap)
        throw DimensionError("enumerate_vertices: dimension above cap");
    if (!polytope_is_bounded(poly))
        throw UnboundedRegionError("enumerate_vertices: unbounded region");

    // rank of the equality block
    int rank_eq = 0;
    Matrix eq = poly.eq_lhs;
    Vector eqr = poly.eq_rhs;
    if (eq.rows() > 0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(eq.transpose());
        qr.setThreshold(1e-12);
        rank_eq = static_cast<int>(qr.rank());
    }
    const int k = d - rank_eq;  // inequalities to activate
    const int nh = static_cast<int>(poly.halfspaces.size());
    if (k < 0) throw SolverError("enumerate_vertices: equality rank exceeds dimension");
    if (k > nh) return {};

    // guard the subset count
    double combos = 1.0;
    for (int i = 0; i < k; ++i) combos *= double(nh - i) / double(i + 1);
    if (combos > static_cast<double>(opts.combination_cap))
        throw DimensionError("enumerate_vertices: too many basis subsets");

    std::vector<Vector> found;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;

    const int total_rows = static_cast<int>(eq.rows()) + k;
    Matrix sys(total_rows, d);
    Vector rhs(total_rows);
    if (eq.rows() > 0) {
        sys.topRows(eq.rows()) = eq;
        rhs.head(eq.rows()) = eqr;
    }

    auto try_subset = [&]() {
        for (int i = 0; i < k; ++i) {
            sys.row(eq.rows() + i) = poly.halfspaces[idx[i]].normal.transpose();
            rhs[eq.rows() + i] = poly.halfspaces[idx[i]].offset;
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(sys);
        qr.setThreshold(1e-10);
        if (static_cast<int>(qr.rank()) < d) return;
        Vector x = qr.solve(rhs);
        if ((sys * x - rhs).cwiseAbs().maxCoeff() > opts.feas_tol * 10) return;
        if (!feasible_point(poly, x, opts.feas_tol)) return;
        for (const Vector& v : found)
            if ((v - x).cwiseAbs().maxCoeff() <= opts.dedup_tol) return;
        found.push_back(x);
    };

    if (k == 0) {
        try_subset();
    } else {
        while (true) {
            try_subset();
            int i = k - 1;
            while (i >= 0 && idx[i] == nh - k + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }

    std::sort(found.begin(), found.end(), [](const Vector& a, const Vector& b) {
        for (int i = 0; i < a.size(); ++i) {
            if (a[i] < b[i] - 1e-12) return true;
            if (a[i] > b[i] + 1e-12) return false;
        }
        return false;
    });
    return found;
}

bool in_convex_hull(const std::vector<Vector>& points, const Vector& x, double tol) {
    if (points.empty()) return false;
    const int d = static_cast<int>(x.size());
    const int n = static_cast<int>(points.size());
    LinearProgram lp = LinearProgram::make(n);
    for (auto& b : lp.lower_bounds) b = 0.0;
    lp.eq_lhs = Matrix::Zero(d + 1, n);
    lp.eq_rhs = Vector::Zero(d + 1);
    for (int j = 0; j < n; ++j) {
        lp.eq_lhs.block(0, j, d, 1) = points[j];
        lp.eq_lhs(d, j) = 1.0;
    }
    lp.eq_rhs.head(d) = x;
    lp.eq_rhs[d] = 1.0;
    LpOptions o;
    o.feas_tol = tol;
    return solve_lp(lp, o).status == LpStatus::Optimal;
}

} // namespace semistatic
