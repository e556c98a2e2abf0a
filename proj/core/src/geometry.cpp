#include "semistatic/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "semistatic/errors.hpp"
#include "semistatic/lp.hpp"

namespace semistatic {

PriceSet::PriceSet(Matrix mart_lhs, Vector mart_rhs, Matrix payoffs,
                   std::vector<Vector> vertices, bool open)
    : mart_lhs_(std::move(mart_lhs)),
      mart_rhs_(std::move(mart_rhs)),
      payoffs_(std::move(payoffs)),
      vertices_(std::move(vertices)),
      open_(open) {
    const int n = dim();
    lo_ = Vector::Constant(n, kInf);
    hi_ = Vector::Constant(n, -kInf);
    for (const Vector& v : vertices_) {
        lo_ = lo_.cwiseMin(v);
        hi_ = hi_.cwiseMax(v);
    }
}

namespace {

// [mass + martingale rows ; E[mu f] = p] over terminal measures mu
std::pair<Matrix, Vector> pinned_system(const Matrix& mart_lhs, const Vector& mart_rhs,
                                        const Matrix& payoffs, const Vector& p) {
    const int n = static_cast<int>(payoffs.cols());
    Matrix lhs(mart_lhs.rows() + n, mart_lhs.cols());
    Vector rhs(mart_rhs.size() + n);
    lhs.topRows(mart_lhs.rows()) = mart_lhs;
    rhs.head(mart_rhs.size()) = mart_rhs;
    lhs.bottomRows(n) = payoffs.transpose();
    rhs.tail(n) = p;
    return {lhs, rhs};
}

} // namespace

bool PriceSet::contains_closure(const Vector& p, double tol) const {
    if (p.size() != dim()) throw DimensionError("PriceSet: price length");
    auto [lhs, rhs] = pinned_system(mart_lhs_, mart_rhs_, payoffs_, p);
    LinearProgram lp = LinearProgram::make(static_cast<int>(lhs.cols()));
    for (auto& b : lp.lower_bounds) b = 0.0;
    lp.eq_lhs = lhs;
    lp.eq_rhs = rhs;
    LpOptions o;
    o.feas_tol = tol;
    return solve_lp(lp, o).status == LpStatus::Optimal;
}

bool PriceSet::contains(const Vector& p, double strict_tol) const {
    if (p.size() != dim()) throw DimensionError("PriceSet: price length");
    auto [lhs, rhs] = pinned_system(mart_lhs_, mart_rhs_, payoffs_, p);
    StrictFeasibility sf = strict_feasibility(lhs, rhs);
    return sf.system_feasible && sf.value > strict_tol;
}

bool PriceSet::contains_interior(const Vector& p, double strict_tol) const {
    return open_ && contains(p, strict_tol);
}

MarketGeometry::MarketGeometry(const MarketModel& model) : model_(&model) {
    const int T = model.num_terminals();
    polytope_ = Polytope::make(T);
    polytope_.eq_lhs = model.martingale_system_lhs();
    polytope_.eq_rhs = model.martingale_system_rhs();
    for (int w = 0; w < T; ++w) {
        Vector n = Vector::Zero(T);
        n[w] = -1.0;
        polytope_.add_halfspace(n, 0.0);  // mu_w >= 0
    }
    vertices_ = enumerate_vertices(polytope_);
    polytope_.cached_vertices = vertices_;

    const int n = model.num_derivatives();
    vertex_prices_ = Matrix::Zero(static_cast<int>(vertices_.size()), n);
    for (size_t v = 0; v < vertices_.size(); ++v)
        vertex_prices_.row(v) = (model.payoffs.transpose() * vertices_[v]).transpose();
}

double MarketGeometry::superreplication_price(const TerminalWealth& claim) const {
    if (claim.size() != model_->num_terminals())
        throw DimensionError("superreplication_price: claim length");
    double best = -kInf;
    for (const Vector& v : vertices_) best = std::max(best, v.dot(claim));
    return best;
}

double MarketGeometry::superreplication_price_lp(const TerminalWealth& claim) const {
    const MarketModel& m = *model_;
    const int T = m.num_terminals();
    const int H = static_cast<int>(m.strategy_map.cols());
    // min x  s.t.  x 1 + strategy_map h >= claim
    LinearProgram lp = LinearProgram::make(1 + H);
    lp.objective[0] = 1.0;
    lp.ub_lhs = Matrix::Zero(T, 1 + H);
    lp.ub_rhs = -claim;
    for (int w = 0; w < T; ++w) {
        lp.ub_lhs(w, 0) = -1.0;
        lp.ub_lhs.block(w, 1, 1, H) = -m.strategy_map.row(w);
    }
    LpResult r = solve_lp(lp);
    if (!r.optimal()) throw SolverError("superreplication LP did not solve");
    return r.value;
}

PriceSet MarketGeometry::price_set() const {
    const int n = model_->num_derivatives();
    // dedup vertex prices, then prune points interior to the hull of the rest
    std::vector<Vector> pts;
    for (int v = 0; v < vertex_prices_.rows(); ++v) {
        Vector p = vertex_prices_.row(v).transpose();
        bool dup = false;
        for (const Vector& q : pts)
            if (n == 0 || (q - p).cwiseAbs().maxCoeff() <= 1e-10) { dup = true; break; }
        if (!dup) pts.push_back(p);
    }
    std::vector<Vector> extreme;
    for (size_t i = 0; i < pts.size(); ++i) {
        std::vector<Vector> others;
        for (size_t j = 0; j < pts.size(); ++j)
            if (j != i) others.push_back(pts[j]);
        if (others.empty() || !in_convex_hull(others, pts[i])) extreme.push_back(pts[i]);
    }
    std::sort(extreme.begin(), extreme.end(), [](const Vector& a, const Vector& b) {
        for (int i = 0; i < a.size(); ++i) {
            if (a[i] < b[i] - 1e-12) return true;
            if (a[i] > b[i] + 1e-12) return false;
        }
        return false;
    });
    return PriceSet(model_->martingale_system_lhs(), model_->martingale_system_rhs(),
                    model_->payoffs, std::move(extreme),
                    check_nonreplicability().nonreplicable);
}

bool MarketGeometry::cone_K_contains(double x, const Vector& q, double tol) const {
    if (q.size() != model_->num_derivatives())
        throw DimensionError("cone_K_contains: q length");
    for (int v = 0; v < vertex_prices_.rows(); ++v)
        if (x + vertex_prices_.row(v).dot(q) < -tol) return false;
    return true;
}

bool MarketGeometry::cone_L_contains(double y, const Vector& r, double tol) const {
    if (r.size() != model_->num_derivatives())
        throw DimensionError("cone_L_contains: r length");
    if (y < -tol) return false;
    if (y <= tol) return r.cwiseAbs().maxCoeff() <= tol;  // only the origin
    PriceSet ps = price_set();
    return ps.contains_closure(r / y, tol);
}

MarketGeometry::Position MarketGeometry::largest_feasible_position(
    double x, const Vector& p) const {
    const int n = model_->num_derivatives();
    if (n == 0) throw DimensionError("largest_feasible_position: no derivatives");
    if (p.size() != n) throw DimensionError("largest_feasible_position: p length");

    Polytope poly = Polytope::make(n);
    for (int v = 0; v < vertex_prices_.rows(); ++v) {
        // x - q.p + q.E_v[f] >= 0  <=>  (p - E_v[f]).q <= x
        Vector normal = p - vertex_prices_.row(v).transpose();
        poly.add_halfspace(normal, x);
    }
    if (!polytope_is_bounded(poly))
        throw UnboundedRegionError(
            "largest_feasible_position: unbounded (price outside the closed price set)");

    std::vector<Vector> verts = enumerate_vertices(poly);
    if (verts.empty()) throw SolverError("largest_feasible_position: empty region");
    Position out;
    out.m = -kInf;
    for (const Vector& q : verts) {
        const double norm = q.norm();
        if (norm > out.m + 1e-12 ||
            (norm > out.m - 1e-12 && out.q.size() > 0 && [&] {
                 for (int i = 0; i < q.size(); ++i) {
                     if (q[i] > out.q[i] + 1e-12) return true;
                     if (q[i] < out.q[i] - 1e-12) return false;
                 }
                 return false;
             }())) {
            out.m = norm;
            out.q = q;
        }
    }
    return out;
}

MarketGeometry::Radius MarketGeometry::cone_radius(const Vector& w) const {
    const int n = model_->num_derivatives();
    if (w.size() != n + 1) throw DimensionError("cone_radius: w must live in R^(n+1)");

    Polytope poly = Polytope::make(n + 1);
    for (int v = 0; v < vertex_prices_.rows(); ++v) {
        Vector normal(n + 1);
        normal[0] = -1.0;
        normal.tail(n) = -vertex_prices_.row(v).transpose();
        poly.add_halfspace(normal, 0.0);  // x + q.E_v[f] >= 0
    }
    poly.add_halfspace(w, 1.0);
    if (!polytope_is_bounded(poly))
        throw UnboundedRegionError("cone_radius: unbounded (w not interior to L)");

    std::vector<Vector> verts = enumerate_vertices(poly);
    Radius out;
    out.d = -kInf;
    for (const Vector& v : verts) {
        const double norm = v.norm();
        if (norm > out.d + 1e-12) {
            out.d = norm;
            out.v = v;
        }
    }
    if (out.v.size() == 0) throw SolverError("cone_radius: empty truncated cone");
    return out;
}

Replicability MarketGeometry::check_nonreplicability() const {
    const int n = model_->num_derivatives();
    Replicability out;
    if (n == 0) {
        out.nonreplicable = true;
        out.direction = Vector::Zero(0);
        return out;
    }
    const int V = static_cast<int>(vertices_.size());
    // q replicable iff E_v[q.f] agrees across all extreme measures
    Matrix diffs(std::max(V - 1, 0), n);
    for (int v = 1; v < V; ++v)
        diffs.row(v - 1) = vertex_prices_.row(v) - vertex_prices_.row(0);
    if (diffs.rows() == 0) {
        out.nonreplicable = false;
        out.direction = Vector::Unit(n, 0);
        return out;
    }
    Eigen::FullPivLU<Matrix> lu(diffs);
    lu.setThreshold(1e-10);
    if (static_cast<int>(lu.rank()) == n) {
        out.nonreplicable = true;
        out.direction = Vector::Zero(0);
        return out;
    }
    Matrix kernel = lu.kernel();  // columns span { q : q.f replicable }
    Vector dir = kernel.col(0).normalized();
    // deterministic sign: first nonzero entry positive
    for (int i = 0; i < dir.size(); ++i) {
        if (std::abs(dir[i]) > 1e-12) {
            if (dir[i] < 0) dir = -dir;
            break;
        }
    }
    out.nonreplicable = false;
    out.direction = dir;
    return out;
}

} // namespace semistatic
