#ifndef SEMISTATIC_GEOMETRY_HPP
#define SEMISTATIC_GEOMETRY_HPP

#include <utility>
#include <vector>

#include "semistatic/market.hpp"
#include "semistatic/polytope.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

// Consistent-price polytope { E_Q[f] : Q martingale measure }, carrying the
// moment system it needs for membership tests. Self-contained value type.
class PriceSet {
  public:
    PriceSet(Matrix mart_lhs, Vector mart_rhs, Matrix payoffs,
             std::vector<Vector> vertices, bool open);

    int dim() const { return static_cast<int>(payoffs_.cols()); }
    // extreme points of the closure
    const std::vector<Vector>& vertices() const { return vertices_; }
    // componentwise bounds of the closure; for one derivative this is the
    // closed price interval
    const Vector& lower() const { return lo_; }
    const Vector& upper() const { return hi_; }
    // true iff the relative interior is open in R^n (no replicable basket)
    bool open() const { return open_; }

    // p attainable by some martingale measure (closure membership)
    bool contains_closure(const Vector& p, double tol = 1e-9) const;
    // p attainable by an equivalent (strictly positive) martingale measure;
    // this is the arbitrage-free price set itself
    bool contains(const Vector& p, double strict_tol = 1e-10) const;
    // full-dimensional interior membership
    bool contains_interior(const Vector& p, double strict_tol = 1e-10) const;

  private:
    Matrix mart_lhs_;  // mass row + martingale rows over terminal measures
    Vector mart_rhs_;
    Matrix payoffs_;   // #terminals x n
    std::vector<Vector> vertices_;
    Vector lo_, hi_;
    bool open_ = false;
};

struct Replicability {
    bool nonreplicable = false;  // true iff no nonzero basket is replicable
    Vector direction;            // a replicable basket direction when false
};

// Convex-geometric views of one market: the martingale polytope and its
// vertices (computed once), superreplication, the cones K and L, the
// largest feasible position m, and the truncated-cone radius d.
class MarketGeometry {
  public:
    explicit MarketGeometry(const MarketModel& model);

    const MarketModel& model() const { return *model_; }
    const Polytope& martingale_polytope() const { return polytope_; }
    // extreme martingale measures as terminal-node weights
    const std::vector<Vector>& martingale_vertices() const { return vertices_; }
    // E_v[f] per martingale vertex, one row per vertex
    const Matrix& vertex_prices() const { return vertex_prices_; }

    // sup_Q E_Q[claim]; equals the least initial capital whose attainable
    // wealth dominates the claim
    double superreplication_price(const TerminalWealth& claim) const;
    // dual route via the hedging LP (min x s.t. x + (H.S)_T >= claim);
    // exercised by tests against the vertex route
    double superreplication_price_lp(const TerminalWealth& claim) const;

    PriceSet price_set() const;

    // (x, q) admits a strategy with x + (H.S)_T + q.f >= 0
    bool cone_K_contains(double x, const Vector& q, double tol = 1e-9) const;
    // (y, r) in the polar cone of -K
    bool cone_L_contains(double y, const Vector& r, double tol = 1e-9) const;

    // m(x, p) = max |q| over { q : x - q.p + q.E_Q[f] >= 0 for all Q },
    // with an attaining position. Throws UnboundedRegionError when p is
    // outside the closed price set.
    struct Position {
        double m = 0.0;
        Vector q;
    };
    Position largest_feasible_position(double x, const Vector& p) const;

    // d(w) = max{ |v| : v in K, v.w <= 1 } with the attaining point.
    // Throws UnboundedRegionError when w is not interior to L.
    struct Radius {
        double d = 0.0;
        Vector v;
    };
    Radius cone_radius(const Vector& w) const;

    Replicability check_nonreplicability() const;

  private:
    const MarketModel* model_;
    Polytope polytope_;
    std::vector<Vector> vertices_;
    Matrix vertex_prices_;  // V x n
};

} // namespace semistatic

#endif
