#ifndef SEMISTATIC_POLYTOPE_HPP
#define SEMISTATIC_POLYTOPE_HPP

#include <optional>
#include <vector>

#include "semistatic/lp.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

// normal . x <= offset
struct Halfspace {
    Vector normal;
    double offset = 0.0;
};

// Halfspace description, optionally with an explicit affine equality block
// E x = e (kept separate so vertex enumeration only has to choose
// dim - rank(E) active inequalities).
struct Polytope {
    int dim = 0;
    std::vector<Halfspace> halfspaces;
    Matrix eq_lhs;  // may have zero rows
    Vector eq_rhs;
    std::optional<std::vector<Vector>> cached_vertices;

    static Polytope make(int dim);
    void add_halfspace(const Vector& normal, double offset);
    // box constraints lo <= x_i <= hi for every coordinate
    static Polytope box(const Vector& lo, const Vector& hi);
};

struct VertexEnumOptions {
    double feas_tol = 1e-9;
    double dedup_tol = 1e-7;
    int dim_cap = 12;
    long combination_cap = 2'000'000;  // guard on basis subsets
};

// Bounded in every +-coordinate direction (checked with LPs).
bool polytope_is_bounded(const Polytope& poly, const LpOptions& lp_opts = {});

// Extreme points by basis enumeration with active-set dedup. Results are
// sorted lexicographically. Throws UnboundedRegionError if the region is
// unbounded and DimensionError above the dimension cap.
std::vector<Vector> enumerate_vertices(const Polytope& poly,
                                       const VertexEnumOptions& opts = {});

// True if x is a convex combination of the given points (LP feasibility);
// used by tests to round-trip enumerated vertices.
bool in_convex_hull(const std::vector<Vector>& points, const Vector& x,
                    double tol = 1e-8);

} // namespace semistatic

#endif
