#ifndef SEMISTATIC_VERIFY_HPP
#define SEMISTATIC_VERIFY_HPP

#include <optional>
#include <string>
#include <vector>

#include "semistatic/dual.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"
#include "semistatic/types.hpp"
#include "semistatic/utility.hpp"

namespace semistatic {

// One named check: passes iff residual <= tolerance. Skipped checks pass
// with the reason recorded in the note.
struct Check {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string note;
};

struct VerificationReport {
    std::vector<Check> checks;

    void add(const std::string& name, double residual, double tolerance,
             const std::string& note = "");
    void add_skipped(const std::string& name, const std::string& reason);
    void merge(const VerificationReport& other);
    bool all_passed() const;
};

// columns: check,residual,tolerance,pass,note
std::string to_csv(const VerificationReport& report);

// "%.12g" (used everywhere a number is printed, so outputs are byte-stable)
std::string format_number(double v);

struct VerifyOptions {
    PrimalOptions primal;
    DualOptions dual;
    double first_order_tol = 1e-6;
    double consistency_tol = 1e-5;
    double gradient_tol = 1e-4;
    // small enough that truncation stays below gradient_tol even on thin
    // price polytopes, with ample room above the cancellation floor
    double gradient_step = 1e-5;
    double qtol_scale = 1e-6;        // flat-position tolerance 1e-6 (1 + m)
    double bisect_width = 1e-6;      // marginal-price refinement
    int bisect_max_iter = 60;
};

// Theorem 4 item 5: the independently solved dual density matches U'(g) and
// the budget pairing E[h g] = x y. Piecewise utilities check membership of h
// in the marginal subdifferential interval instead.
VerificationReport first_order_check(const MarketModel& m, const UtilityFunction& u,
                                     double x, const Vector& p,
                                     const VerifyOptions& opts = {});

// Theorems 1 and 5: (x - q.p, q) = -grad v(y, y p) via the dual multipliers
// (gradient form for smooth utilities; Fenchel-equality membership for
// piecewise ones, where v is polyhedral and the subdifferential is a face).
VerificationReport optimizer_consistency(const MarketModel& m, const UtilityFunction& u,
                                         double x, const Vector& p,
                                         const VerifyOptions& opts = {});

// Theorem 6: central differences of the value in p against -(dx u) q.
VerificationReport gradient_relation_check(const MarketModel& m, const UtilityFunction& u,
                                           double x, const Vector& p, double step,
                                           const VerifyOptions& opts = {});

// Marginal utility-based prices at (x, q), one derivative: the interval
// [a, b] located by bisection on the sign of q(x + q p, p) - q.
struct MarginalPriceInterval {
    double lo = 0.0;
    double hi = 0.0;
};
MarginalPriceInterval marginal_price_interval(const MarketModel& m,
                                              const UtilityFunction& u, double x,
                                              double q, const VerifyOptions& opts = {});

// Membership test for any number of derivatives: value equality plus local
// minimality of p' -> u-tilde(x + q p', p').
struct MarginalPriceMembership {
    bool member = false;
    double equality_residual = 0.0;
    double local_min_violation = 0.0;
};
MarginalPriceMembership marginal_price_contains(const MarketModel& m,
                                                const UtilityFunction& u, double x,
                                                const Vector& q, const Vector& p,
                                                const VerifyOptions& opts = {});

// One row per grid price; regime +1 / 0 / -1 for buy / flat / sell.
struct SweepRow {
    double p = 0.0;
    double u_tilde = 0.0;
    Vector q_tilde;
    double dx_u = 0.0;
    double m = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    std::vector<int> regime;
    bool flat_located = false;  // a flat stretch sits inside the grid range
    double flat_lo = 0.0, flat_hi = 0.0;  // bisected [a, b] when located
    bool shape_ok = false;
    std::string violation;
    std::vector<bool> divergence_flag;
};

// columns: p,u_tilde,q_tilde_1..n,dx_u,m
std::string to_csv(const SweepReport& report, int n_derivatives);

// Value, position, marginal value and largest feasible position across a
// price grid (one derivative), with the monotone/flat/monotone shape
// classification. Grid points are solved concurrently.
SweepReport sweep_1d(const MarketModel& m, const UtilityFunction& u, double x,
                     double p_lo, double p_hi, int count,
                     const VerifyOptions& opts = {});

struct DivergenceThresholds {
    double value_increase = 5.0;
    double position = 100.0;
    double feasible_position = 100.0;
};

// Trend probe along a price path approaching the boundary: value, |position|
// and largest feasible position must increase strictly over the last five
// points and clear the thresholds. Skipped when U is bounded above.
VerificationReport divergence_probe(const MarketModel& m, const UtilityFunction& u,
                                    double x, const std::vector<double>& price_path,
                                    const DivergenceThresholds& thresholds = {},
                                    const VerifyOptions& opts = {});

// Budget-feasible payoffs pair with dual densities below one; a scaled
// violator is caught by some extreme density.
VerificationReport bipolarity_probe(const MarketModel& m, const Vector& p,
                                    int samples = 100, unsigned seed = 20240817,
                                    const VerifyOptions& opts = {});

// The built-in counter-example: one-sided slopes -4/3 and -2/3 of the value
// in the price at zero, and the midpoint-convexity violation.
VerificationReport s10_counterexample(const VerifyOptions& opts = {});

// Power-utility identity u(x,p) = x^alpha/alpha (-beta v(1,p))^(1-alpha),
// the two sides from the independent primal and dual solvers.
VerificationReport power_identity_check(const MarketModel& m, double alpha, double x,
                                        const Vector& p, const VerifyOptions& opts = {});

// Continuity probe: deviations of (q, g, value, marginal) under perturbations
// of (x, p) shrink monotonically with the radius.
VerificationReport stability_probe(const MarketModel& m, const UtilityFunction& u,
                                   double x, const Vector& p,
                                   const std::vector<double>& radii =
                                       {1e-2, 1e-3, 1e-4, 1e-5, 1e-6},
                                   int directions = 20, unsigned seed = 71,
                                   const VerifyOptions& opts = {});

// min over y of v-tilde(y, p) + x y, located by bisection on the
// y-derivative of the dual value; independent of the primal path.
double dual_conjugate_value(const MarketModel& m, const UtilityFunction& u, double x,
                            const Vector& p, const VerifyOptions& opts = {});

// Everything applicable to (market, utility, x, p), assembled in one report.
VerificationReport run_verification_suite(const MarketModel& m, const UtilityFunction& u,
                                          double x, const std::optional<Vector>& p,
                                          const VerifyOptions& opts = {});

} // namespace semistatic

#endif
