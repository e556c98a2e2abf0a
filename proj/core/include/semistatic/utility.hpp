#ifndef SEMISTATIC_UTILITY_HPP
#define SEMISTATIC_UTILITY_HPP

#include <span>
#include <string>
#include <vector>

#include "semistatic/types.hpp"

namespace semistatic {

// Utility on (0, inf), extended with U(x) = -inf for x < 0 and
// U(0) = lim_{x->0+} U(x).
//
//   log:              U(x) = ln x
//   power(alpha):     U(x) = x^alpha / alpha,  alpha < 1, alpha != 0
//   piecewise_linear: concave, increasing, strictly decreasing positive
//                     slopes; slope[i] applies on [breakpoint[i],
//                     breakpoint[i+1]) with breakpoint[0] == 0, anchored by
//                     U(anchor_x) = anchor_value.
//
// log and power satisfy the Inada conditions; piecewise_linear does not and
// is routed to the LP solver path only.
class UtilityFunction {
  public:
    enum class Kind { Log, Power, PiecewiseLinear };

    static UtilityFunction log_utility();
    static UtilityFunction power(double alpha);
    static UtilityFunction piecewise_linear(std::vector<double> breakpoints,
                                            std::vector<double> slopes,
                                            double anchor_x, double anchor_value);
    // the counter-example utility: slopes 1e6 | 1000 | 1 | 1e-3 | 1e-6 on
    // [0,1/2) | [1/2,1) | [1,3) | [3,4) | [4,inf), anchored by U(1) = 0
    static UtilityFunction builtin_s10();

    Kind kind() const { return kind_; }
    bool inada() const { return kind_ != Kind::PiecewiseLinear; }
    double alpha() const { return alpha_; }
    double beta() const;  // alpha / (alpha - 1), power only
    std::string description() const;

    // U(x); returns -inf for x < 0
    double value(double x) const;
    // U'(x) for x > 0 (left slope at piecewise kinks); throws
    // std::domain_error at x <= 0 for Inada kinds
    double marginal(double x) const;
    // U''(x), smooth kinds only
    double second(double x) const;
    // V(y) = sup_x (U(x) - xy); throws std::domain_error for y <= 0
    double conjugate(double y) const;
    // V'(y), smooth kinds only
    double conjugate_derivative(double y) const;
    // V''(y), smooth kinds only
    double conjugate_second(double y) const;
    // I(y) = (U')^{-1}(y); smallest maximizer of U(x) - xy for piecewise
    double inverse_marginal(double y) const;

    double value_at_zero() const;      // U(0+)
    double conjugate_at_zero() const;  // V(0+) = U(inf)
    bool unbounded_above() const;      // U(inf) = inf

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& slopes() const { return slopes_; }
    // U at each breakpoint (piecewise kind)
    const std::vector<double>& breakpoint_values() const { return values_; }

  private:
    UtilityFunction() = default;

    Kind kind_ = Kind::Log;
    double alpha_ = 0.0;
    std::vector<double> breakpoints_;
    std::vector<double> slopes_;
    std::vector<double> values_;
};

// max_x |U(x) - min_y (V(y) + xy)| over the sample points, the y-grid
// refined until the residual stabilizes.
double bidual_check(const UtilityFunction& u, std::span<const double> xs);

// Same residual on an explicit y-grid.
double bidual_residual(const UtilityFunction& u, double x, std::span<const double> ys);

} // namespace semistatic

#endif
