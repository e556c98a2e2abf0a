#include "semistatic/utility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semistatic {

UtilityFunction UtilityFunction::log_utility() {
    UtilityFunction u;
    u.kind_ = Kind::Log;
    return u;
}

UtilityFunction UtilityFunction::power(double alpha) {
    if (!(alpha < 1.0) || alpha == 0.0 || !std::isfinite(alpha))
        throw std::invalid_argument("power utility requires alpha < 1, alpha != 0");
    UtilityFunction u;
    u.kind_ = Kind::Power;
    u.alpha_ = alpha;
    return u;
}

UtilityFunction UtilityFunction::piecewise_linear(std::vector<double> breakpoints,
                                                  std::vector<double> slopes,
                                                  double anchor_x, double anchor_value) {
    if (breakpoints.size() != slopes.size() || breakpoints.empty())
        throw std::invalid_argument("piecewise utility: need matching breakpoint/slope lists");
    if (breakpoints.front() != 0.0)
        throw std::invalid_argument("piecewise utility: first breakpoint must be 0");
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("piecewise utility: breakpoints must increase");
    for (size_t i = 0; i < slopes.size(); ++i) {
        if (!(slopes[i] > 0.0))
            throw std::invalid_argument("piecewise utility: slopes must be positive");
        if (i + 1 < slopes.size() && !(slopes[i] > slopes[i + 1]))
            throw std::invalid_argument("piecewise utility: slopes must strictly decrease");
    }
    UtilityFunction u;
    u.kind_ = Kind::PiecewiseLinear;
    u.breakpoints_ = std::move(breakpoints);
    u.slopes_ = std::move(slopes);

    // values at breakpoints from U(anchor_x) = anchor_value
    const size_t K = u.breakpoints_.size();
    u.values_.assign(K, 0.0);
    for (size_t i = 1; i < K; ++i)
        u.values_[i] = u.values_[i - 1] +
                       u.slopes_[i - 1] * (u.breakpoints_[i] - u.breakpoints_[i - 1]);
    // evaluate the un-anchored function at anchor_x, then shift
    double at_anchor;
    {
        size_t seg = K - 1;
        for (size_t i = 0; i + 1 < K; ++i)
            if (anchor_x < u.breakpoints_[i + 1]) { seg = i; break; }
        at_anchor = u.values_[seg] + u.slopes_[seg] * (anchor_x - u.breakpoints_[seg]);
    }
    const double shift = anchor_value - at_anchor;
    for (double& v : u.values_) v += shift;
    return u;
}

UtilityFunction UtilityFunction::builtin_s10() {
    return piecewise_linear({0.0, 0.5, 1.0, 3.0, 4.0},
                            {1e6, 1000.0, 1.0, 1e-3, 1e-6}, 1.0, 0.0);
}

double UtilityFunction::beta() const {
    if (kind_ != Kind::Power) throw std::logic_error("beta: power utility only");
    return alpha_ / (alpha_ - 1.0);
}

std::string UtilityFunction::description() const {
    switch (kind_) {
        case Kind::Log: return "log";
        case Kind::Power: return "power(" + std::to_string(alpha_) + ")";
        case Kind::PiecewiseLinear:
            return "pwl(" + std::to_string(breakpoints_.size()) + " segments)";
    }
    return "?";
}

double UtilityFunction::value(double x) const {
    if (x < 0.0) return -kInf;
    switch (kind_) {
        case Kind::Log:
            return x == 0.0 ? -kInf : std::log(x);
        case Kind::Power:
            if (x == 0.0) return alpha_ > 0.0 ? 0.0 : -kInf;
            return std::pow(x, alpha_) / alpha_;
        case Kind::PiecewiseLinear: {
            size_t seg = breakpoints_.size() - 1;
            for (size_t i = 0; i + 1 < breakpoints_.size(); ++i)
                if (x < breakpoints_[i + 1]) { seg = i; break; }
            return values_[seg] + slopes_[seg] * (x - breakpoints_[seg]);
        }
    }
    return 0.0;
}

double UtilityFunction::marginal(double x) const {
    switch (kind_) {
        case Kind::Log:
            if (x <= 0.0) throw std::domain_error("marginal: x must be > 0");
            return 1.0 / x;
        case Kind::Power:
            if (x <= 0.0) throw std::domain_error("marginal: x must be > 0");
            return std::pow(x, alpha_ - 1.0);
        case Kind::PiecewiseLinear: {
            if (x < 0.0) throw std::domain_error("marginal: x must be >= 0");
            // left slope at a kink
            size_t seg = breakpoints_.size() - 1;
            for (size_t i = 0; i + 1 < breakpoints_.size(); ++i)
                if (x <= breakpoints_[i + 1]) { seg = i; break; }
            return slopes_[seg];
        }
    }
    return 0.0;
}

double UtilityFunction::second(double x) const {
    switch (kind_) {
        case Kind::Log:
            return -1.0 / (x * x);
        case Kind::Power:
            return (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
        case Kind::PiecewiseLinear:
            throw std::logic_error("second: not defined for piecewise utilities");
    }
    return 0.0;
}

double UtilityFunction::conjugate(double y) const {
    if (y <= 0.0) throw std::domain_error("conjugate: y must be > 0");
    switch (kind_) {
        case Kind::Log:
            return -std::log(y) - 1.0;
        case Kind::Power: {
            const double b = beta();
            return -std::pow(y, b) / b;
        }
        case Kind::PiecewiseLinear: {
            if (y < slopes_.back()) return kInf;
            double best = -kInf;
            for (size_t i = 0; i < breakpoints_.size(); ++i)
                best = std::max(best, values_[i] - breakpoints_[i] * y);
            return best;
        }
    }
    return 0.0;
}

double UtilityFunction::conjugate_derivative(double y) const {
    return -inverse_marginal(y);
}

double UtilityFunction::conjugate_second(double y) const {
    switch (kind_) {
        case Kind::Log:
            return 1.0 / (y * y);
        case Kind::Power: {
            const double b = beta();
            return (1.0 - b) * std::pow(y, b - 2.0);
        }
        case Kind::PiecewiseLinear:
            throw std::logic_error("conjugate_second: not defined for piecewise utilities");
    }
    return 0.0;
}

double UtilityFunction::inverse_marginal(double y) const {
    if (y <= 0.0) throw std::domain_error("inverse_marginal: y must be > 0");
    switch (kind_) {
        case Kind::Log:
            return 1.0 / y;
        case Kind::Power:
            return std::pow(y, 1.0 / (alpha_ - 1.0));
        case Kind::PiecewiseLinear: {
            if (y < slopes_.back()) return kInf;
            if (y >= slopes_.front()) return 0.0;
            // smallest maximizer of U(x) - xy: the breakpoint after the last
            // segment whose slope still exceeds y
            size_t i = breakpoints_.size() - 1;
            while (i > 0 && !(y < slopes_[i - 1])) --i;
            return breakpoints_[i];
        }
    }
    return 0.0;
}

double UtilityFunction::value_at_zero() const {
    return value(0.0);
}

double UtilityFunction::conjugate_at_zero() const {
    if (unbounded_above()) return kInf;
    return 0.0;  // power alpha < 0: sup U = 0
}

bool UtilityFunction::unbounded_above() const {
    switch (kind_) {
        case Kind::Log: return true;
        case Kind::Power: return alpha_ > 0.0;
        case Kind::PiecewiseLinear: return true;  // slopes stay positive
    }
    return false;
}

double bidual_residual(const UtilityFunction& u, double x, std::span<const double> ys) {
    double best = kInf;
    for (double y : ys) best = std::min(best, u.conjugate(y) + x * y);
    return std::abs(u.value(x) - best);
}

double bidual_check(const UtilityFunction& u, std::span<const double> xs) {
    // log-spaced grid over a range wide enough to bracket U'(x) for every x
    double ylo = 1e-6, yhi = 1e6;
    if (u.kind() == UtilityFunction::Kind::PiecewiseLinear) {
        ylo = 0.9 * u.slopes().back();
        yhi = 1.1 * u.slopes().front();
    }
    double prev = kInf;
    int npts = 10000;
    for (int round = 0; round < 5; ++round) {
        std::vector<double> ys(npts);
        const double l0 = std::log(ylo), l1 = std::log(yhi);
        for (int i = 0; i < npts; ++i)
            ys[i] = std::exp(l0 + (l1 - l0) * i / double(npts - 1));
        double res = 0.0;
        for (double x : xs) res = std::max(res, bidual_residual(u, x, ys));
        if (std::abs(res - prev) < 1e-9) return res;
        prev = res;
        npts *= 2;
    }
    return prev;
}

} // namespace semistatic
