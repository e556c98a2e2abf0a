#include "semistatic/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "semistatic/errors.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/lp.hpp"
#include "semistatic/polytope.hpp"
#include "semistatic/threading.hpp"

namespace semistatic {

void VerificationReport::add(const std::string& name, double residual, double tolerance,
                             const std::string& note) {
    checks.push_back({name, residual, tolerance, residual <= tolerance, note});
}

void VerificationReport::add_skipped(const std::string& name, const std::string& reason) {
    checks.push_back({name, 0.0, 0.0, true, "skipped: " + reason});
}

void VerificationReport::merge(const VerificationReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

bool VerificationReport::all_passed() const {
    for (const Check& c : checks)
        if (!c.passed) return false;
    return true;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace

std::string to_csv(const VerificationReport& report) {
    std::ostringstream out;
    out << "check,residual,tolerance,pass,note\n";
    for (const Check& c : report.checks) {
        out << csv_escape(c.name) << ',' << format_number(c.residual) << ','
            << format_number(c.tolerance) << ',' << (c.passed ? 1 : 0) << ','
            << csv_escape(c.note) << '\n';
    }
    return out.str();
}

std::string to_csv(const SweepReport& report, int n_derivatives) {
    std::ostringstream out;
    out << "p,u_tilde";
    for (int j = 1; j <= n_derivatives; ++j) out << ",q_tilde_" << j;
    out << ",dx_u,m\n";
    for (const SweepRow& r : report.rows) {
        out << format_number(r.p) << ',' << format_number(r.u_tilde);
        for (int j = 0; j < n_derivatives; ++j) out << ',' << format_number(r.q_tilde[j]);
        out << ',' << format_number(r.dx_u) << ',' << format_number(r.m) << '\n';
    }
    return out.str();
}

namespace {

// right-hand slope of a piecewise utility at g (left slope is marginal())
double right_slope(const UtilityFunction& u, double g) {
    const auto& bps = u.breakpoints();
    const auto& slopes = u.slopes();
    size_t seg = bps.size() - 1;
    for (size_t i = 0; i + 1 < bps.size(); ++i)
        if (g < bps[i + 1]) { seg = i; break; }
    return slopes[seg];
}

} // namespace

VerificationReport first_order_check(const MarketModel& m, const UtilityFunction& u,
                                     double x, const Vector& p,
                                     const VerifyOptions& opts) {
    VerificationReport rep;
    PrimalSolution ps = solve_u_tilde(m, u, x, p, opts.primal);
    if (ps.status != PrimalStatus::Interior && u.inada()) {
        rep.add_skipped("first_order.marginal_density", "primal optimizer not interior");
        return rep;
    }
    const double ytilde = ps.marginal_value;
    DualSolution ds = solve_v_tilde(m, u, ytilde, p, opts.dual);
    if (ds.status != DualStatus::Optimal) {
        rep.add("first_order.dual_solved", 1.0, 0.0, "dual infeasible at the primal marginal");
        return rep;
    }
    const Vector& P = m.probabilities();

    if (u.inada()) {
        double res = 0.0;
        for (int w = 0; w < m.num_terminals(); ++w)
            res = std::max(res, std::abs(ds.density[w] - u.marginal(ps.g[w])));
        rep.add("first_order.marginal_density", res, opts.first_order_tol);
    } else {
        // kink handling: h must land in [U'(g+), U'(g-)]; at a payoff pinned
        // to zero the interval is unbounded above
        double res = 0.0;
        for (int w = 0; w < m.num_terminals(); ++w) {
            const double lo = right_slope(u, ps.g[w]);
            const double hi =
                ps.g[w] <= opts.primal.feas_tol ? kInf : u.marginal(ps.g[w]);
            const double h = ds.density[w];
            res = std::max(res, lo - h);
            if (hi < kInf) res = std::max(res, h - hi);
        }
        rep.add("first_order.subdifferential_interval", std::max(res, 0.0),
                opts.first_order_tol, "piecewise: interval membership at kinks");
    }
    const double pairing = P.dot(ds.density.cwiseProduct(ps.g));
    rep.add("first_order.budget_pairing", std::abs(pairing - x * ytilde),
            opts.first_order_tol);
    return rep;
}

VerificationReport optimizer_consistency(const MarketModel& m, const UtilityFunction& u,
                                         double x, const Vector& p,
                                         const VerifyOptions& opts) {
    VerificationReport rep;
    MarketGeometry geo(m);
    std::string note;
    if (!geo.check_nonreplicability().nonreplicable)
        note = "non-unique position: a replicable basket exists";

    PrimalSolution ps = solve_u_tilde(m, u, x, p, opts.primal);
    const double ytilde = ps.marginal_value;
    DualSolution ds = solve_v_tilde(m, u, ytilde, p, opts.dual);
    if (ds.status != DualStatus::Optimal) {
        rep.add("optimizer_consistency.dual_solved", 1.0, 0.0,
                "dual infeasible at the primal marginal");
        return rep;
    }
    const Vector& q = ps.static_position;

    if (u.inada()) {
        double res = std::abs((x - q.dot(p)) + ds.dv_dy);
        for (int j = 0; j < q.size(); ++j)
            res = std::max(res, std::abs(q[j] + ds.dv_dr[j]));
        rep.add("optimizer_consistency.gradient", res, opts.consistency_tol, note);
    } else {
        // polyhedral dual value function: check Fenchel equality of both the
        // primal optimizer and the reported multiplier point
        const double y = ytilde;
        const Vector r = ytilde * p;
        const double xhat = x - q.dot(p);
        const double lhs = ps.value - xhat * y - q.dot(r);
        rep.add("optimizer_consistency.primal_in_subdifferential",
                std::abs(lhs - ds.value) / (1.0 + std::abs(ds.value)),
                opts.consistency_tol, note.empty() ? "piecewise membership form" : note);
        PrimalSolution at_mult = solve_u(m, u, -ds.dv_dy, Vector(-ds.dv_dr), opts.primal);
        const double rhs = at_mult.value + ds.dv_dy * y + ds.dv_dr.dot(r);
        rep.add("optimizer_consistency.multiplier_in_subdifferential",
                std::abs(rhs - ds.value) / (1.0 + std::abs(ds.value)),
                opts.consistency_tol, "piecewise membership form");
    }
    return rep;
}

VerificationReport gradient_relation_check(const MarketModel& m, const UtilityFunction& u,
                                           double x, const Vector& p, double step,
                                           const VerifyOptions& opts) {
    VerificationReport rep;
    if (!u.inada()) {
        rep.add_skipped("gradient_relation", "piecewise utility: value kinks in p");
        return rep;
    }
    PrimalSolution base = solve_u_tilde(m, u, x, p, opts.primal);
    const double u0 = base.value;
    double res = 0.0;
    bool skipped_kink = false;
    for (int j = 0; j < p.size(); ++j) {
        Vector pf = p, pb = p;
        pf[j] += step;
        pb[j] -= step;
        const double uf = solve_u_tilde(m, u, x, pf, opts.primal).value;
        const double ub = solve_u_tilde(m, u, x, pb, opts.primal).value;
        const double fwd = (uf - u0) / step;
        const double bwd = (u0 - ub) / step;
        if (std::abs(fwd - bwd) > 0.05 * (1.0 + std::abs(fwd) + std::abs(bwd))) {
            skipped_kink = true;
            continue;
        }
        const double central = (uf - ub) / (2.0 * step);
        const double target = -base.marginal_value * base.static_position[j];
        res = std::max(res, std::abs(central - target));
    }
    rep.add("gradient_relation.central_difference", res,
            std::max(opts.gradient_tol, step * step * 100.0),
            skipped_kink ? "one or more components skipped near a detected kink" : "");
    return rep;
}

namespace {

double flat_tolerance(const MarketGeometry& geo, double qtol_scale, double x, double p) {
    const double m = geo.largest_feasible_position(x, Vector::Constant(1, p)).m;
    return qtol_scale * (1.0 + m);
}

} // namespace

MarginalPriceInterval marginal_price_interval(const MarketModel& m,
                                              const UtilityFunction& u, double x,
                                              double q, const VerifyOptions& opts) {
    if (m.num_derivatives() != 1)
        throw DimensionError("marginal_price_interval: needs exactly one derivative");
    MarketGeometry geo(m);
    PriceSet ps = geo.price_set();
    const double lo = ps.lower()[0], hi = ps.upper()[0];
    const double margin = 1e-4 * (hi - lo);
    const double pl = lo + margin, ph = hi - margin;

    PrimalSolution base = solve_u(m, u, x, Vector::Constant(1, q), opts.primal);
    if (base.value == -kInf)
        throw std::domain_error("marginal_price_interval: endowment has no finite value");

    auto excess = [&](double p) {
        PrimalSolution s =
            solve_u_tilde(m, u, x + q * p, Vector::Constant(1, p), opts.primal);
        return s.static_position[0] - q;
    };
    auto qtol = [&](double p) {
        return flat_tolerance(geo, opts.qtol_scale, x + q * p, p);
    };

    // a: where the excess demand stops being positive
    double a;
    if (excess(pl) <= qtol(pl)) {
        a = pl;
    } else {
        double left = pl, right = ph;
        for (int i = 0; i < opts.bisect_max_iter && right - left > opts.bisect_width; ++i) {
            const double mid = 0.5 * (left + right);
            if (excess(mid) > qtol(mid))
                left = mid;
            else
                right = mid;
        }
        a = 0.5 * (left + right);
    }
    // b: where it starts being negative
    double b;
    if (excess(ph) >= -qtol(ph)) {
        b = ph;
    } else {
        double left = pl, right = ph;
        for (int i = 0; i < opts.bisect_max_iter && right - left > opts.bisect_width; ++i) {
            const double mid = 0.5 * (left + right);
            if (excess(mid) < -qtol(mid))
                right = mid;
            else
                left = mid;
        }
        b = 0.5 * (left + right);
    }
    return {a, b};
}

MarginalPriceMembership marginal_price_contains(const MarketModel& m,
                                                const UtilityFunction& u, double x,
                                                const Vector& q, const Vector& p,
                                                const VerifyOptions& opts) {
    if (m.num_derivatives() == 0)
        throw DimensionError("marginal_price_contains: no derivatives");
    MarginalPriceMembership out;
    PrimalSolution base = solve_u(m, u, x, q, opts.primal);
    if (base.value == -kInf)
        throw std::domain_error("marginal_price_contains: endowment has no finite value");
    PrimalSolution tilted = solve_u_tilde(m, u, x + q.dot(p), p, opts.primal);
    out.equality_residual = std::abs(tilted.value - base.value);

    // necessary condition: p locally minimizes p' -> u-tilde(x + q p', p')
    const double step = 1e-3;
    double worst = 0.0;
    for (int j = 0; j < p.size(); ++j) {
        for (double s : {step, -step}) {
            Vector pp = p;
            pp[j] += s;
            try {
                const double v =
                    solve_u_tilde(m, u, x + q.dot(pp), pp, opts.primal).value;
                worst = std::max(worst, tilted.value - v);
            } catch (const ArbitrageError&) {
                // stepped outside the price set: nothing to compare
            }
        }
    }
    out.local_min_violation = worst;
    const double scale = 1.0 + std::abs(base.value);
    out.member = out.equality_residual <= 1e-6 * scale &&
                 out.local_min_violation <= 1e-6 * scale;
    return out;
}

SweepReport sweep_1d(const MarketModel& m, const UtilityFunction& u, double x,
                     double p_lo, double p_hi, int count, const VerifyOptions& opts) {
    if (m.num_derivatives() != 1)
        throw DimensionError("sweep_1d: needs exactly one derivative");
    if (count < 2 || !(p_lo < p_hi)) throw std::invalid_argument("sweep_1d: bad grid");
    MarketGeometry geo(m);
    PriceSet ps = geo.price_set();
    if (!ps.contains(Vector::Constant(1, p_lo)) || !ps.contains(Vector::Constant(1, p_hi)))
        throw ArbitrageError("sweep_1d: grid endpoints must be arbitrage-free prices");

    SweepReport rep;
    rep.rows.resize(count);
    parallel_for(count, [&](int i) {
        const double p = p_lo + (p_hi - p_lo) * i / (count - 1);
        PrimalSolution s = solve_u_tilde(m, u, x, Vector::Constant(1, p), opts.primal);
        SweepRow row;
        row.p = p;
        row.u_tilde = s.value;
        row.q_tilde = s.static_position;
        row.dx_u = s.marginal_value;
        row.m = geo.largest_feasible_position(x, Vector::Constant(1, p)).m;
        rep.rows[i] = row;
    });

    rep.regime.resize(count);
    rep.divergence_flag.resize(count);
    for (int i = 0; i < count; ++i) {
        const double qtol = opts.qtol_scale * (1.0 + rep.rows[i].m);
        const double q = rep.rows[i].q_tilde[0];
        rep.regime[i] = q > qtol ? 1 : (q < -qtol ? -1 : 0);
        rep.divergence_flag[i] = rep.rows[i].m > 1e3 * x || std::abs(q) > 1e3 * x;
    }

    // regimes must run buy -> flat -> sell
    rep.shape_ok = true;
    for (int i = 1; i < count && rep.shape_ok; ++i) {
        if (rep.regime[i] > rep.regime[i - 1]) {
            rep.shape_ok = false;
            rep.violation =
                "position regime increases at p = " + format_number(rep.rows[i].p);
        }
    }
    // value monotone within each regime
    for (int i = 1; i < count && rep.shape_ok; ++i) {
        const double du = rep.rows[i].u_tilde - rep.rows[i - 1].u_tilde;
        const double tol = 1e-10 * (1.0 + std::abs(rep.rows[i].u_tilde));
        if (rep.regime[i] == 1 && rep.regime[i - 1] == 1 && du > tol) {
            rep.shape_ok = false;
            rep.violation = "value not decreasing on the buy side at p = " +
                            format_number(rep.rows[i].p);
        }
        if (rep.regime[i] == -1 && rep.regime[i - 1] == -1 && du < -tol) {
            rep.shape_ok = false;
            rep.violation = "value not increasing on the sell side at p = " +
                            format_number(rep.rows[i].p);
        }
        if (rep.regime[i] == 0 && rep.regime[i - 1] == 0 &&
            std::abs(du) > 1e-9 * (1.0 + std::abs(rep.rows[i].u_tilde))) {
            rep.shape_ok = false;
            rep.violation = "value not flat on the flat stretch at p = " +
                            format_number(rep.rows[i].p);
        }
    }

    // locate [a, b] by bisection when the flat stretch lies inside the range
    const bool has_buy = rep.regime.front() == 1;
    const bool has_sell = rep.regime.back() == -1;
    if (rep.shape_ok && has_buy && has_sell) {
        MarginalPriceInterval iv = marginal_price_interval(m, u, x, 0.0, opts);
        rep.flat_located = true;
        rep.flat_lo = iv.lo;
        rep.flat_hi = iv.hi;
    }
    return rep;
}

VerificationReport divergence_probe(const MarketModel& m, const UtilityFunction& u,
                                    double x, const std::vector<double>& price_path,
                                    const DivergenceThresholds& thresholds,
                                    const VerifyOptions& opts) {
    VerificationReport rep;
    if (!u.unbounded_above()) {
        rep.add_skipped("divergence", "utility bounded above: U(inf) < inf");
        return rep;
    }
    if (m.num_derivatives() != 1)
        throw DimensionError("divergence_probe: needs exactly one derivative");
    if (price_path.size() < 2) throw std::invalid_argument("divergence_probe: short path");

    MarketGeometry geo(m);
    std::vector<double> values, positions, feasibles;
    for (double p : price_path) {
        PrimalSolution s = solve_u_tilde(m, u, x, Vector::Constant(1, p), opts.primal);
        values.push_back(s.value);
        positions.push_back(std::abs(s.static_position[0]));
        feasibles.push_back(geo.largest_feasible_position(x, Vector::Constant(1, p)).m);
    }
    const size_t k0 = values.size() > 5 ? values.size() - 5 : 1;
    auto monotone_violation = [&](const std::vector<double>& v) {
        double worst = 0.0;
        for (size_t i = std::max<size_t>(k0, 1); i < v.size(); ++i)
            worst = std::max(worst, v[i - 1] - v[i]);
        return worst;
    };
    rep.add("divergence.value_monotone", monotone_violation(values), 0.0);
    rep.add("divergence.position_monotone", monotone_violation(positions), 0.0);
    rep.add("divergence.feasible_monotone", monotone_violation(feasibles), 0.0);
    rep.add("divergence.value_growth",
            std::max(0.0, thresholds.value_increase - (values.back() - values.front())),
            0.0, "final value " + format_number(values.back()));
    rep.add("divergence.position_threshold",
            std::max(0.0, thresholds.position - positions.back()), 0.0,
            "final |q| " + format_number(positions.back()));
    rep.add("divergence.feasible_threshold",
            std::max(0.0, thresholds.feasible_position - feasibles.back()), 0.0,
            "final m " + format_number(feasibles.back()));
    return rep;
}

VerificationReport bipolarity_probe(const MarketModel& m, const Vector& p, int samples,
                                    unsigned seed, const VerifyOptions&) {
    VerificationReport rep;
    const int T = m.num_terminals();
    const int n = m.num_derivatives();
    const Vector& P = m.probabilities();

    // extreme densities of the pinned measure polytope
    Polytope poly = Polytope::make(T);
    poly.eq_lhs = Matrix(1 + m.martingale_rows().rows() + n, T);
    poly.eq_lhs.row(0) = Eigen::RowVectorXd::Ones(T);
    if (m.martingale_rows().rows() > 0)
        poly.eq_lhs.middleRows(1, m.martingale_rows().rows()) = m.martingale_rows();
    if (n > 0) poly.eq_lhs.bottomRows(n) = m.payoffs.transpose();
    poly.eq_rhs = Vector::Zero(poly.eq_lhs.rows());
    poly.eq_rhs[0] = 1.0;
    if (n > 0) poly.eq_rhs.tail(n) = p;
    for (int w = 0; w < T; ++w) {
        Vector nrm = Vector::Zero(T);
        nrm[w] = -1.0;
        poly.add_halfspace(nrm, 0.0);
    }
    std::vector<Vector> mu_vertices = enumerate_vertices(poly);
    if (mu_vertices.empty()) {
        rep.add("bipolarity.pinned_polytope_nonempty", 1.0, 0.0, "no pinned measure");
        return rep;
    }
    std::vector<Vector> densities;
    for (const Vector& mu : mu_vertices) densities.push_back(mu.cwiseQuotient(P));

    // payoff directions available at unit wealth
    Matrix A(T, n + m.strategy_map.cols());
    for (int j = 0; j < n; ++j)
        A.col(j) = m.payoffs.col(j) - Vector::Constant(T, p[j]);
    A.rightCols(m.strategy_map.cols()) = m.strategy_map;

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    auto sample_payoff = [&](bool full_budget) {
        Vector z(A.cols());
        for (int i = 0; i < z.size(); ++i) z[i] = unif(rng);
        Vector g = Vector::Ones(T) + A * z;
        int guard = 0;
        while (g.minCoeff() < 0.0 && guard++ < 300) {
            z *= 0.7;
            g = Vector::Ones(T) + A * z;
        }
        if (!full_budget) g *= unit(rng);
        return g;
    };
    auto sample_density = [&]() {
        Vector lambda(static_cast<int>(densities.size()));
        for (int i = 0; i < lambda.size(); ++i) lambda[i] = unit(rng);
        lambda /= lambda.sum();
        Vector h = Vector::Zero(T);
        for (size_t i = 0; i < densities.size(); ++i) h += lambda[i] * densities[i];
        return Vector(h * unit(rng));
    };

    // a constant payoff of one pairs with every extreme density to one
    double unit_res = 0.0;
    for (const Vector& h : densities)
        unit_res = std::max(unit_res, std::abs(P.dot(h) - 1.0));
    rep.add("bipolarity.unit_pairing", unit_res, 1e-9);

    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vector g = sample_payoff(false);
        Vector h = sample_density();
        worst = std::max(worst, P.dot(g.cwiseProduct(h)) - 1.0);
    }
    rep.add("bipolarity.pairing_bound", std::max(worst, 0.0), 1e-9);

    // a payoff stretched past the budget is caught by some extreme density
    Vector g_violate = 1.01 * sample_payoff(true);
    double best = -kInf;
    for (const Vector& h : densities)
        best = std::max(best, P.dot(g_violate.cwiseProduct(h)));
    rep.add("bipolarity.violator_detected", std::abs(best - 1.01), 1e-6,
            "stretched payoff pairs to " + format_number(best));
    return rep;
}

VerificationReport s10_counterexample(const VerifyOptions& opts) {
    VerificationReport rep;
    MarketModel m = builtin_market("s10");
    UtilityFunction u = UtilityFunction::builtin_s10();

    auto value_at = [&](double p) {
        return solve_u_tilde(m, u, 2.0, Vector::Constant(1, p), opts.primal).value;
    };
    const double u0 = value_at(0.0);
    rep.add("s10.value_at_zero", std::abs(u0 - 4.0 / 3.0), 1e-9);

    const double delta = 1e-3;
    const double right = (value_at(delta) - u0) / delta;
    const double left = (u0 - value_at(-delta)) / delta;
    rep.add("s10.right_slope", std::abs(right - (-4.0 / 3.0)), 1e-2,
            "one-sided quotient " + format_number(right));
    rep.add("s10.left_slope", std::abs(left - (-2.0 / 3.0)), 1e-2,
            "one-sided quotient " + format_number(left));

    for (double d : {1e-2, 1e-3, 1e-4}) {
        const double avg = 0.5 * (value_at(-d) + value_at(d));
        rep.add("s10.convexity_violation_" + format_number(d), avg - u0, -1e-9,
                "midpoint average minus the value at zero");
    }
    return rep;
}

VerificationReport power_identity_check(const MarketModel& m, double alpha, double x,
                                        const Vector& p, const VerifyOptions& opts) {
    VerificationReport rep;
    UtilityFunction u = UtilityFunction::power(alpha);
    const double beta = u.beta();
    PrimalSolution ps = solve_u_tilde(m, u, x, p, opts.primal);
    DualSolution ds = solve_v_tilde(m, u, 1.0, p, opts.dual);
    if (ds.status != DualStatus::Optimal) {
        rep.add("power_identity.dual_solved", 1.0, 0.0, "dual infeasible");
        return rep;
    }
    const double rhs =
        std::pow(x, alpha) / alpha * std::pow(-beta * ds.value, 1.0 - alpha);
    const double rel =
        std::abs(ps.value - rhs) / std::max({std::abs(ps.value), std::abs(rhs), 1e-12});
    rep.add("power_identity.alpha_" + format_number(alpha) + "_x_" + format_number(x) +
                "_p_" + format_number(p.size() ? p[0] : 0.0),
            rel, 1e-6);
    return rep;
}

VerificationReport stability_probe(const MarketModel& m, const UtilityFunction& u,
                                   double x, const Vector& p,
                                   const std::vector<double>& radii, int directions,
                                   unsigned seed, const VerifyOptions& opts) {
    VerificationReport rep;
    const int n = static_cast<int>(p.size());
    PrimalSolution base = solve_u_tilde(m, u, x, p, opts.primal);

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vector> dirs;
    for (int k = 0; k < directions; ++k) {
        Vector d(n + 1);
        if (n == 1) {
            const double theta = 2.0 * M_PI * k / directions;
            d[0] = std::cos(theta);
            d[1] = std::sin(theta);
        } else {
            for (int i = 0; i <= n; ++i) d[i] = gauss(rng);
            d.normalize();
        }
        dirs.push_back(d);
    }

    std::vector<double> dev_q, dev_g, dev_u, dev_y;
    for (double rho : radii) {
        double dq = 0.0, dg = 0.0, du = 0.0, dy = 0.0;
        for (const Vector& d : dirs) {
            const double xs = x + rho * d[0];
            Vector pshift = p + rho * d.tail(n);
            PrimalSolution s = solve_u_tilde(m, u, xs, pshift, opts.primal);
            dq = std::max(dq,
                          (s.static_position - base.static_position).cwiseAbs().maxCoeff());
            dg = std::max(dg, (s.g - base.g).cwiseAbs().maxCoeff());
            du = std::max(du, std::abs(s.value - base.value));
            dy = std::max(dy, std::abs(s.marginal_value - base.marginal_value));
        }
        dev_q.push_back(dq);
        dev_g.push_back(dg);
        dev_u.push_back(du);
        dev_y.push_back(dy);
    }

    auto monotone = [&](const std::vector<double>& dev, const std::string& name) {
        double worst = 0.0;
        std::string note;
        for (size_t i = 1; i < dev.size(); ++i)
            worst = std::max(worst, dev[i] - dev[i - 1] - 2e-9);
        for (double d : dev) note += format_number(d) + " ";
        rep.add("stability." + name, std::max(worst, 0.0), 0.0, "deviations: " + note);
    };
    monotone(dev_q, "position");
    monotone(dev_g, "payoff");
    monotone(dev_u, "value");
    monotone(dev_y, "marginal");
    return rep;
}

double dual_conjugate_value(const MarketModel& m, const UtilityFunction& u, double x,
                            const Vector& p, const VerifyOptions& opts) {
    auto slope = [&](double y) {
        DualSolution s = solve_v_tilde(m, u, y, p, opts.dual);
        if (s.status != DualStatus::Optimal)
            throw SolverError("dual_conjugate_value: dual infeasible");
        return s.dy_v_tilde + x;
    };
    double ylo = 1.0, yhi = 1.0;
    int guard = 0;
    while (slope(ylo) > 0.0 && guard++ < 200) ylo *= 0.25;
    guard = 0;
    while (slope(yhi) < 0.0 && guard++ < 200) yhi *= 4.0;
    for (int i = 0; i < 200 && yhi - ylo > 1e-14 * yhi; ++i) {
        const double mid = 0.5 * (ylo + yhi);
        if (slope(mid) < 0.0)
            ylo = mid;
        else
            yhi = mid;
    }
    const double y = 0.5 * (ylo + yhi);
    return solve_v_tilde(m, u, y, p, opts.dual).value + x * y;
}

VerificationReport run_verification_suite(const MarketModel& m, const UtilityFunction& u,
                                          double x, const std::optional<Vector>& p_opt,
                                          const VerifyOptions& opts) {
    VerificationReport rep;
    MarketGeometry geo(m);
    const int n = m.num_derivatives();

    Vector p;
    if (p_opt.has_value()) {
        p = *p_opt;
    } else if (n > 0) {
        // default: centroid of the extreme consistent prices
        PriceSet ps = geo.price_set();
        p = Vector::Zero(n);
        for (const Vector& v : ps.vertices()) p += v;
        p /= static_cast<double>(ps.vertices().size());
    } else {
        p = Vector::Zero(0);
    }

    rep.merge(first_order_check(m, u, x, p, opts));
    if (n > 0) rep.merge(optimizer_consistency(m, u, x, p, opts));
    if (n > 0) rep.merge(gradient_relation_check(m, u, x, p, opts.gradient_step, opts));

    // conjugate duality gap, the dual side located independently
    {
        PrimalSolution ps = solve_u_tilde(m, u, x, p, opts.primal);
        const double dual_side = dual_conjugate_value(m, u, x, p, opts);
        rep.add("duality.gap", std::abs(dual_side - ps.value) / (1.0 + std::abs(ps.value)),
                1e-7);
    }

    if (u.kind() == UtilityFunction::Kind::Power)
        rep.merge(power_identity_check(m, u.alpha(), x, p, opts));

    if (n > 0) rep.merge(bipolarity_probe(m, p, 100, 20240817, opts));

    if (n == 1) {
        PriceSet ps = geo.price_set();
        const double lo = ps.lower()[0], hi = ps.upper()[0];
        const double width = hi - lo;
        SweepReport sw = sweep_1d(m, u, x, lo + 0.03 * width, hi - 0.03 * width, 41, opts);
        rep.add("sweep.shape", sw.shape_ok ? 0.0 : 1.0, 0.0, sw.violation);
        if (u.unbounded_above() && u.inada()) {
            std::vector<double> path;
            for (int k = 1; k <= 6; ++k) path.push_back(hi - width * std::pow(10.0, -k));
            DivergenceThresholds th;
            th.value_increase = 1.0;  // tighter growth floors suit short paths
            rep.merge(divergence_probe(m, u, x, path, th, opts));
        }
    }

    if (u.inada()) {
        const double hw =
            n == 1 ? (geo.price_set().upper()[0] - geo.price_set().lower()[0]) : 1.0;
        const double safe = std::min(0.2 * x, 0.05 * hw);
        std::vector<double> radii;
        for (double r = 1e-2; r >= 1e-6 / 1.5; r *= 0.1) radii.push_back(r * safe);
        rep.merge(stability_probe(m, u, x, p, radii, 20, 71, opts));
    }
    return rep;
}

} // namespace semistatic
