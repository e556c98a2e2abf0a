// Command-line front end: market ingestion, solver routing, CSV reports.
//
// Exit codes: 0 success, 2 invalid input or schema, 3 arbitrage (no
// equivalent martingale measure, or a quoted price outside the
// arbitrage-free set), 4 solver failure, 5 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "semistatic/dual.hpp"
#include "semistatic/errors.hpp"
#include "semistatic/geometry.hpp"
#include "semistatic/market.hpp"
#include "semistatic/primal.hpp"
#include "semistatic/utility.hpp"
#include "semistatic/verify.hpp"

#include <nlohmann/json.hpp>

namespace {

using namespace semistatic;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitArbitrage = 3;
constexpr int kExitSolver = 4;
constexpr int kExitVerification = 5;

MarketModel open_market(const std::string& spec) {
    if (is_builtin_market(spec)) return builtin_market(spec);
    return load_market_file(spec);
}

UtilityFunction parse_utility(const std::string& spec) {
    if (spec == "log") return UtilityFunction::log_utility();
    if (spec.rfind("power:", 0) == 0) {
        const double alpha = std::stod(spec.substr(6));
        return UtilityFunction::power(alpha);
    }
    if (spec.rfind("pwl:", 0) == 0) {
        const std::string path = spec.substr(4);
        if (path == "builtin" || path == "s10") return UtilityFunction::builtin_s10();
        std::ifstream in(path);
        if (!in) throw SchemaError("cannot open utility file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(std::string("utility file: invalid JSON: ") + e.what());
        }
        nlohmann::json points = j.is_array() ? j : j.value("points", nlohmann::json::array());
        std::vector<double> bps, slopes;
        for (const auto& pair : points) {
            if (!pair.is_array() || pair.size() != 2)
                throw SchemaError("utility file: points must be [breakpoint, slope] pairs");
            bps.push_back(pair[0].get<double>());
            slopes.push_back(pair[1].get<double>());
        }
        double ax = bps.empty() ? 0.0 : bps.front(), av = 0.0;
        if (j.is_object() && j.contains("anchor")) {
            ax = j["anchor"][0].get<double>();
            av = j["anchor"][1].get<double>();
        }
        return UtilityFunction::piecewise_linear(bps, slopes, ax, av);
    }
    throw SchemaError("unknown utility selector '" + spec +
                      "' (expected log | power:<alpha> | pwl:<file>)");
}

Vector parse_vector(const std::string& csv) {
    Vector out(0);
    if (csv.empty()) return out;
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
    out = Vector(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot open output file: " + path);
    out << content;
}

std::string solve_row_csv(const MarketModel& m, double p_scalar_or_first,
                          const PrimalSolution& s, double mval) {
    std::ostringstream out;
    out << "p,u_tilde";
    for (int j = 1; j <= m.num_derivatives(); ++j) out << ",q_tilde_" << j;
    out << ",dx_u,m\n";
    out << format_number(p_scalar_or_first) << ',' << format_number(s.value);
    for (int j = 0; j < m.num_derivatives(); ++j)
        out << ',' << format_number(s.static_position[j]);
    out << ',' << format_number(s.marginal_value) << ',' << format_number(mval) << '\n';
    return out.str();
}

struct CommonArgs {
    std::string market;
    std::string utility = "log";
    double x = 1.0;
    double y = 1.0;
    std::string p_csv;
    std::string grid;  // lo,hi,count
    std::string output;
    double solver_tol = 0.0;
    double feas_tol = 0.0;
};

VerifyOptions make_options(const CommonArgs& args) {
    VerifyOptions opts;
    if (args.solver_tol > 0.0) {
        opts.primal.grad_tol = args.solver_tol;
        opts.dual.grad_tol = args.solver_tol;
    }
    if (args.feas_tol > 0.0) {
        opts.primal.feas_tol = args.feas_tol;
        opts.dual.feas_tol = args.feas_tol;
    }
    return opts;
}

int cmd_solve(const CommonArgs& args) {
    MarketModel m = open_market(args.market);
    UtilityFunction u = parse_utility(args.utility);
    Vector p = parse_vector(args.p_csv);
    VerifyOptions opts = make_options(args);

    PrimalSolution s = solve_u_tilde(m, u, args.x, p, opts.primal);
    MarketGeometry geo(m);
    const double mval =
        m.num_derivatives() > 0 ? geo.largest_feasible_position(args.x, p).m : 0.0;

    std::cout << "value u~(x,p)      = " << format_number(s.value) << "\n";
    for (int j = 0; j < m.num_derivatives(); ++j)
        std::cout << "position q~[" << m.derivative_names[j]
                  << "] = " << format_number(s.static_position[j]) << "\n";
    std::cout << "marginal dx u~     = " << format_number(s.marginal_value) << "\n"
              << "largest position m = " << format_number(mval) << "\n"
              << "status             = "
              << (s.status == PrimalStatus::Interior ? "interior" : "boundary")
              << (s.unique_position ? "" : " (position not unique: minimum norm reported)")
              << "\n";

    VerificationReport fo = first_order_check(m, u, args.x, p, opts);
    for (const Check& c : fo.checks)
        std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.name
                  << "  residual = " << format_number(c.residual)
                  << (c.note.empty() ? "" : "  (" + c.note + ")") << "\n";

    if (!args.output.empty())
        write_file(args.output, solve_row_csv(m, p.size() ? p[0] : 0.0, s, mval));
    return fo.all_passed() ? kExitOk : kExitVerification;
}

int cmd_dual(const CommonArgs& args) {
    MarketModel m = open_market(args.market);
    UtilityFunction u = parse_utility(args.utility);
    Vector p = parse_vector(args.p_csv);
    VerifyOptions opts = make_options(args);

    DualSolution s = solve_v_tilde(m, u, args.y, p, opts.dual);
    if (s.status != DualStatus::Optimal)
        throw ArbitrageError("dual infeasible: (y, y p) outside the dual cone");
    std::cout << "value v~(y,p)   = " << format_number(s.value) << "\n"
              << "dy v~           = " << format_number(s.dy_v_tilde) << "\n";
    for (int w = 0; w < m.num_terminals(); ++w)
        std::cout << "density[" << m.tree.nodes[m.tree.terminal_nodes[w]].id
                  << "] = " << format_number(s.density[w]) << "\n";

    if (!args.output.empty()) {
        std::ostringstream csv;
        csv << "y,v_tilde,dy_v\n"
            << format_number(args.y) << ',' << format_number(s.value) << ','
            << format_number(s.dy_v_tilde) << '\n';
        write_file(args.output, csv.str());
    }
    return kExitOk;
}

int cmd_geometry(const CommonArgs& args) {
    MarketModel m = open_market(args.market);
    Vector p = parse_vector(args.p_csv);
    MarketGeometry geo(m);
    PriceSet ps = geo.price_set();

    std::ostringstream csv;
    csv << "quantity,value\n";
    if (ps.dim() == 0) {
        std::cout << "price set closure  = (no derivatives)\n";
    } else {
        std::cout << "price set closure  = ";
        for (int j = 0; j < ps.dim(); ++j) {
            std::cout << (j ? " x [" : "[") << format_number(ps.lower()[j]) << ", "
                      << format_number(ps.upper()[j]) << "]";
            csv << "price_lo_" << j + 1 << ',' << format_number(ps.lower()[j]) << '\n';
            csv << "price_hi_" << j + 1 << ',' << format_number(ps.upper()[j]) << '\n';
        }
        std::cout << "\n";
    }
    std::cout << "open (no replicable basket) = " << (ps.open() ? "yes" : "no") << "\n";
    csv << "open," << (ps.open() ? 1 : 0) << '\n';

    if (p.size() == m.num_derivatives() && m.num_derivatives() > 0) {
        if (!ps.contains(p))
            throw ArbitrageError("geometry: p is not an arbitrage-free price");
        auto pos = geo.largest_feasible_position(args.x, p);
        Vector w(p.size() + 1);
        w[0] = 1.0;
        w.tail(p.size()) = p;
        auto rad = geo.cone_radius(w);
        std::cout << "m(x, p)            = " << format_number(pos.m) << "\n"
                  << "d((1, p))          = " << format_number(rad.d) << "\n";
        csv << "m," << format_number(pos.m) << '\n';
        csv << "d," << format_number(rad.d) << '\n';
    }
    if (!args.output.empty()) write_file(args.output, csv.str());
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
    MarketModel m = open_market(args.market);
    UtilityFunction u = parse_utility(args.utility);
    VerifyOptions opts = make_options(args);

    Vector grid = parse_vector(args.grid);
    if (grid.size() != 3) throw SchemaError("sweep: --grid expects lo,hi,count");
    SweepReport rep = sweep_1d(m, u, args.x, grid[0], grid[1],
                               static_cast<int>(grid[2]), opts);
    const std::string csv = to_csv(rep, m.num_derivatives());
    if (!args.output.empty())
        write_file(args.output, csv);
    else
        std::cout << csv;

    std::cout << "shape = " << (rep.shape_ok ? "ok" : ("violated: " + rep.violation))
              << "\n";
    if (rep.flat_located)
        std::cout << "flat stretch [a, b] = [" << format_number(rep.flat_lo) << ", "
                  << format_number(rep.flat_hi) << "]\n";
    return rep.shape_ok ? kExitOk : kExitVerification;
}

int cmd_verify(const CommonArgs& args) {
    MarketModel m = open_market(args.market);
    UtilityFunction u = parse_utility(args.utility);
    VerifyOptions opts = make_options(args);
    std::optional<Vector> p;
    if (!args.p_csv.empty()) p = parse_vector(args.p_csv);

    VerificationReport rep = run_verification_suite(m, u, args.x, p, opts);
    for (const Check& c : rep.checks)
        std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.name
                  << "  residual = " << format_number(c.residual)
                  << "  tolerance = " << format_number(c.tolerance)
                  << (c.note.empty() ? "" : "  (" + c.note + ")") << "\n";
    if (!args.output.empty()) write_file(args.output, to_csv(rep));
    std::cout << (rep.all_passed() ? "all checks passed" : "SOME CHECKS FAILED") << "\n";
    return rep.all_passed() ? kExitOk : kExitVerification;
}

int cmd_repro_s10(const CommonArgs& args) {
    VerifyOptions opts = make_options(args);
    VerificationReport rep = s10_counterexample(opts);
    for (const Check& c : rep.checks)
        std::cout << (c.passed ? "[pass] " : "[FAIL] ") << c.name
                  << "  residual = " << format_number(c.residual)
                  << (c.note.empty() ? "" : "  (" + c.note + ")") << "\n";
    if (!args.output.empty()) write_file(args.output, to_csv(rep));
    std::cout << (rep.all_passed()
                      ? "counter-example reproduced: the value is not convex in the price"
                      : "REPRODUCTION FAILED")
              << "\n";
    return rep.all_passed() ? kExitOk : kExitVerification;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-static utility maximization on scenario trees"};
    app.require_subcommand(1);

    CommonArgs args;

    auto add_common = [&](CLI::App* cmd, bool needs_market) {
        if (needs_market)
            cmd->add_option("--market", args.market,
                            "market spec file, or a built-in name (instance-a, s10)")
                ->required();
        cmd->add_option("--utility", args.utility, "log | power:<alpha> | pwl:<file>");
        cmd->add_option("--output", args.output, "write the CSV report here");
        cmd->add_option("--solver-tol", args.solver_tol, "solver gradient tolerance");
        cmd->add_option("--feas-tol", args.feas_tol, "feasibility tolerance");
    };

    CLI::App* solve = app.add_subcommand("solve", "semi-static optimum and first-order checks");
    add_common(solve, true);
    solve->add_option("--x", args.x, "initial wealth")->required();
    solve->add_option("--p", args.p_csv, "derivative prices, comma separated")->required();

    CLI::App* dual = app.add_subcommand("dual", "dual optimum at (y, y p)");
    add_common(dual, true);
    dual->add_option("--y", args.y, "dual mass")->required();
    dual->add_option("--p", args.p_csv, "derivative prices, comma separated")->required();

    CLI::App* geometry = app.add_subcommand("geometry", "price set, cones, m and d");
    add_common(geometry, true);
    geometry->add_option("--x", args.x, "initial wealth");
    geometry->add_option("--p", args.p_csv, "derivative prices, comma separated");

    CLI::App* sweep = app.add_subcommand("sweep", "price sweep with shape classification");
    add_common(sweep, true);
    sweep->add_option("--x", args.x, "initial wealth")->required();
    sweep->add_option("--grid", args.grid, "price grid lo,hi,count")->required();

    CLI::App* verify = app.add_subcommand("verify", "full verification suite");
    add_common(verify, true);
    verify->add_option("--x", args.x, "initial wealth")->required();
    verify->add_option("--p", args.p_csv, "derivative prices (default: price centroid)");

    CLI::App* repro = app.add_subcommand("repro-s10", "built-in non-convexity counter-example");
    add_common(repro, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitInput;
    }

    try {
        if (solve->parsed()) return cmd_solve(args);
        if (dual->parsed()) return cmd_dual(args);
        if (geometry->parsed()) return cmd_geometry(args);
        if (sweep->parsed()) return cmd_sweep(args);
        if (verify->parsed()) return cmd_verify(args);
        if (repro->parsed()) return cmd_repro_s10(args);
    } catch (const SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ArbitrageError& e) {
        std::cerr << "arbitrage: " << e.what() << "\n";
        return kExitArbitrage;
    } catch (const DimensionError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitInput;
}
