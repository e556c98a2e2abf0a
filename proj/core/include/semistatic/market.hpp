#ifndef SEMISTATIC_MARKET_HPP
#define SEMISTATIC_MARKET_HPP

#include <string>
#include <vector>

#include "semistatic/errors.hpp"
#include "semistatic/types.hpp"

namespace semistatic {

// Finite event tree. Nodes are stored parents-before-children; the single
// root has parent == -1 and time 0; every leaf sits at time == horizon.
// Conditional branch probabilities are strictly positive and sum to one
// across each node's children.
struct ScenarioTree {
    struct Node {
        std::string id;
        int parent = -1;
        int time = 0;
        double cond_prob = 1.0;
    };

    std::vector<Node> nodes;
    int horizon = 0;

    // derived on assembly
    std::vector<std::vector<int>> children;
    std::vector<int> terminal_nodes;     // node indices, input order
    std::vector<int> nonterminal_nodes;  // node indices, input order
    Vector terminal_prob;                // path probability per terminal ordinal
};

// Market on a scenario tree: d stocks quoted at every node, n European
// claims paying at the horizon, interest rate zero.
struct MarketModel {
    ScenarioTree tree;
    Matrix stock_prices;                    // #nodes x d
    std::vector<std::string> derivative_names;
    Matrix payoffs;                         // #terminals x n

    // derived on assembly
    // wealth contribution of one share held at a non-terminal node:
    // strategy_map(w, col(nt, i)) = S_i(successor of nt on the path to w) - S_i(nt)
    // for terminals w below nt, else 0. Columns indexed nt-major.
    Matrix strategy_map;                    // #terminals x (#nonterminals * d)
    std::vector<int> terminal_ordinal;      // node index -> terminal ordinal (-1)
    std::vector<int> nonterminal_ordinal;   // node index -> nonterminal ordinal (-1)

    int num_stocks() const { return static_cast<int>(stock_prices.cols()); }
    int num_derivatives() const { return static_cast<int>(payoffs.cols()); }
    int num_terminals() const { return static_cast<int>(tree.terminal_nodes.size()); }
    int num_nonterminals() const { return static_cast<int>(tree.nonterminal_nodes.size()); }
    const Vector& probabilities() const { return tree.terminal_prob; }

    // Martingale system over unnormalized terminal measures mu >= 0:
    // rows are one normalization row (sum mu = mass) followed by
    // strategy_map^T mu = 0. Returned as (lhs, rhs).
    Matrix martingale_rows() const;           // (#nonterminals*d) x #terminals
    Matrix martingale_system_lhs() const;     // mass row stacked on martingale rows
    Vector martingale_system_rhs(double mass = 1.0) const;
};

// Holdings per non-terminal node (rows follow tree.nonterminal_nodes order).
struct TradingStrategy {
    Matrix holdings;  // #nonterminals x d

    static TradingStrategy zero(const MarketModel& m);
};

using TerminalWealth = Vector;  // value per terminal ordinal

// Validates invariants and fills the derived fields. Throws SchemaError on a
// structural defect and ArbitrageError if no equivalent martingale measure
// exists. `emm_margin`, when non-null, receives the strict-feasibility value.
MarketModel assemble_market(ScenarioTree tree, Matrix stock_prices,
                            std::vector<std::string> derivative_names,
                            Matrix payoffs, double* emm_margin = nullptr);

// JSON market spec (schema documented in the README).
MarketModel load_market(const std::string& json_text);
MarketModel load_market_file(const std::string& path);

// Built-in instances addressable without a file: "instance-a" (one period,
// three states, one stock, one call) and "s10" (no stocks, one claim paying
// +-1, the counter-example market).
MarketModel builtin_market(const std::string& name);
bool is_builtin_market(const std::string& name);

// x0 + sum_t H(node_t) . (S(node_{t+1}) - S(node_t)) along each path.
TerminalWealth terminal_wealth(const MarketModel& m, double x0,
                               const TradingStrategy& strategy);

// x - q.p + (H . S)_T + q.f  per terminal node.
TerminalWealth combined_payoff(const MarketModel& m, double x,
                               const TradingStrategy& strategy,
                               const Vector& q, const Vector& p);

} // namespace semistatic

#endif
