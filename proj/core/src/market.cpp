#include "semistatic/market.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semistatic/lp.hpp"

namespace semistatic {

namespace {

void validate_tree(const ScenarioTree& t) {
    const int n = static_cast<int>(t.nodes.size());
    if (n == 0) throw SchemaError("tree: empty node list");
    if (t.horizon < 1) throw SchemaError("tree: horizon must be >= 1");
    std::map<std::string, int> seen;
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const auto& nd = t.nodes[i];
        if (nd.id.empty()) throw SchemaError("tree: node with empty id");
        if (!seen.emplace(nd.id, i).second)
            throw SchemaError("tree: duplicate node id '" + nd.id + "'");
        if (nd.parent < 0) {
            ++roots;
            if (nd.time != 0)
                throw SchemaError("tree: root '" + nd.id + "' must have time 0");
        } else {
            if (nd.parent >= i)
                throw SchemaError("tree: node '" + nd.id + "' listed before its parent");
            if (nd.time != t.nodes[nd.parent].time + 1)
                throw SchemaError("tree: node '" + nd.id + "' time must be parent time + 1");
            if (!(nd.cond_prob > 0.0) || !std::isfinite(nd.cond_prob))
                throw SchemaError("tree: node '" + nd.id + "' needs cond_prob > 0");
        }
        if (nd.time < 0 || nd.time > t.horizon)
            throw SchemaError("tree: node '" + nd.id + "' time outside [0, horizon]");
    }
    if (roots != 1) throw SchemaError("tree: expected exactly one root");
}

} // namespace

Matrix MarketModel::martingale_rows() const {
    return strategy_map.transpose();
}

Matrix MarketModel::martingale_system_lhs() const {
    const int T = num_terminals();
    Matrix lhs(1 + strategy_map.cols(), T);
    lhs.row(0) = Eigen::RowVectorXd::Ones(T);
    lhs.bottomRows(strategy_map.cols()) = strategy_map.transpose();
    return lhs;
}

Vector MarketModel::martingale_system_rhs(double mass) const {
    Vector rhs = Vector::Zero(1 + strategy_map.cols());
    rhs[0] = mass;
    return rhs;
}

TradingStrategy TradingStrategy::zero(const MarketModel& m) {
    return TradingStrategy{Matrix::Zero(m.num_nonterminals(), m.num_stocks())};
}

MarketModel assemble_market(ScenarioTree tree, Matrix stock_prices,
                            std::vector<std::string> derivative_names,
                            Matrix payoffs, double* emm_margin) {
    validate_tree(tree);
    const int n_nodes = static_cast<int>(tree.nodes.size());

    tree.children.assign(n_nodes, {});
    for (int i = 0; i < n_nodes; ++i)
        if (tree.nodes[i].parent >= 0) tree.children[tree.nodes[i].parent].push_back(i);

    tree.terminal_nodes.clear();
    tree.nonterminal_nodes.clear();
    for (int i = 0; i < n_nodes; ++i) {
        if (tree.children[i].empty()) {
            if (tree.nodes[i].time != tree.horizon)
                throw SchemaError("tree: leaf '" + tree.nodes[i].id +
                                  "' does not sit at the horizon");
            tree.terminal_nodes.push_back(i);
        } else {
            tree.nonterminal_nodes.push_back(i);
            double s = 0.0;
            for (int c : tree.children[i]) s += tree.nodes[c].cond_prob;
            if (std::abs(s - 1.0) > 1e-12)
                throw SchemaError("tree: branch probabilities at '" + tree.nodes[i].id +
                                  "' sum to " + std::to_string(s) + ", expected 1");
        }
    }

    // path probabilities
    std::vector<double> node_prob(n_nodes, 1.0);
    for (int i = 0; i < n_nodes; ++i)
        if (tree.nodes[i].parent >= 0)
            node_prob[i] = node_prob[tree.nodes[i].parent] * tree.nodes[i].cond_prob;
    const int T = static_cast<int>(tree.terminal_nodes.size());
    tree.terminal_prob = Vector::Zero(T);
    for (int w = 0; w < T; ++w) tree.terminal_prob[w] = node_prob[tree.terminal_nodes[w]];

    if (stock_prices.rows() != n_nodes)
        throw SchemaError("stocks: need one price vector per node");
    if (!stock_prices.allFinite())
        throw SchemaError("stocks: non-finite price");
    const int d = static_cast<int>(stock_prices.cols());

    if (payoffs.rows() != T)
        throw SchemaError("derivatives: payoff rows must match terminal nodes");
    if (static_cast<int>(derivative_names.size()) != payoffs.cols())
        throw SchemaError("derivatives: name/payoff count mismatch");
    if (payoffs.size() > 0 && !payoffs.allFinite())
        throw SchemaError("derivatives: non-finite payoff");

    MarketModel m;
    m.tree = std::move(tree);
    m.stock_prices = std::move(stock_prices);
    m.derivative_names = std::move(derivative_names);
    m.payoffs = std::move(payoffs);

    m.terminal_ordinal.assign(n_nodes, -1);
    m.nonterminal_ordinal.assign(n_nodes, -1);
    for (int w = 0; w < T; ++w) m.terminal_ordinal[m.tree.terminal_nodes[w]] = w;
    for (int k = 0; k < static_cast<int>(m.tree.nonterminal_nodes.size()); ++k)
        m.nonterminal_ordinal[m.tree.nonterminal_nodes[k]] = k;

    const int NT = m.num_nonterminals();
    m.strategy_map = Matrix::Zero(T, NT * d);
    for (int w = 0; w < T; ++w) {
        int node = m.tree.terminal_nodes[w];
        while (m.tree.nodes[node].parent >= 0) {
            const int par = m.tree.nodes[node].parent;
            const int k = m.nonterminal_ordinal[par];
            for (int i = 0; i < d; ++i)
                m.strategy_map(w, k * d + i) =
                    m.stock_prices(node, i) - m.stock_prices(par, i);
            node = par;
        }
    }

    StrictFeasibility sf =
        strict_feasibility(m.martingale_system_lhs(), m.martingale_system_rhs());
    if (emm_margin) *emm_margin = sf.system_feasible ? sf.value : -kInf;
    if (!sf.system_feasible || sf.value <= 1e-10)
        throw ArbitrageError("market admits arbitrage: no equivalent martingale measure");

    return m;
}

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& field, const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_number())
        throw SchemaError(ctx + ": missing or non-numeric field '" + field + "'");
    return j[field].get<double>();
}

} // namespace

MarketModel load_market(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("market spec: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("market spec: top level must be an object");
    if (!j.contains("horizon") || !j["horizon"].is_number_integer())
        throw SchemaError("market spec: missing integer field 'horizon'");
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw SchemaError("market spec: missing array field 'nodes'");

    ScenarioTree tree;
    tree.horizon = j["horizon"].get<int>();

    std::map<std::string, int> index_of;
    int d = -1;
    std::vector<std::vector<double>> prices;
    for (const auto& nj : j["nodes"]) {
        const std::string ctx = "node #" + std::to_string(tree.nodes.size());
        if (!nj.is_object()) throw SchemaError(ctx + ": must be an object");
        if (!nj.contains("id") || !nj["id"].is_string())
            throw SchemaError(ctx + ": missing string field 'id'");
        ScenarioTree::Node node;
        node.id = nj["id"].get<std::string>();
        if (!nj.contains("parent"))
            throw SchemaError("node '" + node.id + "': missing field 'parent'");
        if (nj["parent"].is_null()) {
            node.parent = -1;
            node.cond_prob = 1.0;
        } else if (nj["parent"].is_string()) {
            const std::string pid = nj["parent"].get<std::string>();
            auto it = index_of.find(pid);
            if (it == index_of.end())
                throw SchemaError("node '" + node.id + "': parent '" + pid +
                                  "' not defined earlier in the list");
            node.parent = it->second;
            node.cond_prob = require_number(nj, "cond_prob", "node '" + node.id + "'");
        } else {
            throw SchemaError("node '" + node.id + "': 'parent' must be a node id or null");
        }
        node.time = static_cast<int>(require_number(nj, "time", "node '" + node.id + "'"));
        if (!nj.contains("stock") || !nj["stock"].is_array())
            throw SchemaError("node '" + node.id + "': missing array field 'stock'");
        std::vector<double> sp;
        for (const auto& v : nj["stock"]) {
            if (!v.is_number())
                throw SchemaError("node '" + node.id + "': non-numeric stock price");
            sp.push_back(v.get<double>());
        }
        if (d < 0) d = static_cast<int>(sp.size());
        if (static_cast<int>(sp.size()) != d)
            throw SchemaError("node '" + node.id + "': stock vector length differs");
        index_of[node.id] = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        prices.push_back(std::move(sp));
    }

    Matrix stock(static_cast<int>(prices.size()), std::max(d, 0));
    for (int i = 0; i < stock.rows(); ++i)
        for (int k = 0; k < stock.cols(); ++k) stock(i, k) = prices[i][k];

    // terminal ids in input order, for payoff lookup
    std::vector<std::string> terminal_ids;
    {
        std::vector<bool> has_child(tree.nodes.size(), false);
        for (const auto& nd : tree.nodes)
            if (nd.parent >= 0) has_child[nd.parent] = true;
        for (size_t i = 0; i < tree.nodes.size(); ++i)
            if (!has_child[i]) terminal_ids.push_back(tree.nodes[i].id);
    }

    std::vector<std::string> names;
    Matrix payoffs = Matrix::Zero(static_cast<int>(terminal_ids.size()), 0);
    if (j.contains("derivatives")) {
        if (!j["derivatives"].is_array())
            throw SchemaError("market spec: 'derivatives' must be an array");
        const auto& ds = j["derivatives"];
        payoffs = Matrix::Zero(static_cast<int>(terminal_ids.size()),
                               static_cast<int>(ds.size()));
        int col = 0;
        for (const auto& dj : ds) {
            if (!dj.is_object() || !dj.contains("name") || !dj["name"].is_string())
                throw SchemaError("derivative #" + std::to_string(col) +
                                  ": missing string field 'name'");
            const std::string name = dj["name"].get<std::string>();
            if (!dj.contains("payoff") || !dj["payoff"].is_object())
                throw SchemaError("derivative '" + name + "': missing object field 'payoff'");
            for (auto it = dj["payoff"].begin(); it != dj["payoff"].end(); ++it) {
                auto pos = std::find(terminal_ids.begin(), terminal_ids.end(), it.key());
                if (pos == terminal_ids.end())
                    throw SchemaError("derivative '" + name + "': payoff key '" + it.key() +
                                      "' is not a terminal node id");
                if (!it.value().is_number())
                    throw SchemaError("derivative '" + name + "': non-numeric payoff at '" +
                                      it.key() + "'");
                payoffs(static_cast<int>(pos - terminal_ids.begin()), col) =
                    it.value().get<double>();
            }
            names.push_back(name);
            ++col;
        }
    }

    return assemble_market(std::move(tree), std::move(stock), std::move(names),
                           std::move(payoffs));
}

MarketModel load_market_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open market spec file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_market(ss.str());
}

bool is_builtin_market(const std::string& name) {
    return name == "instance-a" || name == "s10";
}

MarketModel builtin_market(const std::string& name) {
    if (name == "instance-a") {
        ScenarioTree tree;
        tree.horizon = 1;
        tree.nodes = {{"root", -1, 0, 1.0},
                      {"up", 0, 1, 1.0 / 3.0},
                      {"mid", 0, 1, 1.0 / 3.0},
                      {"down", 0, 1, 1.0 / 3.0}};
        Matrix stock(4, 1);
        stock << 1.0, 2.0, 1.0, 0.5;
        Matrix payoff(3, 1);
        payoff << 1.0, 0.0, 0.0;
        return assemble_market(std::move(tree), std::move(stock), {"call"},
                               std::move(payoff));
    }
    if (name == "s10") {
        ScenarioTree tree;
        tree.horizon = 1;
        tree.nodes = {{"root", -1, 0, 1.0},
                      {"up", 0, 1, 2.0 / 3.0},
                      {"down", 0, 1, 1.0 / 3.0}};
        Matrix stock(3, 0);
        Matrix payoff(2, 1);
        payoff << 1.0, -1.0;
        return assemble_market(std::move(tree), std::move(stock), {"claim"},
                               std::move(payoff));
    }
    throw SchemaError("unknown built-in market '" + name + "'");
}

TerminalWealth terminal_wealth(const MarketModel& m, double x0,
                               const TradingStrategy& strategy) {
    if (strategy.holdings.rows() != m.num_nonterminals() ||
        strategy.holdings.cols() != m.num_stocks())
        throw DimensionError("terminal_wealth: strategy dimensions");
    // flatten node-major to match strategy_map column order
    Vector flat(strategy.holdings.size());
    for (int k = 0; k < strategy.holdings.rows(); ++k)
        for (int i = 0; i < strategy.holdings.cols(); ++i)
            flat[k * strategy.holdings.cols() + i] = strategy.holdings(k, i);
    return Vector::Constant(m.num_terminals(), x0) + m.strategy_map * flat;
}

TerminalWealth combined_payoff(const MarketModel& m, double x,
                               const TradingStrategy& strategy,
                               const Vector& q, const Vector& p) {
    if (q.size() != m.num_derivatives() || p.size() != m.num_derivatives())
        throw DimensionError("combined_payoff: q/p length must equal derivative count");
    TerminalWealth w = terminal_wealth(m, x - q.dot(p), strategy);
    if (q.size() > 0) w += m.payoffs * q;
    return w;
}

} // namespace semistatic
