#ifndef SEMISTATIC_ERRORS_HPP
#define SEMISTATIC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace semistatic {

// Market spec failed structural validation (bad tree, bad probabilities,
// bad payoff table, malformed JSON field).
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The market admits arbitrage (no equivalent martingale measure), or a
// quoted derivative price lies outside the arbitrage-free set.
struct ArbitrageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical routine failed to converge or hit an iteration cap.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A region that must be bounded for the requested computation is not
// (vertex enumeration, largest feasible position, cone radius).
struct UnboundedRegionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent dimensions, or a dimension above a configured cap.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace semistatic

#endif
