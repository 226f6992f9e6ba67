#pragma once

#include "rddp/model.hpp"

#include <stdexcept>

namespace rddp {

struct OracleLimits {
    /// Decision nodes in the scenario tree below the root.
    long max_nodes = 100000;
    /// Columns of the extensive-form LP; the dense simplex bounds this far
    /// below the node limit.
    long max_columns = 4000;
};

class OracleTooLarge : public std::runtime_error {
public:
    OracleTooLarge(long nodes, long columns, const OracleLimits& limits);
    long nodes;
    long columns;
};

/// Number of decision nodes of the scenario tree rooted at stage t in state d.
long scenario_tree_nodes(const MdpModel& model, int t, int d);

/// Exact optimal value v_t(d, x) of the nested risk-averse problem, solved as
/// one extensive-form LP over the full scenario tree rooted at (t, d, x).
/// Every node carries its own action, continuous state and risk variables;
/// the one-step risk mapping enters through its LP epigraph.
/// Throws OracleTooLarge, InfeasibleStage or NumericalFailure.
double exact_value(const MdpModel& model, int t, int d, const Vector& x, const OracleLimits& limits = {});

/// exact_value at the initial state.
double exact_oracle(const MdpModel& model, const OracleLimits& limits = {});

}  // namespace rddp
