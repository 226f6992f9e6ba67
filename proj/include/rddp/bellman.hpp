#pragma once

#include "rddp/lp.hpp"
#include "rddp/model.hpp"
#include "rddp/value.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace rddp {

/// Cut sets required by a stage LP are missing.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The stage LP has no admissible action: complete recourse fails at (d, x).
class InfeasibleStage : public std::runtime_error {
public:
    InfeasibleStage(int t, int d, const Vector& x, const std::string& context = {});
    int t, d;
    Vector x;
};

/// The LP solver broke down or returned an impossible status.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string format_state(const Vector& x);

/// Column and row positions inside the stage LP. Columns are
/// [a (m) | mu or w (1) | xi (K, absent in the robust form) | z (K) | y (K, absent at the last stage)].
/// Equality rows: constraint rows with '=' sense, then one cost row per outcome.
/// Inequality rows: constraint rows with '>=' sense, one risk row per outcome,
/// then cut rows ordered cut-major (all outcomes of cut 0, then cut 1, ...)
/// so that adding cuts only appends rows.
struct StageLayout {
    int m = 0;
    int outcomes = 0;
    bool robust = false;
    bool terminal = false;
    int col_mu = 0;
    int col_xi = -1;
    int col_z = 0;
    int col_y = -1;
    int num_cols = 0;

    /// For each constraint row: (is_equality, index within its block).
    std::vector<std::pair<bool, int>> constraint_rows;
    int eq_cost_row0 = 0;
    int ge_risk_row0 = 0;
    int ge_cut_row0 = 0;
    /// (outcome, cut index into the next-stage cut list) of every cut row.
    std::vector<std::pair<int, int>> cut_rows;
};

struct StageLp {
    lp::Problem problem;
    StageLayout layout;
};

/// Builds the stage LP at (t, d, x) against the stage t+1 cuts.
/// Throws ConfigurationError if a reachable next state has no cuts.
StageLp build_stage_lp(const MdpModel& model, int t, int d, const Vector& x, const CutSet& next_cuts);

struct StageDuals {
    Vector constraints;  // one per constraint row of A_d, in model order
    Vector cost_rows;    // per outcome
    Vector lower_bound;  // active lower action bounds (>= 0)
    Vector upper_bound;  // active upper action bounds (<= 0)
    Vector cut_rows;     // per entry of StageLayout::cut_rows
    Vector risk_rows;    // per outcome; diagnostics only
};

struct StageSolution {
    Vector action;
    double value = 0.0;
    StageDuals duals;
    StageLayout layout;
    lp::Basis basis;
    long pivots = 0;
};

/// Solves the stage LP. A non-null warm start basis is used as the starting
/// point and overwritten with the optimal basis.
/// Throws InfeasibleStage, NumericalFailure or ConfigurationError.
StageSolution solve_stage(const MdpModel& model, int t, int d, const Vector& x, const CutSet& next_cuts,
                          lp::Basis* warm_start = nullptr);

/// Subgradient cut of the stage value function from the optimal duals,
/// tight at x_hat: slope = -X_d' delta1 + sum_w delta2(w) (c_x + T_x(w)' c_n)
///                         + sum_{w,j} delta5(w,j) T_x(w)' q_{x,j},
/// intercept = value - slope' x_hat.
Cut extract_cut(const MdpModel& model, int t, int d, const Vector& x_hat, const StageSolution& stage,
                const CutSet& next_cuts);

}  // namespace rddp
