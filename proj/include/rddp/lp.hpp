#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

/// Dense bounded-variable primal simplex.
///
/// Problem:   minimize   c' z
///            subject to E z  = f        (equality rows)
///                       G z >= h        (inequality rows)
///                       lower <= z <= upper   (entries may be infinite)
///
/// Sign conventions (the cut extraction in bellman relies on these):
///   * duals_eq[i], duals_ge[i] are the sensitivities d(objective)/d(rhs_i)
///     of the optimal value to the right-hand side of row i. Consequently
///     duals_ge >= 0 for a minimization.
///   * reduced_costs[j] = c_j - (E' y_eq + G' y_ge)_j is the dual of the active
///     variable bound: >= 0 when z_j sits at its lower bound, <= 0 at its upper
///     bound, 0 for basic variables.
///   * objective == y_eq' f + y_ge' h + sum_j reduced_costs[j] * z_j
///     (strong duality; checked before Optimal is returned).
///
/// Each ">=" row carries an implicit surplus variable. The basis matrix is
/// never formed explicitly: only the square block of rows whose surplus is
/// nonbasic against basic structural columns is factorized, so the linear
/// algebra scales with the number of structural variables rather than with
/// the number of rows.
namespace rddp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

std::string to_string(Status s);

struct Problem {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_matrix;
    Eigen::VectorXd eq_rhs;
    Eigen::MatrixXd ge_matrix;
    Eigen::VectorXd ge_rhs;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Problem() = default;
    /// Zero objective, no rows, free variables.
    explicit Problem(Eigen::Index num_vars);

    Eigen::Index num_vars() const { return objective.size(); }
    Eigen::Index num_eq() const { return eq_matrix.rows(); }
    Eigen::Index num_ge() const { return ge_matrix.rows(); }

    void add_eq_row(const Eigen::RowVectorXd& row, double rhs);
    void add_ge_row(const Eigen::RowVectorXd& row, double rhs);
};

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

/// Warm-start information. Rows are indexed equality rows first, then
/// inequality rows. A basis recorded for a problem with fewer rows may be
/// reused when rows are only appended: the extra rows start with a basic
/// surplus.
struct Basis {
    std::vector<VarState> columns;
    std::vector<bool> row_slack_basic;

    bool empty() const { return columns.empty(); }
};

struct Options {
    double pivot_tol = 1e-10;
    double feasibility_tol = 1e-8;
    double optimality_tol = 1e-9;
    /// Zero means 50 * (rows + cols) + 1000.
    long max_iterations = 0;
};

struct Solution {
    Status status = Status::NumericalFailure;
    Eigen::VectorXd primal;
    Eigen::VectorXd duals_eq;
    Eigen::VectorXd duals_ge;
    Eigen::VectorXd reduced_costs;
    double objective = 0.0;
    long iterations = 0;
    Basis basis;
    std::string message;

    bool optimal() const { return status == Status::Optimal; }
};

Solution solve(const Problem& problem, const Options& options = {});
Solution solve(const Problem& problem, const Basis& warm_start, const Options& options = {});

/// Self-check of an Optimal solution: primal feasibility, dual sign
/// feasibility, strong duality and complementary slackness. Returns an empty
/// string when everything holds, otherwise a description of the failure.
std::string check_optimality(const Problem& problem, const Solution& sol);

}  // namespace rddp::lp
