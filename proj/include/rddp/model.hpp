#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rddp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Weight on AV@R and its tail level for the one-step risk mapping
/// rho(Z) = (1 - lambda) E[Z] + lambda AV@R_alpha(Z).
/// alpha == 0 selects the worst-case (robust) evaluation.
struct RiskParams {
    double lambda = 0.0;
    double alpha = 1.0;

    bool robust() const { return alpha == 0.0; }
    bool operator==(const RiskParams&) const = default;
};

/// One atom of the finite sample space attached to a discrete state.
/// The continuous state moves to t_x * x + t_a * a + u and the discrete
/// state to next_d.
struct Outcome {
    double prob = 0.0;
    int next_d = 0;
    Matrix t_x;
    Matrix t_a;
    Vector u;
};

enum class RowSense { Equal, GreaterEqual };

/// Admissible actions at (d, x):
///   a_mat * a (sense) b_vec - x_mat * x,   lower <= a <= upper.
/// Rows default to equalities; GreaterEqual rows express polyhedral
/// inequalities such as the non-negativity constraints of the portfolio.
struct StageConstraints {
    Matrix a_mat;
    Vector b_vec;
    Matrix x_mat;
    std::vector<RowSense> sense;
    Vector lower;
    Vector upper;

    Eigen::Index rows() const { return a_mat.rows(); }
    RowSense row_sense(Eigen::Index i) const {
        return sense.empty() ? RowSense::Equal : sense[static_cast<size_t>(i)];
    }
};

/// c(s, a, s') = c_a' a + c_x' x + c_n' x'
struct CostSpec {
    Vector c_a;
    Vector c_x;
    Vector c_n;
};

/// Box containing every continuous state reachable from the initial state.
struct StateBox {
    Vector lower;
    Vector upper;
};

struct DiscreteState {
    StageConstraints constraints;
    std::vector<Outcome> outcomes;
};

/// Hybrid linearly controlled MDP. Decisions are taken at stages
/// t = 0 .. horizon-1; the value function at t = horizon is identically 0.
struct MdpModel {
    int horizon = 1;
    int n = 0;
    int m = 0;
    RiskParams risk;
    int initial_d = 0;
    Vector initial_x;
    std::vector<DiscreteState> states;
    CostSpec cost;
    std::optional<StateBox> state_box;

    int num_discrete() const { return static_cast<int>(states.size()); }
};

/// Reports every violated well-formedness condition. An empty list means
/// the model is valid. Complete recourse is only smoke-checked: one LP
/// per discrete state tests that the admissible set is non-empty at x = 0.
std::vector<std::string> validate(const MdpModel& model);

/// Copy of the model with zero-probability outcomes removed.
MdpModel drop_null_outcomes(MdpModel model);

class ModelParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses an instance document. Throws ModelParseError naming the offending
/// field or the byte offset of malformed JSON. Zero-probability outcomes
/// are dropped; validation is left to the caller.
MdpModel load_model(std::string_view text);
std::string save_model(const MdpModel& model);

MdpModel load_model_file(const std::string& path);
void save_model_file(const MdpModel& model, const std::string& path);

/// Stage cost c_a' a + c_x' x + c_n' x' for a realized transition.
double stage_cost(const MdpModel& model, const Vector& x, const Vector& a, const Vector& x_next);

/// Next continuous state under outcome w.
Vector transition(const Outcome& w, const Vector& x, const Vector& a);

}  // namespace rddp
