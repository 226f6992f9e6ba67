#include "rddp/oracle.hpp"

#include "rddp/bellman.hpp"
#include "rddp/lp.hpp"

#include <utility>
#include <vector>

namespace rddp {

OracleTooLarge::OracleTooLarge(long nodes_, long columns_, const OracleLimits& limits)
    : std::runtime_error("scenario tree too large for the exact oracle: " + std::to_string(nodes_) +
                         " decision nodes (limit " + std::to_string(limits.max_nodes) + "), " +
                         std::to_string(columns_) + " LP columns (limit " + std::to_string(limits.max_columns) +
                         ")"),
      nodes(nodes_), columns(columns_) {}

long scenario_tree_nodes(const MdpModel& model, int t, int d) {
    if (t >= model.horizon) return 0;
    long total = 1;
    for (const auto& o : model.states.at(static_cast<size_t>(d)).outcomes) {
        total += scenario_tree_nodes(model, t + 1, o.next_d);
        if (total > (1L << 40)) return total;
    }
    return total;
}

namespace {

struct SparseRow {
    std::vector<std::pair<int, double>> coef;
    double rhs = 0.0;
    bool equality = false;
};

class TreeBuilder {
public:
    TreeBuilder(const MdpModel& model) : model_(model) {}

    /// Adds the subtree of (t, d) whose state columns start at x_col.
    /// Returns the column of the node value V.
    int add_node(int t, int d, int x_col) {
        const auto& st = model_.states[static_cast<size_t>(d)];
        const auto& con = st.constraints;
        const auto& cost = model_.cost;
        const auto& risk = model_.risk;
        const int n = model_.n, m = model_.m;
        const int K = static_cast<int>(st.outcomes.size());
        const bool robust = risk.robust();

        const int a_col = new_cols(m, 0.0, 0.0);
        for (int i = 0; i < m; ++i) {
            lower_[static_cast<size_t>(a_col + i)] = con.lower[i];
            upper_[static_cast<size_t>(a_col + i)] = con.upper[i];
        }
        const int v_col = new_cols(1, -lp::kInf, lp::kInf);
        const int mu_col = new_cols(1, -lp::kInf, lp::kInf);
        const int xi_col = robust ? -1 : new_cols(K, 0.0, lp::kInf);

        // A a + X x (sense) b
        for (Eigen::Index i = 0; i < con.rows(); ++i) {
            SparseRow r;
            for (int j = 0; j < m; ++j) push(r, a_col + j, con.a_mat(i, j));
            for (int j = 0; j < n; ++j) push(r, x_col + j, con.x_mat(i, j));
            r.rhs = con.b_vec[i];
            r.equality = con.row_sense(i) == RowSense::Equal;
            rows_.push_back(std::move(r));
        }

        // Value row: V - lambda mu - sum_w p_w ((1-lambda) Z_w + lambda/alpha xi_w) >= 0
        SparseRow value_row;
        push(value_row, v_col, 1.0);
        push(value_row, mu_col, -risk.lambda);

        for (int w = 0; w < K; ++w) {
            const auto& o = st.outcomes[static_cast<size_t>(w)];
            // Z_w = ga' a + gx' x + c_n' U + V_child
            const Vector ga = cost.c_a + o.t_a.transpose() * cost.c_n;
            const Vector gx = cost.c_x + o.t_x.transpose() * cost.c_n;
            const double g0 = cost.c_n.dot(o.u);
            int child_v = -1;
            if (t + 1 < model_.horizon) {
                const int cx = new_cols(n, -lp::kInf, lp::kInf);
                for (int i = 0; i < n; ++i) {
                    SparseRow r;
                    r.equality = true;
                    push(r, cx + i, 1.0);
                    for (int j = 0; j < n; ++j) push(r, x_col + j, -o.t_x(i, j));
                    for (int j = 0; j < m; ++j) push(r, a_col + j, -o.t_a(i, j));
                    r.rhs = o.u[i];
                    rows_.push_back(std::move(r));
                }
                child_v = add_node(t + 1, o.next_d, cx);
            }

            // xi_w + mu - Z_w >= 0   (robust: w - Z_w >= 0)
            SparseRow rr;
            if (!robust) push(rr, xi_col + w, 1.0);
            push(rr, mu_col, 1.0);
            for (int j = 0; j < m; ++j) push(rr, a_col + j, -ga[j]);
            for (int j = 0; j < n; ++j) push(rr, x_col + j, -gx[j]);
            if (child_v >= 0) push(rr, child_v, -1.0);
            rr.rhs = g0;
            rows_.push_back(std::move(rr));

            const double wz = o.prob * (1.0 - risk.lambda);
            for (int j = 0; j < m; ++j) push(value_row, a_col + j, -wz * ga[j]);
            for (int j = 0; j < n; ++j) push(value_row, x_col + j, -wz * gx[j]);
            if (child_v >= 0) push(value_row, child_v, -wz);
            value_row.rhs += wz * g0;
            if (!robust) push(value_row, xi_col + w, -o.prob * risk.lambda / risk.alpha);
        }
        rows_.push_back(std::move(value_row));
        return v_col;
    }

    int new_cols(int count, double lo, double hi) {
        const int first = static_cast<int>(lower_.size());
        lower_.insert(lower_.end(), static_cast<size_t>(count), lo);
        upper_.insert(upper_.end(), static_cast<size_t>(count), hi);
        return first;
    }

    lp::Problem problem(int objective_col) const {
        const auto ncols = static_cast<Eigen::Index>(lower_.size());
        lp::Problem p(ncols);
        p.objective[objective_col] = 1.0;
        for (Eigen::Index j = 0; j < ncols; ++j) {
            p.lower[j] = lower_[static_cast<size_t>(j)];
            p.upper[j] = upper_[static_cast<size_t>(j)];
        }
        Eigen::Index ne = 0, ng = 0;
        for (const auto& r : rows_) (r.equality ? ne : ng)++;
        p.eq_matrix = Matrix::Zero(ne, ncols);
        p.eq_rhs = Vector::Zero(ne);
        p.ge_matrix = Matrix::Zero(ng, ncols);
        p.ge_rhs = Vector::Zero(ng);
        Eigen::Index ie = 0, ig = 0;
        for (const auto& r : rows_) {
            auto& mat = r.equality ? p.eq_matrix : p.ge_matrix;
            auto& rhs = r.equality ? p.eq_rhs : p.ge_rhs;
            auto& idx = r.equality ? ie : ig;
            for (const auto& [c, v] : r.coef) mat(idx, c) += v;
            rhs[idx] = r.rhs;
            ++idx;
        }
        return p;
    }

private:
    static void push(SparseRow& r, int col, double v) {
        if (v != 0.0) r.coef.emplace_back(col, v);
    }

    const MdpModel& model_;
    std::vector<double> lower_, upper_;
    std::vector<SparseRow> rows_;
};

}  // namespace

double exact_value(const MdpModel& model, int t, int d, const Vector& x, const OracleLimits& limits) {
    if (t >= model.horizon) return 0.0;
    const long nodes = scenario_tree_nodes(model, t, d);
    // Columns: root state plus, per node, action, value, risk and state variables.
    long columns = model.n;
    if (nodes <= limits.max_nodes) {
        const auto per_node = [&](int dd) {
            const auto k = static_cast<long>(model.states[static_cast<size_t>(dd)].outcomes.size());
            return model.m + 2 + (model.risk.robust() ? 0 : k) + k * model.n;
        };
        std::vector<std::pair<int, int>> stack{{t, d}};
        while (!stack.empty() && columns <= limits.max_columns) {
            auto [tt, dd] = stack.back();
            stack.pop_back();
            columns += per_node(dd);
            if (tt + 1 < model.horizon)
                for (const auto& o : model.states[static_cast<size_t>(dd)].outcomes) stack.emplace_back(tt + 1, o.next_d);
        }
    }
    if (nodes > limits.max_nodes || columns > limits.max_columns) throw OracleTooLarge(nodes, columns, limits);

    TreeBuilder tb(model);
    const int root_x = tb.new_cols(model.n, 0.0, 0.0);
    const int root_v = tb.add_node(t, d, root_x);
    lp::Problem p = tb.problem(root_v);
    p.lower.segment(root_x, model.n) = x;
    p.upper.segment(root_x, model.n) = x;

    const auto sol = lp::solve(p);
    switch (sol.status) {
    case lp::Status::Optimal: return sol.objective;
    case lp::Status::Infeasible: throw InfeasibleStage(t, d, x, "exact oracle");
    default: throw NumericalFailure("exact oracle LP: " + sol.message);
    }
}

double exact_oracle(const MdpModel& model, const OracleLimits& limits) {
    return exact_value(model, 0, model.initial_d, model.initial_x, limits);
}

}  // namespace rddp
