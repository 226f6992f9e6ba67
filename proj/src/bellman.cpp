#include "rddp/bellman.hpp"

#include <cstdio>
#include <sstream>

namespace rddp {

std::string format_state(const Vector& x) {
    std::ostringstream out;
    out << '[';
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x[i]);
        out << (i ? ", " : "") << buf;
    }
    out << ']';
    return out.str();
}

InfeasibleStage::InfeasibleStage(int t_, int d_, const Vector& x_, const std::string& context)
    : std::runtime_error("no admissible action at t=" + std::to_string(t_) + ", d=" + std::to_string(d_) +
                         ", x=" + format_state(x_) + (context.empty() ? "" : " (" + context + ")")),
      t(t_), d(d_), x(x_) {}

StageLp build_stage_lp(const MdpModel& model, int t, int d, const Vector& x, const CutSet& next_cuts) {
    const auto& st = model.states.at(static_cast<size_t>(d));
    const auto& con = st.constraints;
    const auto& cost = model.cost;
    const auto& risk = model.risk;
    const int m = model.m;
    const int num_out = static_cast<int>(st.outcomes.size());

    StageLayout L;
    L.m = m;
    L.outcomes = num_out;
    L.robust = risk.robust();
    L.terminal = (t + 1 == model.horizon);
    L.col_mu = m;
    int col = m + 1;
    if (!L.robust) {
        L.col_xi = col;
        col += num_out;
    }
    L.col_z = col;
    col += num_out;
    if (!L.terminal) {
        L.col_y = col;
        col += num_out;
    }
    L.num_cols = col;

    // Cut rows, cut-major.
    if (!L.terminal) {
        size_t max_cuts = 0;
        for (int w = 0; w < num_out; ++w) {
            const int nd = st.outcomes[static_cast<size_t>(w)].next_d;
            const auto& list = next_cuts.cuts(t + 1, nd);
            if (list.empty())
                throw ConfigurationError("no cuts for stage " + std::to_string(t + 1) + ", discrete state " +
                                         std::to_string(nd));
            max_cuts = std::max(max_cuts, list.size());
        }
        for (size_t j = 0; j < max_cuts; ++j)
            for (int w = 0; w < num_out; ++w)
                if (j < next_cuts.cuts(t + 1, st.outcomes[static_cast<size_t>(w)].next_d).size())
                    L.cut_rows.emplace_back(w, static_cast<int>(j));
    }

    int n_eq_con = 0, n_ge_con = 0;
    for (Eigen::Index i = 0; i < con.rows(); ++i) {
        if (con.row_sense(i) == RowSense::Equal)
            L.constraint_rows.emplace_back(true, n_eq_con++);
        else
            L.constraint_rows.emplace_back(false, n_ge_con++);
    }
    L.eq_cost_row0 = n_eq_con;
    L.ge_risk_row0 = n_ge_con;
    L.ge_cut_row0 = n_ge_con + num_out;

    const int n_eq = n_eq_con + num_out;
    const int n_ge = n_ge_con + num_out + static_cast<int>(L.cut_rows.size());

    lp::Problem p(L.num_cols);
    p.eq_matrix = Matrix::Zero(n_eq, L.num_cols);
    p.eq_rhs = Vector::Zero(n_eq);
    p.ge_matrix = Matrix::Zero(n_ge, L.num_cols);
    p.ge_rhs = Vector::Zero(n_ge);

    // Admissible actions: A a (sense) b - X x.
    const Vector con_rhs = con.rows() > 0 ? Vector(con.b_vec - con.x_mat * x) : Vector(0);
    for (Eigen::Index i = 0; i < con.rows(); ++i) {
        const auto [is_eq, r] = L.constraint_rows[static_cast<size_t>(i)];
        if (is_eq) {
            p.eq_matrix.row(r).head(m) = con.a_mat.row(i);
            p.eq_rhs[r] = con_rhs[i];
        } else {
            p.ge_matrix.row(r).head(m) = con.a_mat.row(i);
            p.ge_rhs[r] = con_rhs[i];
        }
    }
    p.lower.head(m) = con.lower;
    p.upper.head(m) = con.upper;

    // lambda * mu, or lambda * w for the worst-case epigraph.
    const double lambda = risk.lambda;
    p.objective[L.col_mu] = lambda;

    for (int w = 0; w < num_out; ++w) {
        const auto& o = st.outcomes[static_cast<size_t>(w)];
        const double pw = o.prob;
        const int cz = L.col_z + w;

        // Cost definition: z(w) - (c_a + T_a' c_n)' a [- y(w)] = (c_x + T_x' c_n)' x + c_n' U.
        const int re = L.eq_cost_row0 + w;
        p.eq_matrix(re, cz) = 1.0;
        p.eq_matrix.row(re).head(m) = -(cost.c_a + o.t_a.transpose() * cost.c_n).transpose();
        if (!L.terminal) p.eq_matrix(re, L.col_y + w) = -1.0;
        p.eq_rhs[re] = (cost.c_x + o.t_x.transpose() * cost.c_n).dot(x) + cost.c_n.dot(o.u);

        // Risk rows: xi(w) + mu - z(w) >= 0, or w - z(w) >= 0 in the robust form.
        const int rr = L.ge_risk_row0 + w;
        p.ge_matrix(rr, L.col_mu) = 1.0;
        p.ge_matrix(rr, cz) = -1.0;
        if (!L.robust) {
            p.ge_matrix(rr, L.col_xi + w) = 1.0;
            p.lower[L.col_xi + w] = 0.0;
            p.objective[L.col_xi + w] = pw * lambda / risk.alpha;
        }
        p.objective[cz] = pw * (1.0 - lambda);
    }

    // Cut rows: y(w) - q_j' T_a a >= q_j' (T_x x + U) + q_c.
    for (size_t r = 0; r < L.cut_rows.size(); ++r) {
        const auto [w, j] = L.cut_rows[r];
        const auto& o = st.outcomes[static_cast<size_t>(w)];
        const auto& cut = next_cuts.cuts(t + 1, o.next_d)[static_cast<size_t>(j)];
        const int row = L.ge_cut_row0 + static_cast<int>(r);
        p.ge_matrix(row, L.col_y + w) = 1.0;
        p.ge_matrix.row(row).head(m) = -(o.t_a.transpose() * cut.q_x).transpose();
        p.ge_rhs[row] = cut.q_x.dot(o.t_x * x + o.u) + cut.q_c;
    }

    return {std::move(p), std::move(L)};
}

StageSolution solve_stage(const MdpModel& model, int t, int d, const Vector& x, const CutSet& next_cuts,
                          lp::Basis* warm_start) {
    auto stage = build_stage_lp(model, t, d, x, next_cuts);
    const auto& L = stage.layout;
    lp::Solution sol = (warm_start && !warm_start->empty()) ? lp::solve(stage.problem, *warm_start)
                                                           : lp::solve(stage.problem);
    if (sol.status == lp::Status::NumericalFailure && warm_start && !warm_start->empty())
        sol = lp::solve(stage.problem);  // retry from scratch before giving up

    switch (sol.status) {
    case lp::Status::Optimal: break;
    case lp::Status::Infeasible: throw InfeasibleStage(t, d, x);
    case lp::Status::Unbounded:
        throw NumericalFailure("stage LP unbounded at t=" + std::to_string(t) + ", d=" + std::to_string(d) +
                               " (action boxes must be finite)");
    default:
        throw NumericalFailure("stage LP at t=" + std::to_string(t) + ", d=" + std::to_string(d) +
                               ", x=" + format_state(x) + ": " + sol.message);
    }

    StageSolution out;
    out.action = sol.primal.head(model.m);
    out.value = sol.objective;
    out.layout = L;
    out.pivots = sol.iterations;

    const auto& con = model.states[static_cast<size_t>(d)].constraints;
    out.duals.constraints.resize(con.rows());
    for (size_t i = 0; i < L.constraint_rows.size(); ++i) {
        const auto [is_eq, r] = L.constraint_rows[i];
        out.duals.constraints[static_cast<Eigen::Index>(i)] = is_eq ? sol.duals_eq[r] : sol.duals_ge[r];
    }
    out.duals.cost_rows = sol.duals_eq.segment(L.eq_cost_row0, L.outcomes);
    out.duals.risk_rows = sol.duals_ge.segment(L.ge_risk_row0, L.outcomes);
    out.duals.cut_rows = sol.duals_ge.segment(L.ge_cut_row0, static_cast<Eigen::Index>(L.cut_rows.size()));
    const Vector rc = sol.reduced_costs.head(model.m);
    out.duals.lower_bound = rc.cwiseMax(0.0);
    out.duals.upper_bound = rc.cwiseMin(0.0);

    if (warm_start) *warm_start = sol.basis;
    out.basis = std::move(sol.basis);
    return out;
}

Cut extract_cut(const MdpModel& model, int t, int d, const Vector& x_hat, const StageSolution& stage,
                const CutSet& next_cuts) {
    const auto& st = model.states.at(static_cast<size_t>(d));
    const auto& con = st.constraints;
    const auto& cost = model.cost;
    const auto& L = stage.layout;

    Vector slope = Vector::Zero(model.n);
    if (con.rows() > 0) slope -= con.x_mat.transpose() * stage.duals.constraints;
    for (int w = 0; w < L.outcomes; ++w) {
        const auto& o = st.outcomes[static_cast<size_t>(w)];
        slope += stage.duals.cost_rows[w] * (cost.c_x + o.t_x.transpose() * cost.c_n);
    }
    for (size_t r = 0; r < L.cut_rows.size(); ++r) {
        const double delta = stage.duals.cut_rows[static_cast<Eigen::Index>(r)];
        if (delta == 0.0) continue;
        const auto [w, j] = L.cut_rows[r];
        const auto& o = st.outcomes[static_cast<size_t>(w)];
        const auto& q = next_cuts.cuts(t + 1, o.next_d)[static_cast<size_t>(j)].q_x;
        slope += delta * (o.t_x.transpose() * q);
    }

    Cut cut;
    cut.q_x = std::move(slope);
    cut.q_c = stage.value - cut.q_x.dot(x_hat);
    cut.origin.t = t;
    cut.origin.d = d;
    cut.origin.x_hat = x_hat;
    return cut;
}

}  // namespace rddp
