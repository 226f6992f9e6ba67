#include "rddp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rddp::lp {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical failure";
    case Status::IterationLimit: return "iteration limit";
    }
    return "unknown";
}

Problem::Problem(Index num_vars)
    : objective(VectorXd::Zero(num_vars)),
      eq_matrix(0, num_vars),
      eq_rhs(0),
      ge_matrix(0, num_vars),
      ge_rhs(0),
      lower(VectorXd::Constant(num_vars, -kInf)),
      upper(VectorXd::Constant(num_vars, kInf)) {}

void Problem::add_eq_row(const Eigen::RowVectorXd& row, double rhs) {
    eq_matrix.conservativeResize(eq_matrix.rows() + 1, num_vars());
    eq_matrix.row(eq_matrix.rows() - 1) = row;
    eq_rhs.conservativeResize(eq_rhs.size() + 1);
    eq_rhs[eq_rhs.size() - 1] = rhs;
}

void Problem::add_ge_row(const Eigen::RowVectorXd& row, double rhs) {
    ge_matrix.conservativeResize(ge_matrix.rows() + 1, num_vars());
    ge_matrix.row(ge_matrix.rows() - 1) = row;
    ge_rhs.conservativeResize(ge_rhs.size() + 1);
    ge_rhs[ge_rhs.size() - 1] = rhs;
}

namespace {

constexpr double kDegenerateStep = 1e-12;
constexpr double kMinRcond = 1e-14;

struct Step {
    enum class Kind { None, Flip, Leave } kind = Kind::None;
    double theta = kInf;
    // Leaving variable: structural column index, or row index for a surplus.
    bool leaving_is_slack = false;
    Index leaving = -1;
    bool to_upper = false;
};

class Simplex {
public:
    Simplex(const Problem& p, const Options& opt)
        : p_(p), opt_(opt), n_(p.num_vars()), me_(p.num_eq()), mr_(p.num_eq() + p.num_ge()) {
        mat_.resize(mr_, n_);
        if (me_ > 0) mat_.topRows(me_) = p.eq_matrix;
        if (mr_ > me_) mat_.bottomRows(mr_ - me_) = p.ge_matrix;
        rhs_.resize(mr_);
        if (me_ > 0) rhs_.head(me_) = p.eq_rhs;
        if (mr_ > me_) rhs_.tail(mr_ - me_) = p.ge_rhs;
        max_iter_ = opt.max_iterations > 0 ? opt.max_iterations : 50 * (mr_ + n_) + 1000;
        bland_after_ = 3 * (mr_ + n_);
    }

    Solution run(const Basis* warm) {
        Solution sol;
        if (!(warm && load_basis(*warm) && factor())) {
            cold_basis();
            if (!factor()) return fail(sol, Status::NumericalFailure, "singular initial basis");
        }
        compute_primal();

        // Phase 1: drive the sum of bound violations to zero.
        if (infeasibility() > 0.0) {
            const Status st = iterate(true);
            if (st != Status::Optimal) return fail(sol, st, "phase 1 stopped");
            if (infeasibility() > 0.0) return fail(sol, Status::Infeasible, "");
        }
        bland_ = false;
        degenerate_run_ = 0;
        const Status st = iterate(false);
        if (st != Status::Optimal) return fail(sol, st, "phase 2 stopped");
        return finish(sol);
    }

private:
    // ---- bounds -----------------------------------------------------------
    double col_lo(Index j) const { return p_.lower[j]; }
    double col_up(Index j) const { return p_.upper[j]; }
    double slack_up(Index i) const { return i < me_ ? 0.0 : kInf; }
    double tol_for(double bound) const {
        return opt_.feasibility_tol * (1.0 + (std::isfinite(bound) ? std::abs(bound) : 0.0));
    }

    double nonbasic_value(Index j) const {
        switch (state_[static_cast<size_t>(j)]) {
        case VarState::AtLower: return col_lo(j);
        case VarState::AtUpper: return col_up(j);
        default: return 0.0;
        }
    }

    // ---- basis management -------------------------------------------------
    void cold_basis() {
        state_.assign(static_cast<size_t>(n_), VarState::AtLower);
        for (Index j = 0; j < n_; ++j) {
            if (std::isfinite(col_lo(j)))
                state_[static_cast<size_t>(j)] = VarState::AtLower;
            else if (std::isfinite(col_up(j)))
                state_[static_cast<size_t>(j)] = VarState::AtUpper;
            else
                state_[static_cast<size_t>(j)] = VarState::FreeZero;
        }
        slack_basic_.assign(static_cast<size_t>(mr_), true);
        basic_cols_.clear();
        tight_rows_.clear();
    }

    bool load_basis(const Basis& b) {
        if (static_cast<Index>(b.columns.size()) != n_) return false;
        if (static_cast<Index>(b.row_slack_basic.size()) > mr_) return false;
        state_ = b.columns;
        slack_basic_.assign(static_cast<size_t>(mr_), true);
        std::copy(b.row_slack_basic.begin(), b.row_slack_basic.end(), slack_basic_.begin());
        basic_cols_.clear();
        tight_rows_.clear();
        for (Index j = 0; j < n_; ++j) {
            auto& s = state_[static_cast<size_t>(j)];
            if (s == VarState::Basic) {
                basic_cols_.push_back(j);
                continue;
            }
            // Repair states that do not match the bounds of this problem.
            if (s == VarState::AtLower && !std::isfinite(col_lo(j)))
                s = std::isfinite(col_up(j)) ? VarState::AtUpper : VarState::FreeZero;
            else if (s == VarState::AtUpper && !std::isfinite(col_up(j)))
                s = std::isfinite(col_lo(j)) ? VarState::AtLower : VarState::FreeZero;
            else if (s == VarState::FreeZero && (std::isfinite(col_lo(j)) || std::isfinite(col_up(j))))
                s = std::isfinite(col_lo(j)) ? VarState::AtLower : VarState::AtUpper;
        }
        for (Index i = 0; i < mr_; ++i)
            if (!slack_basic_[static_cast<size_t>(i)]) tight_rows_.push_back(i);
        return basic_cols_.size() == tight_rows_.size();
    }

    bool factor() {
        const auto k = static_cast<Index>(basic_cols_.size());
        if (k != static_cast<Index>(tight_rows_.size())) return false;
        if (k == 0) return true;
        kmat_ = mat_(tight_rows_, basic_cols_);
        lu_.compute(kmat_);
        return lu_.rcond() > kMinRcond;
    }

    void compute_primal() {
        z_.resize(n_);
        for (Index j = 0; j < n_; ++j)
            z_[j] = state_[static_cast<size_t>(j)] == VarState::Basic ? 0.0 : nonbasic_value(j);
        if (!basic_cols_.empty()) {
            const VectorXd partial = mat_ * z_;
            VectorXd r(static_cast<Index>(tight_rows_.size()));
            for (size_t a = 0; a < tight_rows_.size(); ++a)
                r[static_cast<Index>(a)] = rhs_[tight_rows_[a]] - partial[tight_rows_[a]];
            const VectorXd zb = lu_.solve(r);
            for (size_t a = 0; a < basic_cols_.size(); ++a) z_[basic_cols_[a]] = zb[static_cast<Index>(a)];
        }
        s_ = mat_ * z_ - rhs_;
        for (Index i : tight_rows_) s_[i] = 0.0;
    }

    /// Sum of bound violations of basic variables beyond tolerance.
    double infeasibility() const {
        double sum = 0.0;
        for (Index j : basic_cols_) sum += violation(z_[j], col_lo(j), col_up(j));
        for (Index i = 0; i < mr_; ++i)
            if (slack_basic_[static_cast<size_t>(i)]) sum += violation(s_[i], 0.0, slack_up(i));
        return sum;
    }

    double violation(double v, double lo, double up) const {
        if (v < lo - tol_for(lo)) return lo - v;
        if (v > up + tol_for(up)) return v - up;
        return 0.0;
    }

    double phase_cost(double v, double lo, double up) const {
        if (v < lo - tol_for(lo)) return -1.0;
        if (v > up + tol_for(up)) return 1.0;
        return 0.0;
    }

    /// Row duals y and structural reduced costs d for the current phase.
    void compute_duals(bool phase1) {
        y_ = VectorXd::Zero(mr_);
        VectorXd cb(static_cast<Index>(basic_cols_.size()));
        for (size_t a = 0; a < basic_cols_.size(); ++a) {
            const Index j = basic_cols_[a];
            cb[static_cast<Index>(a)] = phase1 ? phase_cost(z_[j], col_lo(j), col_up(j)) : p_.objective[j];
        }
        bool slack_costs = false;
        if (phase1) {
            for (Index i = 0; i < mr_; ++i) {
                if (!slack_basic_[static_cast<size_t>(i)]) continue;
                const double c = phase_cost(s_[i], 0.0, slack_up(i));
                if (c != 0.0) {
                    y_[i] = -c;
                    slack_costs = true;
                }
            }
        }
        if (!basic_cols_.empty()) {
            if (slack_costs) {
                for (size_t a = 0; a < basic_cols_.size(); ++a)
                    cb[static_cast<Index>(a)] -= mat_.col(basic_cols_[a]).dot(y_);
            }
            const VectorXd yk = lu_.transpose().solve(cb);
            for (size_t a = 0; a < tight_rows_.size(); ++a) y_[tight_rows_[a]] = yk[static_cast<Index>(a)];
        }
        d_ = -(mat_.transpose() * y_);
        if (!phase1) d_ += p_.objective;
        for (Index j : basic_cols_) d_[j] = 0.0;
    }

    struct Entering {
        bool slack = false;
        Index index = -1;
        double direction = 0.0;
    };

    Entering price() const {
        Entering best;
        double best_score = 0.0;
        const double tol = opt_.optimality_tol;
        auto consider = [&](bool slack, Index idx, double dir, double score) {
            if (bland_) {
                if (best.index < 0) best = {slack, idx, dir};
                return;
            }
            if (score > best_score) {
                best_score = score;
                best = {slack, idx, dir};
            }
        };
        for (Index j = 0; j < n_; ++j) {
            const auto st = state_[static_cast<size_t>(j)];
            if (st == VarState::Basic) continue;
            if (col_lo(j) == col_up(j)) continue;
            const double dj = d_[j];
            if (st == VarState::AtLower && dj < -tol)
                consider(false, j, 1.0, -dj);
            else if (st == VarState::AtUpper && dj > tol)
                consider(false, j, -1.0, dj);
            else if (st == VarState::FreeZero && std::abs(dj) > tol)
                consider(false, j, dj > 0 ? -1.0 : 1.0, std::abs(dj));
        }
        for (Index i = me_; i < mr_; ++i) {
            if (slack_basic_[static_cast<size_t>(i)]) continue;
            // Reduced cost of a nonbasic surplus equals its row dual.
            if (y_[i] < -tol) consider(true, i, 1.0, -y_[i]);
        }
        return best;
    }

    /// Rates of change of all structurals and surpluses per unit step.
    void direction(const Entering& e) {
        dz_ = VectorXd::Zero(n_);
        VectorXd a_tight(static_cast<Index>(tight_rows_.size()));
        if (!e.slack) {
            for (size_t a = 0; a < tight_rows_.size(); ++a)
                a_tight[static_cast<Index>(a)] = mat_(tight_rows_[a], e.index);
            dz_[e.index] = e.direction;
        } else {
            a_tight.setZero();
            for (size_t a = 0; a < tight_rows_.size(); ++a)
                if (tight_rows_[a] == e.index) a_tight[static_cast<Index>(a)] = -1.0;
        }
        if (!basic_cols_.empty()) {
            const VectorXd w = lu_.solve(a_tight);
            for (size_t a = 0; a < basic_cols_.size(); ++a)
                dz_[basic_cols_[a]] = -e.direction * w[static_cast<Index>(a)];
        }
        ds_ = VectorXd::Zero(mr_);
        for (Index j = 0; j < n_; ++j)
            if (dz_[j] != 0.0) ds_.noalias() += dz_[j] * mat_.col(j);
        for (Index i : tight_rows_) ds_[i] = 0.0;
        if (e.slack) ds_[e.index] = e.direction;
    }

    struct Candidate {
        double theta_relaxed;
        double theta;
        double rate;
        bool slack;
        Index index;
        bool to_upper;
    };

    void ratio_candidate(std::vector<Candidate>& out, bool phase1, double v, double rate, double lo,
                         double up, bool slack, Index index) const {
        if (std::abs(rate) <= opt_.pivot_tol) return;
        const double tlo = tol_for(lo), tup = tol_for(up);
        if (phase1 && v < lo - tlo) {
            if (rate > 0) out.push_back({(lo - v + tlo) / rate, (lo - v) / rate, rate, slack, index, false});
            return;
        }
        if (phase1 && v > up + tup) {
            if (rate < 0) out.push_back({(v - up + tup) / -rate, (v - up) / -rate, rate, slack, index, true});
            return;
        }
        if (rate < 0 && std::isfinite(lo))
            out.push_back({std::max(0.0, v - lo + tlo) / -rate, std::max(0.0, v - lo) / -rate, rate, slack,
                           index, false});
        else if (rate > 0 && std::isfinite(up))
            out.push_back({std::max(0.0, up - v + tup) / rate, std::max(0.0, up - v) / rate, rate, slack,
                           index, true});
    }

    Step ratio_test(const Entering& e, bool phase1) {
        std::vector<Candidate> cands;
        for (Index j : basic_cols_) ratio_candidate(cands, phase1, z_[j], dz_[j], col_lo(j), col_up(j), false, j);
        for (Index i = 0; i < mr_; ++i) {
            if (!slack_basic_[static_cast<size_t>(i)]) continue;
            ratio_candidate(cands, phase1, s_[i], ds_[i], 0.0, slack_up(i), true, i);
        }

        Step step;
        if (!cands.empty()) {
            const Candidate* pick = nullptr;
            if (bland_) {
                double tmin = kInf;
                for (const auto& c : cands) tmin = std::min(tmin, c.theta);
                const double slack_tol = kDegenerateStep * (1.0 + tmin);
                auto key = [&](const Candidate& c) { return c.slack ? n_ + c.index : c.index; };
                for (const auto& c : cands)
                    if (c.theta <= tmin + slack_tol && (!pick || key(c) < key(*pick))) pick = &c;
            } else {
                // Harris two-pass: the largest pivot among ratios within the relaxed bound.
                double tmax = kInf;
                for (const auto& c : cands) tmax = std::min(tmax, c.theta_relaxed);
                for (const auto& c : cands)
                    if (c.theta <= tmax && (!pick || std::abs(c.rate) > std::abs(pick->rate))) pick = &c;
            }
            if (pick) {
                step.kind = Step::Kind::Leave;
                step.theta = std::max(0.0, pick->theta);
                step.leaving_is_slack = pick->slack;
                step.leaving = pick->index;
                step.to_upper = pick->to_upper;
            }
        }
        if (!e.slack) {
            const double span = col_up(e.index) - col_lo(e.index);
            if (std::isfinite(span) && span <= step.theta) {
                step.kind = Step::Kind::Flip;
                step.theta = span;
            }
        }
        return step;
    }

    void remove_from(std::vector<Index>& v, Index x) {
        auto it = std::find(v.begin(), v.end(), x);
        if (it != v.end()) {
            *it = v.back();
            v.pop_back();
        }
    }

    bool pivot(const Entering& e, const Step& step) {
        if (step.kind == Step::Kind::Flip) {
            auto& st = state_[static_cast<size_t>(e.index)];
            st = (st == VarState::AtLower) ? VarState::AtUpper : VarState::AtLower;
            compute_primal();
            return true;
        }
        // Leaving variable becomes nonbasic at the bound it reached.
        if (step.leaving_is_slack) {
            slack_basic_[static_cast<size_t>(step.leaving)] = false;
            tight_rows_.push_back(step.leaving);
        } else {
            state_[static_cast<size_t>(step.leaving)] = step.to_upper ? VarState::AtUpper : VarState::AtLower;
            remove_from(basic_cols_, step.leaving);
        }
        if (e.slack) {
            slack_basic_[static_cast<size_t>(e.index)] = true;
            remove_from(tight_rows_, e.index);
        } else {
            state_[static_cast<size_t>(e.index)] = VarState::Basic;
            basic_cols_.push_back(e.index);
        }
        if (!factor()) return false;
        compute_primal();
        return true;
    }

    Status iterate(bool phase1) {
        while (true) {
            if (phase1 && infeasibility() == 0.0) return Status::Optimal;
            if (iterations_ >= max_iter_) return Status::IterationLimit;
            compute_duals(phase1);
            const Entering e = price();
            if (e.index < 0) return Status::Optimal;
            direction(e);
            const Step step = ratio_test(e, phase1);
            if (step.kind == Step::Kind::None) return phase1 ? Status::NumericalFailure : Status::Unbounded;
            ++iterations_;
            if (step.theta <= kDegenerateStep) {
                if (++degenerate_run_ > bland_after_) bland_ = true;
            } else {
                degenerate_run_ = 0;
            }
            if (!pivot(e, step)) return Status::NumericalFailure;
        }
    }

    Solution& fail(Solution& sol, Status st, const std::string& msg) {
        sol.status = st;
        sol.iterations = iterations_;
        sol.message = msg.empty() ? to_string(st) : msg + ": " + to_string(st);
        return sol;
    }

    Solution& finish(Solution& sol) {
        compute_duals(false);
        sol.primal = z_;
        sol.duals_eq = y_.head(me_);
        sol.duals_ge = y_.tail(mr_ - me_);
        sol.reduced_costs = d_;
        sol.objective = p_.objective.dot(z_);
        sol.iterations = iterations_;
        sol.basis.columns = state_;
        sol.basis.row_slack_basic = slack_basic_;
        sol.status = Status::Optimal;
        if (auto msg = check_optimality(p_, sol); !msg.empty()) {
            sol.status = Status::NumericalFailure;
            sol.message = "self-check failed: " + msg;
        }
        return sol;
    }

    const Problem& p_;
    Options opt_;
    Index n_, me_, mr_;
    MatrixXd mat_;
    VectorXd rhs_;
    long max_iter_ = 0;
    long bland_after_ = 0;

    std::vector<VarState> state_;
    std::vector<bool> slack_basic_;
    std::vector<Index> basic_cols_;  // K columns
    std::vector<Index> tight_rows_;  // K rows
    MatrixXd kmat_;
    Eigen::PartialPivLU<MatrixXd> lu_;

    VectorXd z_, s_, y_, d_, dz_, ds_;
    long iterations_ = 0;
    long degenerate_run_ = 0;
    bool bland_ = false;
};

bool well_formed(const Problem& p, std::string& why) {
    const Index n = p.num_vars();
    if (n < 1) why = "problem has no variables";
    else if (p.lower.size() != n || p.upper.size() != n) why = "bound vectors have wrong length";
    else if (p.eq_matrix.cols() != n && p.eq_matrix.rows() > 0) why = "equality matrix has wrong width";
    else if (p.ge_matrix.cols() != n && p.ge_matrix.rows() > 0) why = "inequality matrix has wrong width";
    else if (p.eq_rhs.size() != p.eq_matrix.rows()) why = "equality rhs has wrong length";
    else if (p.ge_rhs.size() != p.ge_matrix.rows()) why = "inequality rhs has wrong length";
    else if ((p.lower.array() > p.upper.array()).any()) why = "lower bound above upper bound";
    return why.empty();
}

Solution run(const Problem& problem, const Basis* warm, const Options& options) {
    std::string why;
    if (!well_formed(problem, why)) {
        Solution sol;
        sol.status = Status::NumericalFailure;
        sol.message = "malformed problem: " + why;
        return sol;
    }
    Problem p = problem;
    if (p.eq_matrix.rows() == 0) p.eq_matrix.resize(0, p.num_vars());
    if (p.ge_matrix.rows() == 0) p.ge_matrix.resize(0, p.num_vars());
    Simplex s(p, options);
    auto sol = s.run(warm);
    return sol;
}

}  // namespace

Solution solve(const Problem& problem, const Options& options) { return run(problem, nullptr, options); }

Solution solve(const Problem& problem, const Basis& warm_start, const Options& options) {
    return run(problem, warm_start.empty() ? nullptr : &warm_start, options);
}

std::string check_optimality(const Problem& p, const Solution& sol) {
    constexpr double feas = 1e-8, dual_sign = 1e-9, gap = 1e-7, slackness = 1e-7;
    std::ostringstream err;
    const auto& z = sol.primal;
    double scale = 1.0;
    for (Index j = 0; j < z.size(); ++j) scale = std::max(scale, std::abs(z[j]));

    for (Index j = 0; j < z.size(); ++j) {
        if (z[j] < p.lower[j] - feas * (1 + std::abs(p.lower[j])) ||
            z[j] > p.upper[j] + feas * (1 + std::abs(p.upper[j])))
            err << "bound violated on var " << j << "; ";
    }
    if (p.num_eq() > 0) {
        const VectorXd r = p.eq_matrix * z - p.eq_rhs;
        for (Index i = 0; i < r.size(); ++i)
            if (std::abs(r[i]) > feas * (1 + std::abs(p.eq_rhs[i])) * scale)
                err << "equality row " << i << " residual " << r[i] << "; ";
    }
    VectorXd slack;
    if (p.num_ge() > 0) {
        slack = p.ge_matrix * z - p.ge_rhs;
        for (Index i = 0; i < slack.size(); ++i) {
            if (slack[i] < -feas * (1 + std::abs(p.ge_rhs[i])) * scale)
                err << "inequality row " << i << " violated by " << -slack[i] << "; ";
            if (sol.duals_ge[i] < -dual_sign) err << "negative dual on row " << i << "; ";
            if (std::abs(sol.duals_ge[i] * slack[i]) > slackness * (1 + std::abs(p.ge_rhs[i])))
                err << "slackness on row " << i << "; ";
        }
    }

    double dual_obj = 0.0;
    if (p.num_eq() > 0) dual_obj += sol.duals_eq.dot(p.eq_rhs);
    if (p.num_ge() > 0) dual_obj += sol.duals_ge.dot(p.ge_rhs);
    for (Index j = 0; j < z.size(); ++j) {
        const double d = sol.reduced_costs[j];
        if (d > dual_sign) {
            if (!std::isfinite(p.lower[j])) {
                err << "reduced cost on var " << j << " without lower bound; ";
                continue;
            }
            dual_obj += d * p.lower[j];
            if (d * (z[j] - p.lower[j]) > slackness * (1 + std::abs(p.lower[j]))) err << "slackness on var " << j << "; ";
        } else if (d < -dual_sign) {
            if (!std::isfinite(p.upper[j])) {
                err << "reduced cost on var " << j << " without upper bound; ";
                continue;
            }
            dual_obj += d * p.upper[j];
            if (-d * (p.upper[j] - z[j]) > slackness * (1 + std::abs(p.upper[j]))) err << "slackness on var " << j << "; ";
        } else {
            dual_obj += d * z[j];
        }
    }
    if (std::abs(sol.objective - dual_obj) > gap * (1 + std::abs(sol.objective)))
        err << "duality gap " << sol.objective - dual_obj << "; ";
    return err.str();
}

}  // namespace rddp::lp
