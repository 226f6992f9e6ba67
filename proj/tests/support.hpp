#pragma once

// Instance factories and independent reference computations shared by the
// unit tests and the acceptance binary. Nothing here calls the solver code
// under test except where noted.

#include "rddp/lp.hpp"
#include "rddp/model.hpp"
#include "rddp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace rddp::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }
inline Vector vec1(double v) { return Vector::Constant(1, v); }

inline Outcome outcome1(double prob, int next_d, double tx, double ta, double u) {
    return Outcome{prob, next_d, mat1(tx), mat1(ta), vec1(u)};
}

/// One state variable (a holding), one action (a trade in [-1, 1]) that may
/// not sell more than is held: a + x >= 0. Holdings grow by a random factor
/// plus a shift; the cost is a trading fee minus the next holding.
inline StageConstraints trade_constraints(double lo = -1.0, double hi = 1.0) {
    StageConstraints c;
    c.a_mat = mat1(1.0);
    c.b_vec = vec1(0.0);
    c.x_mat = mat1(1.0);
    c.sense = {RowSense::GreaterEqual};
    c.lower = vec1(lo);
    c.upper = vec1(hi);
    return c;
}

/// Three decision stages, two discrete states, two outcomes each, n = m = 1,
/// lambda = 0.5, alpha = 0.5.
inline MdpModel tiny_instance() {
    MdpModel m;
    m.horizon = 3;
    m.n = 1;
    m.m = 1;
    m.risk = {0.5, 0.5};
    m.initial_d = 0;
    m.initial_x = vec1(1.0);
    m.cost = CostSpec{vec1(0.05), vec1(0.0), vec1(-1.0)};
    DiscreteState s0;
    s0.constraints = trade_constraints();
    s0.outcomes = {outcome1(0.3, 0, 1.3, 1.3, 0.0), outcome1(0.7, 1, 0.8, 0.8, 0.25)};
    DiscreteState s1;
    s1.constraints = trade_constraints();
    s1.outcomes = {outcome1(0.5, 1, 1.6, 1.6, 0.0), outcome1(0.5, 0, 0.55, 0.55, 0.1)};
    m.states = {s0, s1};
    return m;
}

struct RandomInstanceOptions {
    int max_horizon = 3;
    int max_states = 3;
    int max_outcomes = 3;
};

/// Random instance of the tiny family small enough for the exact oracle.
inline MdpModel random_instance(Rng& rng, const RandomInstanceOptions& opt = {}) {
    MdpModel m;
    m.horizon = uniform_int(rng, 1, opt.max_horizon);
    m.n = 1;
    m.m = 1;
    const double alphas[] = {0.0, 0.2, 0.5, 0.8, 1.0};
    m.risk.alpha = alphas[uniform_int(rng, 0, 4)];
    m.risk.lambda = m.risk.alpha == 0.0 ? 1.0 : uniform(rng, 0.0, 1.0);
    const int nd = uniform_int(rng, 1, opt.max_states);
    m.initial_d = uniform_int(rng, 0, nd - 1);
    m.initial_x = vec1(uniform(rng, 0.0, 2.0));
    m.cost = CostSpec{vec1(uniform(rng, -0.2, 0.2)), vec1(uniform(rng, -0.5, 0.5)), vec1(uniform(rng, -1.0, 0.5))};
    for (int d = 0; d < nd; ++d) {
        DiscreteState s;
        s.constraints = trade_constraints(-uniform(rng, 0.2, 1.5), uniform(rng, 0.2, 1.5));
        const int k = uniform_int(rng, 1, opt.max_outcomes);
        std::vector<double> w(static_cast<size_t>(k));
        double total = 0.0;
        for (auto& v : w) total += (v = uniform(rng, 0.1, 1.0));
        double acc = 0.0;
        for (int j = 0; j < k; ++j) {
            double p = w[static_cast<size_t>(j)] / total;
            if (j == k - 1) p = 1.0 - acc;
            acc += p;
            const double r = uniform(rng, 0.5, 1.6);
            s.outcomes.push_back(outcome1(p, uniform_int(rng, 0, nd - 1), r, r, uniform(rng, 0.0, 0.3)));
        }
        m.states.push_back(std::move(s));
    }
    return m;
}

/// Admissible interval of a scalar action at (d, x); empty when lo > hi.
inline std::pair<double, double> action_interval(const StageConstraints& c, const Vector& x) {
    double lo = c.lower[0], hi = c.upper[0];
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        const double coef = c.a_mat(i, 0);
        const double rhs = c.b_vec[i] - c.x_mat.row(i).dot(x);
        if (c.row_sense(i) == RowSense::Equal) {
            if (coef == 0.0) {
                if (std::abs(rhs) > 1e-12) return {1.0, 0.0};
                continue;
            }
            lo = std::max(lo, rhs / coef);
            hi = std::min(hi, rhs / coef);
        } else if (coef > 0) {
            lo = std::max(lo, rhs / coef);
        } else if (coef < 0) {
            hi = std::min(hi, rhs / coef);
        } else if (rhs > 1e-12) {
            return {1.0, 0.0};
        }
    }
    return {lo, hi};
}

/// Minimizes a convex function on [lo, hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-11) {
    if (hi - lo <= tol) return f(0.5 * (lo + hi));
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return std::min({fc, fd, f(lo), f(hi)});
}

/// Nested risk-averse value by direct recursion over the scenario tree for
/// scalar actions: the inner minimization over a is a golden-section search
/// (the objective is convex in a), the risk mapping is risk::rho.
inline double nested_value_scalar(const MdpModel& m, int t, int d, const Vector& x) {
    if (t >= m.horizon) return 0.0;
    const auto& st = m.states[static_cast<size_t>(d)];
    const auto [lo, hi] = action_interval(st.constraints, x);
    if (lo > hi + 1e-12) return std::numeric_limits<double>::infinity();
    auto objective = [&](double a_val) {
        const Vector a = vec1(a_val);
        risk::FiniteDistribution dist;
        for (const auto& o : st.outcomes) {
            const Vector xn = o.t_x * x + o.t_a * a + o.u;
            const double cost = m.cost.c_a.dot(a) + m.cost.c_x.dot(x) + m.cost.c_n.dot(xn);
            dist.probs.push_back(o.prob);
            dist.values.push_back(cost + nested_value_scalar(m, t + 1, o.next_d, xn));
        }
        return risk::rho(dist, m.risk);
    };
    return golden_min(objective, lo, std::max(lo, hi));
}

/// All vertices of {E z = f, G z >= h, lower <= z <= upper} with finite
/// bounds, by choosing n linearly independent active constraints. Returns
/// the smallest objective, or +inf when no vertex is feasible.
inline double lp_vertex_enumeration(const lp::Problem& p, double tol = 1e-9) {
    const int n = static_cast<int>(p.num_vars());
    const int ne = static_cast<int>(p.num_eq());
    const int ng = static_cast<int>(p.num_ge());
    double best = std::numeric_limits<double>::infinity();

    auto feasible = [&](const Vector& z) {
        for (int j = 0; j < n; ++j)
            if (z[j] < p.lower[j] - tol || z[j] > p.upper[j] + tol) return false;
        if (ne > 0 && ((p.eq_matrix * z - p.eq_rhs).cwiseAbs().array() > tol).any()) return false;
        if (ng > 0 && ((p.ge_matrix * z - p.ge_rhs).array() < -tol).any()) return false;
        return true;
    };

    // bound_state: 0 = not active, 1 = at lower, 2 = at upper
    // Equality rows may be dependent; only their rank counts toward a vertex.
    const int eq_rank = ne > 0 ? static_cast<int>(Eigen::FullPivLU<Matrix>(p.eq_matrix).rank()) : 0;
    std::vector<int> bound_state(static_cast<size_t>(n), 0);
    for (int ge_mask = 0; ge_mask < (1 << ng); ++ge_mask) {
        const int active_rows = eq_rank + __builtin_popcount(static_cast<unsigned>(ge_mask));
        const int need = n - active_rows;
        if (need < 0) continue;
        // Enumerate assignments of `need` variables to a bound.
        std::function<void(int, int)> rec = [&](int j, int left) {
            if (left == 0) {
                const int total = ne + n - eq_rank;
                Matrix M(total, n);
                Vector rhs(total);
                int r = 0;
                for (int i = 0; i < ne; ++i, ++r) {
                    M.row(r) = p.eq_matrix.row(i);
                    rhs[r] = p.eq_rhs[i];
                }
                for (int i = 0; i < ng; ++i) {
                    if (!(ge_mask & (1 << i))) continue;
                    M.row(r) = p.ge_matrix.row(i);
                    rhs[r] = p.ge_rhs[i];
                    ++r;
                }
                for (int k = 0; k < n; ++k) {
                    if (bound_state[static_cast<size_t>(k)] == 0) continue;
                    M.row(r).setZero();
                    M(r, k) = 1.0;
                    rhs[r] = bound_state[static_cast<size_t>(k)] == 1 ? p.lower[k] : p.upper[k];
                    ++r;
                }
                Eigen::ColPivHouseholderQR<Matrix> qr(M);
                if (qr.rank() < n) return;
                const Vector z = qr.solve(rhs);
                if ((M * z - rhs).cwiseAbs().maxCoeff() > tol) return;
                if (feasible(z)) best = std::min(best, p.objective.dot(z));
                return;
            }
            if (n - j < left) return;
            for (int s = 1; s <= 2; ++s) {
                bound_state[static_cast<size_t>(j)] = s;
                rec(j + 1, left - 1);
            }
            bound_state[static_cast<size_t>(j)] = 0;
            rec(j + 1, left);
        };
        rec(0, need);
    }
    return best;
}

/// Random LP with finite variable bounds. Integer data makes degenerate
/// vertices common.
inline lp::Problem random_lp(Rng& rng, int max_vars = 8, int max_rows = 6) {
    const int n = uniform_int(rng, 1, max_vars);
    const int rows = uniform_int(rng, 0, max_rows);
    const bool integer = uniform_int(rng, 0, 1) == 1;
    auto coef = [&]() { return integer ? static_cast<double>(uniform_int(rng, -3, 3)) : uniform(rng, -2.0, 2.0); };
    lp::Problem p(n);
    for (int j = 0; j < n; ++j) {
        p.objective[j] = coef();
        p.lower[j] = integer ? -uniform_int(rng, 0, 3) : -uniform(rng, 0.0, 3.0);
        p.upper[j] = p.lower[j] + (integer ? uniform_int(rng, 1, 4) : uniform(rng, 0.5, 4.0));
    }
    // A known feasible point keeps most instances feasible; some rows get
    // shifted past it so infeasible instances also occur.
    Vector z0(n);
    for (int j = 0; j < n; ++j) z0[j] = uniform(rng, p.lower[j], p.upper[j]);
    for (int i = 0; i < rows; ++i) {
        Eigen::RowVectorXd row(n);
        for (int j = 0; j < n; ++j) row[j] = coef();
        const bool eq = uniform_int(rng, 0, 3) == 0 && p.num_eq() < n;
        double rhs = row.dot(z0);
        if (eq) {
            p.add_eq_row(row, rhs);
        } else {
            if (integer) rhs = std::floor(rhs);
            if (uniform_int(rng, 0, 9) == 0) rhs += uniform(rng, 1.0, 6.0);
            p.add_ge_row(row, rhs);
        }
    }
    return p;
}

/// Independent optimality certificate: primal feasibility, dual signs,
/// strong duality and complementary slackness, recomputed from scratch.
struct Certificate {
    double primal_violation = 0.0;
    double dual_sign_violation = 0.0;
    double duality_gap = 0.0;
    double slackness_violation = 0.0;
};

inline Certificate certify(const lp::Problem& p, const lp::Solution& s) {
    Certificate c;
    const Vector& z = s.primal;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        c.primal_violation = std::max({c.primal_violation, p.lower[j] - z[j], z[j] - p.upper[j]});
    }
    if (p.num_eq() > 0) c.primal_violation = std::max(c.primal_violation, (p.eq_matrix * z - p.eq_rhs).cwiseAbs().maxCoeff());
    Vector slack = p.num_ge() > 0 ? Vector(p.ge_matrix * z - p.ge_rhs) : Vector();
    if (slack.size() > 0) c.primal_violation = std::max(c.primal_violation, -slack.minCoeff());

    // Reduced costs from the duals, independent of what the solver reports.
    Vector rc = p.objective;
    if (p.num_eq() > 0) rc -= p.eq_matrix.transpose() * s.duals_eq;
    if (p.num_ge() > 0) rc -= p.ge_matrix.transpose() * s.duals_ge;
    double dual_obj = 0.0;
    if (p.num_eq() > 0) dual_obj += s.duals_eq.dot(p.eq_rhs);
    if (p.num_ge() > 0) dual_obj += s.duals_ge.dot(p.ge_rhs);
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        c.dual_sign_violation = std::max(c.dual_sign_violation, -s.duals_ge[i]);
        c.slackness_violation = std::max(c.slackness_violation, std::abs(s.duals_ge[i] * slack[i]));
    }
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        // A positive reduced cost must be paid by a finite lower bound, a
        // negative one by a finite upper bound.
        if (rc[j] > 0) {
            if (!std::isfinite(p.lower[j])) c.dual_sign_violation = std::max(c.dual_sign_violation, rc[j]);
            else {
                dual_obj += rc[j] * p.lower[j];
                c.slackness_violation = std::max(c.slackness_violation, std::abs(rc[j] * (z[j] - p.lower[j])));
            }
        } else if (rc[j] < 0) {
            if (!std::isfinite(p.upper[j])) c.dual_sign_violation = std::max(c.dual_sign_violation, -rc[j]);
            else {
                dual_obj += rc[j] * p.upper[j];
                c.slackness_violation = std::max(c.slackness_violation, std::abs(rc[j] * (p.upper[j] - z[j])));
            }
        }
    }
    c.duality_gap = std::abs(p.objective.dot(z) - dual_obj) / (1.0 + std::abs(p.objective.dot(z)));
    return c;
}

/// Random finite distribution with up to max_atoms atoms.
inline risk::FiniteDistribution random_distribution(Rng& rng, int max_atoms = 64) {
    const int k = uniform_int(rng, 1, max_atoms);
    risk::FiniteDistribution dist;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        // Occasional zero weights and repeated values exercise ties.
        const double w = uniform_int(rng, 0, 9) == 0 ? 0.0 : uniform(rng, 0.01, 1.0);
        dist.probs.push_back(w);
        total += w;
        dist.values.push_back(uniform_int(rng, 0, 4) == 0 ? std::round(uniform(rng, -3, 3)) : uniform(rng, -10.0, 10.0));
    }
    if (total == 0.0) {
        dist.probs[0] = 1.0;
        total = 1.0;
    }
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        dist.probs[static_cast<size_t>(i)] /= total;
        if (i < k - 1) acc += dist.probs[static_cast<size_t>(i)];
    }
    dist.probs.back() = std::max(0.0, 1.0 - acc);
    return dist;
}

/// max E_q[Z] over the vertices of {0 <= q <= p/alpha, sum q = 1}: every
/// vertex has all coordinates but one at a bound.
inline double avar_by_vertices(const risk::FiniteDistribution& dist, double alpha) {
    const int k = static_cast<int>(dist.probs.size());
    double best = -std::numeric_limits<double>::infinity();
    for (int free = 0; free < k; ++free) {
        for (long mask = 0; mask < (1L << (k - 1)); ++mask) {
            double mass = 0.0, val = 0.0;
            int bit = 0;
            for (int i = 0; i < k; ++i) {
                if (i == free) continue;
                if (mask & (1L << bit)) {
                    const double q = dist.probs[static_cast<size_t>(i)] / alpha;
                    mass += q;
                    val += q * dist.values[static_cast<size_t>(i)];
                }
                ++bit;
            }
            const double qf = 1.0 - mass;
            if (qf < -1e-12 || qf > dist.probs[static_cast<size_t>(free)] / alpha + 1e-12) continue;
            best = std::max(best, val + qf * dist.values[static_cast<size_t>(free)]);
        }
    }
    return best;
}

}  // namespace rddp::testing
