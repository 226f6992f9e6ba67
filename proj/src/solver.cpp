#include "rddp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

namespace rddp {

namespace {

/// min over x in [lo, hi] of g' x
double box_min(const Vector& g, const Vector& lo, const Vector& hi) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (g[i] == 0.0) continue;
        v += std::min(g[i] * lo[i], g[i] * hi[i]);
    }
    return v;
}

double box_max(const Vector& g, const Vector& lo, const Vector& hi) { return -box_min(-g, lo, hi); }

/// Runs body(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// rethrown on the caller's thread (first by index).
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < count; i += threads) {
                try {
                    body(i);
                } catch (...) {
                    errors[static_cast<size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<StateBox> reachable_boxes(const MdpModel& model) {
    std::vector<StateBox> boxes(static_cast<size_t>(model.horizon));
    if (model.state_box) {
        std::fill(boxes.begin(), boxes.end(), *model.state_box);
        return boxes;
    }
    StateBox cur{model.initial_x, model.initial_x};
    for (int t = 0; t < model.horizon; ++t) {
        boxes[static_cast<size_t>(t)] = cur;
        StateBox next{Vector::Constant(model.n, std::numeric_limits<double>::infinity()),
                      Vector::Constant(model.n, -std::numeric_limits<double>::infinity())};
        for (const auto& st : model.states) {
            for (const auto& o : st.outcomes) {
                for (int i = 0; i < model.n; ++i) {
                    const Vector gx = o.t_x.row(i).transpose();
                    const Vector ga = o.t_a.row(i).transpose();
                    const double lo = box_min(gx, cur.lower, cur.upper) +
                                      box_min(ga, st.constraints.lower, st.constraints.upper) + o.u[i];
                    const double hi = box_max(gx, cur.lower, cur.upper) +
                                      box_max(ga, st.constraints.lower, st.constraints.upper) + o.u[i];
                    next.lower[i] = std::min(next.lower[i], lo);
                    next.upper[i] = std::max(next.upper[i], hi);
                }
            }
        }
        cur = std::move(next);
    }
    return boxes;
}

std::vector<std::vector<double>> interval_value_bounds(const MdpModel& model) {
    const auto boxes = reachable_boxes(model);
    const int nd = model.num_discrete();
    // Stage cost bound per (t, d): min over box states, box actions and outcomes.
    std::vector<std::vector<double>> stage(static_cast<size_t>(model.horizon),
                                           std::vector<double>(static_cast<size_t>(nd)));
    for (int t = 0; t < model.horizon; ++t) {
        const auto& box = boxes[static_cast<size_t>(t)];
        for (int d = 0; d < nd; ++d) {
            const auto& st = model.states[static_cast<size_t>(d)];
            double best = std::numeric_limits<double>::infinity();
            for (const auto& o : st.outcomes) {
                const Vector ga = model.cost.c_a + o.t_a.transpose() * model.cost.c_n;
                const Vector gx = model.cost.c_x + o.t_x.transpose() * model.cost.c_n;
                const double v = box_min(ga, st.constraints.lower, st.constraints.upper) +
                                 box_min(gx, box.lower, box.upper) + model.cost.c_n.dot(o.u);
                best = std::min(best, v);
            }
            stage[static_cast<size_t>(t)][static_cast<size_t>(d)] = best;
        }
    }
    // rho(Z) >= min Z, so the value at (t, d) is at least the stage bound plus
    // the smallest continuation bound over discrete states.
    std::vector<std::vector<double>> bound = stage;
    double tail = 0.0;
    for (int t = model.horizon - 1; t >= 0; --t) {
        auto& row = bound[static_cast<size_t>(t)];
        for (auto& v : row) v += tail;
        tail = *std::min_element(row.begin(), row.end());
    }
    return bound;
}

CutSet seeded_cuts(const MdpModel& model, const RddpConfig& config) {
    CutSet cuts(model.horizon, model.num_discrete(), model.n);
    std::vector<std::vector<double>> bounds;
    if (config.seed_mode == SeedMode::IntervalBound) bounds = interval_value_bounds(model);
    for (int t = 0; t < model.horizon; ++t) {
        for (int d = 0; d < model.num_discrete(); ++d) {
            Cut c;
            c.q_x = Vector::Zero(model.n);
            c.q_c = config.seed_mode == SeedMode::Constant ? config.seed_constant
                                                            : bounds[static_cast<size_t>(t)][static_cast<size_t>(d)];
            c.origin = {0, t, d, Vector()};
            cuts.add_cut(t, d, std::move(c));
        }
    }
    return cuts;
}

size_t sample_outcome(const std::vector<Outcome>& outcomes, double u) {
    double acc = 0.0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        acc += outcomes[i].prob;
        if (u < acc) return i;
    }
    return outcomes.size() - 1;
}

Vector greedy_policy_action(const MdpModel& model, const CutSet& cuts, int t, int d, const Vector& x,
                            lp::Basis* warm_start) {
    return solve_stage(model, t, d, x, cuts, warm_start).action;
}

namespace {

std::string iteration_context(int iteration, const char* pass) {
    return "iteration " + std::to_string(iteration) + ", " + pass + " pass";
}

}  // namespace

RddpResult run(const MdpModel& model, const RddpConfig& config, const IterationCallback& on_iteration) {
    if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (config.stall_window < 1) throw std::invalid_argument("stall_window must be >= 1");
    if (config.trajectories_per_iteration < 1) throw std::invalid_argument("trajectories_per_iteration must be >= 1");

    const auto start = std::chrono::steady_clock::now();
    const int H = model.horizon;
    const int nd = model.num_discrete();
    const int K = config.trajectories_per_iteration;

    RddpResult result;
    result.cuts = seeded_cuts(model, config);
    auto& cuts = result.cuts;

    // Warm-start bases per (t, d); rows only ever get appended between solves.
    std::vector<lp::Basis> bases(static_cast<size_t>(H * nd));
    auto basis_at = [&](int t, int d) -> lp::Basis& { return bases[static_cast<size_t>(t * nd + d)]; };

    for (int it = 1; it <= config.max_iterations; ++it) {
        // Forward pass: sample states under the current greedy policy.
        std::vector<std::vector<Vector>> visited(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            CounterRng rng(config.rng_seed, {static_cast<std::uint64_t>(it), static_cast<std::uint64_t>(k)});
            int d = model.initial_d;
            Vector x = model.initial_x;
            auto& path = visited[static_cast<size_t>(k)];
            for (int t = 0; t < H; ++t) {
                path.push_back(x);
                try {
                    const Vector a = solve_stage(model, t, d, x, cuts, &basis_at(t, d)).action;
                    const auto& outs = model.states[static_cast<size_t>(d)].outcomes;
                    const auto& o = outs[sample_outcome(outs, rng.uniform())];
                    x = transition(o, x, a);
                    d = o.next_d;
                } catch (const InfeasibleStage& e) {
                    throw InfeasibleStage(e.t, e.d, e.x, iteration_context(it, "forward"));
                } catch (const NumericalFailure& e) {
                    throw NumericalFailure(iteration_context(it, "forward") + ": " + e.what());
                }
            }
        }

        // Backward pass: one cut per trajectory at every discrete state.
        for (int t = H - 1; t >= 1; --t) {
            std::vector<std::vector<Cut>> fresh(static_cast<size_t>(nd));
            parallel_for(nd, config.threads, [&](int d) {
                for (int k = 0; k < K; ++k) {
                    const Vector& x = visited[static_cast<size_t>(k)][static_cast<size_t>(t)];
                    try {
                        const auto sol = solve_stage(model, t, d, x, cuts, &basis_at(t, d));
                        Cut c = extract_cut(model, t, d, x, sol, cuts);
                        c.origin.iteration = it;
                        fresh[static_cast<size_t>(d)].push_back(std::move(c));
                    } catch (const InfeasibleStage& e) {
                        throw InfeasibleStage(e.t, e.d, e.x, iteration_context(it, "backward"));
                    } catch (const NumericalFailure& e) {
                        throw NumericalFailure(iteration_context(it, "backward") + ": " + e.what());
                    }
                }
            });
            for (int d = 0; d < nd; ++d)
                for (auto& c : fresh[static_cast<size_t>(d)]) cuts.add_cut(t, d, std::move(c));
        }

        // Bound at the initial state.
        double lb;
        try {
            lb = solve_stage(model, 0, model.initial_d, model.initial_x, cuts, &basis_at(0, model.initial_d)).value;
        } catch (const InfeasibleStage& e) {
            throw InfeasibleStage(e.t, e.d, e.x, iteration_context(it, "bound"));
        }
        result.lb_trace.push_back(lb);
        result.iterations_run = it;
        IterationRecord rec{it, lb,
                            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count()};
        result.records.push_back(rec);
        if (on_iteration) on_iteration(rec, cuts);

        if (config.stall_tolerance > 0.0 && it > config.stall_window) {
            const double gain = lb - result.lb_trace[static_cast<size_t>(it - 1 - config.stall_window)];
            if (gain < config.stall_tolerance) {
                result.stalled = true;
                break;
            }
        }
    }
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace rddp
