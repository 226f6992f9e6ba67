#include "rddp/sim.hpp"

#include "rddp/bellman.hpp"
#include "rddp/risk.hpp"
#include "rddp/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace rddp {

namespace {

// Runs are grouped into fixed blocks that share warm-start bases. Block
// boundaries do not depend on the thread count, so neither do the results.
constexpr int kBlock = 64;

}  // namespace

double SimReport::standard_error() const { return runs > 0 ? std_return / std::sqrt(static_cast<double>(runs)) : 0.0; }

std::vector<std::pair<int, int>> uncovered_slots(const MdpModel& model, const CutSet& cuts) {
    std::vector<std::pair<int, int>> out;
    for (int t = 1; t < model.horizon; ++t)
        for (int d = 0; d < model.num_discrete(); ++d)
            if (t >= cuts.horizon() || d >= cuts.num_discrete() || cuts.empty(t, d)) out.emplace_back(t, d);
    return out;
}

SimReport simulate(const MdpModel& model, const CutSet& cuts, int runs, std::uint64_t seed, const SimOptions& options) {
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (!options.policy) {
        if (cuts.horizon() != model.horizon || cuts.num_discrete() != model.num_discrete() || cuts.dim() != model.n)
            throw std::invalid_argument("cut set dimensions do not match the model");
        const auto missing = uncovered_slots(model, cuts);
        if (!missing.empty()) {
            std::string msg = "cuts do not cover";
            for (const auto& [t, d] : missing) msg += " (" + std::to_string(t) + "," + std::to_string(d) + ")";
            throw std::invalid_argument(msg);
        }
    }

    std::vector<double> totals(static_cast<size_t>(runs), 0.0);
    const int blocks = (runs + kBlock - 1) / kBlock;
    const int H = model.horizon;
    const int nd = model.num_discrete();

    auto run_block = [&](int b) {
        std::vector<lp::Basis> bases(static_cast<size_t>(std::max(H, 1) * nd));
        const int end = std::min(runs, (b + 1) * kBlock);
        for (int r = b * kBlock; r < end; ++r) {
            CounterRng rng(seed, {static_cast<std::uint64_t>(r)});
            int d = model.initial_d;
            Vector x = model.initial_x;
            double total = 0.0;
            for (int t = 0; t < H; ++t) {
                Vector a;
                try {
                    a = options.policy ? options.policy(t, d, x)
                                       : greedy_policy_action(model, cuts, t, d, x,
                                                              &bases[static_cast<size_t>(t * nd + d)]);
                } catch (const InfeasibleStage& e) {
                    throw InfeasibleStage(e.t, e.d, e.x, "simulation run " + std::to_string(r));
                }
                Vector x_next;
                int d_next;
                if (options.step) {
                    std::tie(x_next, d_next) = options.step(t, d, x, a, rng);
                } else {
                    const auto& outs = model.states[static_cast<size_t>(d)].outcomes;
                    const auto& o = outs[sample_outcome(outs, rng.uniform())];
                    x_next = transition(o, x, a);
                    d_next = o.next_d;
                }
                total += stage_cost(model, x, a, x_next);
                x = std::move(x_next);
                d = d_next;
            }
            totals[static_cast<size_t>(r)] = total;
        }
    };

    int threads = options.threads <= 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency()))
                                       : options.threads;
    threads = std::min(threads, blocks);
    if (threads <= 1) {
        for (int b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::exception_ptr> errors(static_cast<size_t>(blocks));
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                for (int b = w; b < blocks; b += threads) {
                    try {
                        run_block(b);
                    } catch (...) {
                        errors[static_cast<size_t>(b)] = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    SimReport rep;
    rep.runs = runs;
    rep.horizon = H;
    double sum = 0.0;
    for (double v : totals) sum += v;
    rep.mean_return = sum / runs;
    double ss = 0.0;
    for (double v : totals) ss += (v - rep.mean_return) * (v - rep.mean_return);
    rep.std_return = runs > 1 ? std::sqrt(ss / (runs - 1)) : 0.0;
    const double half = 2.0 * rep.standard_error();
    rep.ci2sd = {rep.mean_return - half, rep.mean_return + half};

    risk::FiniteDistribution emp{std::vector<double>(static_cast<size_t>(runs), 1.0 / runs), totals};
    for (double alpha : options.alphas) {
        if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("AV@R level outside [0, 1]");
        if (alpha == 0.0)
            rep.empirical_avar[alpha] = *std::max_element(totals.begin(), totals.end());
        else if (alpha == 1.0)
            rep.empirical_avar[alpha] = rep.mean_return;
        else
            rep.empirical_avar[alpha] = risk::avar_primal(emp, alpha);
    }
    if (options.keep_trajectories) rep.trajectories = std::move(totals);
    return rep;
}

double risk_neutral_return(const MdpModel& model, const CutSet& cuts, int runs, std::uint64_t seed,
                           const SimOptions& options) {
    return -simulate(model, cuts, runs, seed, options).mean_return;
}

std::string report_to_json(const SimReport& rep) {
    nlohmann::json doc;
    doc["runs"] = rep.runs;
    doc["horizon"] = rep.horizon;
    doc["mean_total_cost"] = rep.mean_return;
    doc["std_total_cost"] = rep.std_return;
    doc["mean_wealth_gain"] = -rep.mean_return;
    // Per-period geometric gain, meaningful when costs are wealth changes on unit initial wealth.
    if (rep.horizon > 0 && 1.0 - rep.mean_return > 0)
        doc["per_period_gain"] = std::pow(1.0 - rep.mean_return, 1.0 / rep.horizon) - 1.0;
    doc["ci2sd"] = {rep.ci2sd.first, rep.ci2sd.second};
    nlohmann::json avar = nlohmann::json::array();
    for (const auto& [alpha, v] : rep.empirical_avar) avar.push_back({{"alpha", alpha}, {"value", v}});
    doc["empirical_avar"] = avar;
    return doc.dump(2) + "\n";
}

void write_runs_csv(const SimReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "run,total_cost\n";
    char buf[64];
    for (size_t i = 0; i < rep.trajectories.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", rep.trajectories[i]);
        out << i << ',' << buf << '\n';
    }
}

}  // namespace rddp
