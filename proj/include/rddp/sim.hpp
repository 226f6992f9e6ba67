#pragma once

#include "rddp/model.hpp"
#include "rddp/rng.hpp"
#include "rddp/value.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rddp {

struct SimReport {
    int runs = 0;
    int horizon = 0;
    /// Mean and sample standard deviation of the total cost per run.
    double mean_return = 0.0;
    double std_return = 0.0;
    /// AV@R of the empirical total-cost distribution, keyed by alpha.
    std::map<double, double> empirical_avar;
    /// Total cost of every run, in run order (empty unless requested).
    std::vector<double> trajectories;
    /// mean_return -/+ 2 std_return / sqrt(runs).
    std::pair<double, double> ci2sd{0.0, 0.0};

    double standard_error() const;
};

/// Replaces the greedy policy: action at (t, d, x).
using PolicyFn = std::function<Vector(int t, int d, const Vector& x)>;

/// Next continuous and discrete state after action a at (t, d, x). Used to
/// simulate dynamics other than the model's own outcome atoms.
using StepFn = std::function<std::pair<Vector, int>(int t, int d, const Vector& x, const Vector& a, CounterRng& rng)>;

struct SimOptions {
    /// 0 = hardware concurrency. Results do not depend on this value.
    int threads = 1;
    std::vector<double> alphas{0.05, 0.1, 0.25, 0.5, 1.0};
    bool keep_trajectories = false;
    PolicyFn policy;
    StepFn step;
};

/// (t, d) slots for t in [1, horizon) whose cut list is empty: the greedy
/// policy has no continuation bound there.
std::vector<std::pair<int, int>> uncovered_slots(const MdpModel& model, const CutSet& cuts);

/// Rolls out the greedy policy (or options.policy) `runs` times from
/// (d0, x0) and aggregates the total cost per run. Run r draws from the
/// stream (seed, r), so the report is a pure function of the inputs.
/// Throws InfeasibleStage with run context, std::invalid_argument on
/// missing cut coverage.
SimReport simulate(const MdpModel& model, const CutSet& cuts, int runs, std::uint64_t seed,
                   const SimOptions& options = {});

/// Expected wealth gain, i.e. minus the mean total cost.
double risk_neutral_return(const MdpModel& model, const CutSet& cuts, int runs, std::uint64_t seed,
                           const SimOptions& options = {});

std::string report_to_json(const SimReport& report);
/// CSV `run,total_cost`; requires trajectories.
void write_runs_csv(const SimReport& report, const std::string& path);

}  // namespace rddp
