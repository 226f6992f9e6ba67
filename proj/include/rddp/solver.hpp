#pragma once

#include "rddp/bellman.hpp"
#include "rddp/model.hpp"
#include "rddp/rng.hpp"
#include "rddp/value.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace rddp {

/// How the cut sets are initialized before the first iteration.
enum class SeedMode {
    /// Constant cut per (t, d) from interval bounds on the stage costs.
    IntervalBound,
    /// The same user-supplied constant at every (t, d).
    Constant,
};

struct RddpConfig {
    int max_iterations = 50;
    std::uint64_t rng_seed = 0;
    int trajectories_per_iteration = 1;
    SeedMode seed_mode = SeedMode::IntervalBound;
    double seed_constant = 0.0;
    /// Stop once the initial-state bound improved by less than stall_tolerance
    /// over the last stall_window iterations. A tolerance of 0 never stops.
    double stall_tolerance = 0.0;
    int stall_window = 5;
    /// Worker threads for the backward pass; 0 = hardware concurrency.
    int threads = 1;
};

struct IterationRecord {
    int iteration = 0;
    double lower_bound = 0.0;
    double wall_ms = 0.0;
};

struct RddpResult {
    CutSet cuts;
    std::vector<double> lb_trace;
    std::vector<IterationRecord> records;
    int iterations_run = 0;
    double wall_time_s = 0.0;
    bool stalled = false;
};

/// Called after every iteration with the current bound and cut sets.
using IterationCallback = std::function<void(const IterationRecord&, const CutSet&)>;

/// Per-stage boxes containing all reachable continuous states: the model's
/// state_box when present, otherwise interval propagation from x0.
std::vector<StateBox> reachable_boxes(const MdpModel& model);

/// Lower bounds L_t(d) on the stage value functions from interval arithmetic
/// over action boxes and reachable state boxes; entry [t][d].
std::vector<std::vector<double>> interval_value_bounds(const MdpModel& model);

/// Cut sets holding the initial constant cut at every (t, d).
CutSet seeded_cuts(const MdpModel& model, const RddpConfig& config);

/// Forward sampling / backward cut generation loop. Throws InfeasibleStage
/// or NumericalFailure (with iteration context) from the stage solves.
RddpResult run(const MdpModel& model, const RddpConfig& config, const IterationCallback& on_iteration = {});

/// Action of the greedy policy with respect to the cut-approximated
/// continuation value.
Vector greedy_policy_action(const MdpModel& model, const CutSet& cuts, int t, int d, const Vector& x,
                            lp::Basis* warm_start = nullptr);

/// Index of the outcome selected by inverse CDF for a uniform draw u.
size_t sample_outcome(const std::vector<Outcome>& outcomes, double u);

}  // namespace rddp
