#include "rddp/bellman.hpp"
#include "rddp/model.hpp"
#include "rddp/oracle.hpp"
#include "rddp/portfolio.hpp"
#include "rddp/sim.hpp"
#include "rddp/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

enum Exit : int {
    kOk = 0,
    kError = 1,
    kInfeasible = 2,
    kNumerical = 3,
    kOracleGuard = 4,
};

/// Output paths must point into an existing directory.
const auto kWritablePath = CLI::Validator(
    [](std::string& path) -> std::string {
        const auto parent = std::filesystem::path(path).parent_path();
        if (!parent.empty() && !std::filesystem::is_directory(parent))
            return "directory does not exist: " + parent.string();
        return {};
    },
    "PATH");

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

rddp::MdpModel load_checked(const std::string& path) {
    auto model = rddp::load_model_file(path);
    const auto problems = rddp::validate(model);
    if (!problems.empty()) {
        std::string msg = "invalid model " + path + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw std::invalid_argument(msg);
    }
    return model;
}

struct GenArgs {
    std::string out;
    double fees = 0.004;
    int horizon = 5;
    double lambda = 0.0;
    double alpha = 1.0;
    int grid = 19;
    double wealth = 1.0;
    bool atoms81 = false;
};

int gen_portfolio(const GenArgs& g) {
    auto p = rddp::portfolio::default_params();
    p.fee_buy.setConstant(g.fees);
    p.fee_sell.setConstant(g.fees);
    p.horizon = g.horizon;
    p.risk = {g.lambda, g.alpha};
    p.grid_size = g.grid;
    p.initial_wealth = g.wealth;
    p.wealth_cap = 10.0 * g.wealth;
    p.independent_market_noise = g.atoms81;
    const auto model = rddp::portfolio::build_instance(p);
    rddp::save_model_file(model, g.out);
    std::ofstream side(g.out + ".params.json");
    if (!side) throw std::runtime_error("cannot write " + g.out + ".params.json");
    side << rddp::portfolio::params_to_json(p);
    std::cout << "portfolio: |D|=" << model.num_discrete() << " |Omega_d|=" << model.states[0].outcomes.size()
              << " n=" << model.n << " m=" << model.m << " T=" << model.horizon << " lambda=" << model.risk.lambda
              << " alpha=" << model.risk.alpha << " -> " << g.out << "\n";
    return kOk;
}

struct SolveArgs {
    std::string model;
    int iters = 50;
    std::uint64_t seed = 0;
    std::string out_cuts;
    std::string trace;
    std::string timings;
    int trajectories = 1;
    double stall_tol = 0.0;
    int stall_window = 5;
    int threads = 0;
};

int solve(const SolveArgs& s) {
    const auto model = load_checked(s.model);
    rddp::RddpConfig cfg;
    cfg.max_iterations = s.iters;
    cfg.rng_seed = s.seed;
    cfg.trajectories_per_iteration = s.trajectories;
    cfg.stall_tolerance = s.stall_tol;
    cfg.stall_window = s.stall_window;
    cfg.threads = s.threads;
    const auto res = rddp::run(model, cfg);

    res.cuts.write_csv_file(s.out_cuts);
    if (!s.trace.empty()) {
        std::ofstream out(s.trace);
        if (!out) throw std::runtime_error("cannot write " + s.trace);
        out << "iteration,lb\n";
        for (const auto& r : res.records) out << r.iteration << ',' << fmt(r.lower_bound) << '\n';
    }
    if (!s.timings.empty()) {
        std::ofstream out(s.timings);
        if (!out) throw std::runtime_error("cannot write " + s.timings);
        out << "iteration,lb,wall_ms\n";
        for (const auto& r : res.records) out << r.iteration << ',' << fmt(r.lower_bound) << ',' << r.wall_ms << '\n';
    }
    std::cout << "iterations=" << res.iterations_run << (res.stalled ? " (stalled)" : "")
              << " lower_bound=" << fmt(res.lb_trace.back()) << " cuts=" << res.cuts.total_cuts()
              << " wall_s=" << res.wall_time_s << "\n";
    return kOk;
}

struct SimArgs {
    std::string model;
    std::string cuts;
    int runs = 3000;
    std::uint64_t seed = 0;
    std::string report;
    std::string runs_csv;
    int threads = 0;
};

int simulate(const SimArgs& s) {
    const auto model = load_checked(s.model);
    const auto cuts = rddp::CutSet::read_csv_file(s.cuts, model.horizon, model.num_discrete());
    const auto missing = rddp::uncovered_slots(model, cuts);
    if (!missing.empty()) {
        std::cerr << "error: cuts do not cover (t, d):";
        for (const auto& [t, d] : missing) std::cerr << " (" << t << "," << d << ")";
        std::cerr << "\n";
        return kInfeasible;
    }
    rddp::SimOptions opt;
    opt.threads = s.threads;
    opt.keep_trajectories = !s.runs_csv.empty();
    const auto rep = rddp::simulate(model, cuts, s.runs, s.seed, opt);
    std::ofstream out(s.report);
    if (!out) throw std::runtime_error("cannot write " + s.report);
    out << rddp::report_to_json(rep);
    if (!s.runs_csv.empty()) rddp::write_runs_csv(rep, s.runs_csv);
    std::cout << "runs=" << rep.runs << " mean_total_cost=" << fmt(rep.mean_return) << " std=" << fmt(rep.std_return)
              << " ci2sd=[" << fmt(rep.ci2sd.first) << ", " << fmt(rep.ci2sd.second) << "]\n";
    return kOk;
}

struct OracleArgs {
    std::string model;
    long max_nodes = 100000;
    long max_columns = 4000;
};

int oracle(const OracleArgs& o) {
    const auto model = load_checked(o.model);
    try {
        std::cout << fmt(rddp::exact_oracle(model, {o.max_nodes, o.max_columns})) << "\n";
    } catch (const rddp::OracleTooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOracleGuard;
    }
    return kOk;
}

struct ExportArgs {
    std::string model;
    std::string cuts;
    std::string out;
};

/// Rewrites a cut file as JSON grouped by stage and discrete state.
int export_cuts(const ExportArgs& e) {
    const auto model = load_checked(e.model);
    const auto cuts = rddp::CutSet::read_csv_file(e.cuts, model.horizon, model.num_discrete());
    nlohmann::json doc;
    doc["horizon"] = cuts.horizon();
    doc["n"] = cuts.dim();
    nlohmann::json slots = nlohmann::json::array();
    for (int t = 0; t < cuts.horizon(); ++t) {
        for (int d = 0; d < cuts.num_discrete(); ++d) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& c : cuts.cuts(t, d)) {
                std::vector<double> qx(c.q_x.data(), c.q_x.data() + c.q_x.size());
                list.push_back({{"iteration", c.origin.iteration}, {"qc", c.q_c}, {"qx", qx}});
            }
            slots.push_back({{"t", t}, {"d", d}, {"cuts", list}});
        }
    }
    doc["slots"] = slots;
    std::ofstream out(e.out);
    if (!out) throw std::runtime_error("cannot write " + e.out);
    out << doc.dump(2) << "\n";
    std::cout << "exported " << cuts.total_cuts() << " cuts -> " << e.out << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-averse dual dynamic programming for hybrid linearly controlled MDPs"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-portfolio", "Write the dynamic portfolio instance and its params sidecar");
    g->add_option("--out", gen.out, "Instance path")->required()->check(kWritablePath)->envname("RDDP_OUT");
    g->add_option("--fees", gen.fees, "Proportional fee on every buy and sell")
        ->check(CLI::Range(0.0, 0.999))
        ->envname("RDDP_FEES");
    g->add_option("--horizon", gen.horizon, "Number of periods")->check(CLI::Range(1, 1000))->envname("RDDP_HORIZON");
    g->add_option("--lambda", gen.lambda, "Weight of AV@R in the risk mapping")
        ->check(CLI::Range(0.0, 1.0))
        ->envname("RDDP_LAMBDA");
    g->add_option("--alpha", gen.alpha, "AV@R level (0 = worst case)")
        ->check(CLI::Range(0.0, 1.0))
        ->envname("RDDP_ALPHA");
    g->add_option("--grid", gen.grid, "Market state grid size (odd)")->check(CLI::Range(1, 1001))->envname("RDDP_GRID");
    g->add_option("--wealth", gen.wealth, "Initial wealth")->check(CLI::PositiveNumber)->envname("RDDP_WEALTH");
    g->add_flag("--atoms81", gen.atoms81, "Separate quadrature on the market noise (81 atoms)")
        ->envname("RDDP_ATOMS81");

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "Run RDDP and write cuts and the lower-bound trace");
    s->add_option("--model", sol.model, "Instance path")->required()->check(CLI::ExistingFile)->envname("RDDP_MODEL");
    s->add_option("--iters", sol.iters, "Iterations")->check(CLI::Range(1, 1000000))->envname("RDDP_ITERS");
    s->add_option("--seed", sol.seed, "Random seed")->envname("RDDP_SEED");
    s->add_option("--out-cuts", sol.out_cuts, "Cut CSV path")->required()->check(kWritablePath)->envname(
        "RDDP_OUT_CUTS");
    s->add_option("--trace", sol.trace, "Lower-bound trace CSV path")->check(kWritablePath)->envname("RDDP_TRACE");
    s->add_option("--timings", sol.timings, "Trace CSV with wall-clock times")
        ->check(kWritablePath)
        ->envname("RDDP_TIMINGS");
    s->add_option("--trajectories", sol.trajectories, "Forward trajectories per iteration")
        ->check(CLI::Range(1, 1000000))
        ->envname("RDDP_TRAJECTORIES");
    s->add_option("--stall-tol", sol.stall_tol, "Stop when the bound gains less than this over the window (0 = off)")
        ->check(CLI::NonNegativeNumber)
        ->envname("RDDP_STALL_TOL");
    s->add_option("--stall-window", sol.stall_window, "Stall window in iterations")
        ->check(CLI::Range(1, 1000000))
        ->envname("RDDP_STALL_WINDOW");
    s->add_option("--threads", sol.threads, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber)
        ->envname("RDDP_THREADS");

    SimArgs sim;
    auto* m = app.add_subcommand("simulate", "Monte Carlo evaluation of the greedy policy");
    m->add_option("--model", sim.model, "Instance path")->required()->check(CLI::ExistingFile)->envname("RDDP_MODEL");
    m->add_option("--cuts", sim.cuts, "Cut CSV path")->required()->check(CLI::ExistingFile)->envname("RDDP_CUTS");
    m->add_option("--runs", sim.runs, "Number of runs")->check(CLI::Range(1, 100000000))->envname("RDDP_RUNS");
    m->add_option("--seed", sim.seed, "Random seed")->envname("RDDP_SEED");
    m->add_option("--report", sim.report, "Report JSON path")->required()->check(kWritablePath)->envname(
        "RDDP_REPORT");
    m->add_option("--runs-csv", sim.runs_csv, "Per-run CSV path")->check(kWritablePath)->envname("RDDP_RUNS_CSV");
    m->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber)
        ->envname("RDDP_THREADS");

    OracleArgs orc;
    auto* o = app.add_subcommand("oracle", "Exact optimal value over the full scenario tree");
    o->add_option("--model", orc.model, "Instance path")->required()->check(CLI::ExistingFile)->envname("RDDP_MODEL");
    o->add_option("--max-nodes", orc.max_nodes, "Scenario tree node limit")
        ->check(CLI::PositiveNumber)
        ->envname("RDDP_MAX_NODES");
    o->add_option("--max-columns", orc.max_columns, "LP column limit")
        ->check(CLI::PositiveNumber)
        ->envname("RDDP_MAX_COLUMNS");

    ExportArgs exp;
    auto* e = app.add_subcommand("export-cuts", "Convert a cut CSV into JSON grouped by (t, d)");
    e->add_option("--model", exp.model, "Instance path")->required()->check(CLI::ExistingFile)->envname("RDDP_MODEL");
    e->add_option("--cuts", exp.cuts, "Cut CSV path")->required()->check(CLI::ExistingFile)->envname("RDDP_CUTS");
    e->add_option("--out", exp.out, "JSON path")->required()->check(kWritablePath)->envname("RDDP_OUT");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*g) return gen_portfolio(gen);
        if (*s) return solve(sol);
        if (*m) return simulate(sim);
        if (*o) return oracle(orc);
        if (*e) return export_cuts(exp);
    } catch (const rddp::InfeasibleStage& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kInfeasible;
    } catch (const rddp::ConfigurationError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kInfeasible;
    } catch (const rddp::NumericalFailure& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kNumerical;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kError;
    }
    return kError;
}
