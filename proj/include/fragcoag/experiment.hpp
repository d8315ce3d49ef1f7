#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragcoag/action.hpp"
#include "fragcoag/bounds.hpp"
#include "fragcoag/composition.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/rewards.hpp"

namespace fragcoag {

enum class ExperimentKind {
    trajectory_convergence, // chain paths vs the deterministic limit path
    value_convergence,      // chain values vs the 1-D closed form
    dp_compare,             // exact DP vs open-loop brute force
    example1d,              // grid HJB vs the closed form on an m-grid
    coupling_check,         // two-chain contraction vs the ledger envelope
    bounds_check,           // ledger evaluation + admissibility verdicts
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

// One self-contained experiment description, loadable from JSON.  The scaling
// sequence provides the per-row working points (h, tau, N, ...); which of the
// remaining knobs matter depends on the kind.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::bounds_check;
    RateKernel kernel = RateKernel::constant_example();
    RewardModel reward;
    std::vector<ScalingConfig> sequence;

    ActionFunction alpha;    // trajectory-convergence driver
    double m0 = 1.0;         // initial state = monomers of total mass-norm m0
    double eps = 0.5;        // sup-deviation exceedance threshold
    double mstar = 1.0;      // terminal-reward peak for the 1-D closed form
    std::int64_t replicas = 200;
    std::uint64_t seed = 1;
    std::int64_t dp_cap = 12; // DP value tabulated when N <= dp_cap
    int dp_steps = 5;         // decision steps for the DP/brute columns
    std::vector<double> E_grid = {0.0, 0.5, 1.0};
    bool warn_only = false;   // downgrade a failed admissibility check to a note

    // example1d grid knobs (0 = pick automatically)
    double grid_m_max = 0.0;
    int grid_m_points = 0;
    std::string fC_expr = "1";
    std::string fB_expr = "1";

    // coupling-check endpoints and control
    Composition x_init;
    Composition y_init;
    double coupling_b = 0.5;
    int coupling_grid = 8;

    double delta = 0.0; // initial-state gap for the ledger's value-gap column

    std::string out_csv;  // empty = do not write
    std::string out_json; // empty = do not write

    nlohmann::json raw; // verbatim spec document, hashed into the sidecar

    static ExperimentSpec from_json(const nlohmann::json& j);
};

// Tabular result: cells are preformatted so emission is byte-stable.  The
// sidecar carries the config hash, master seed, per-row ledger snapshots, and
// any notes (e.g. a warn-only admissibility failure).
struct ExperimentTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    nlohmann::json sidecar;

    std::string csv() const;
};

// shortest round-trip decimal formatting used for every CSV cell
std::string format_g17(double v);
std::string format_int(std::int64_t v);

std::uint64_t fnv1a64(const std::string& s);

// "a:b:step" (inclusive, tolerant endpoint) -> ascending grid values
std::vector<double> parse_grid_spec(const std::string& s);

ExperimentTable run_trajectory_convergence(const ExperimentSpec& spec);
ExperimentTable run_value_convergence(const ExperimentSpec& spec);
ExperimentTable run_dp_compare(const ExperimentSpec& spec);
ExperimentTable run_example1d(const ExperimentSpec& spec);
ExperimentTable run_coupling_check(const ExperimentSpec& spec);
ExperimentTable run_bounds_check(const ExperimentSpec& spec);

// dispatch on spec.kind
ExperimentTable run_experiment(const ExperimentSpec& spec);

// write CSV and JSON sidecar to the spec's output paths (skipping empty paths)
void write_experiment_outputs(const ExperimentSpec& spec, const ExperimentTable& table);

} // namespace fragcoag
