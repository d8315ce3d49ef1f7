#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fragcoag/bounds.hpp"
#include "fragcoag/control.hpp"
#include "fragcoag/coupling.hpp"
#include "fragcoag/ctmc.hpp"
#include "fragcoag/errors.hpp"
#include "fragcoag/experiment.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/meanfield.hpp"
#include "fragcoag/reduced1d.hpp"
#include "fragcoag/rewards.hpp"

using namespace fragcoag;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in '" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << text;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError(std::string(what) + ": trailing junk in '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ConfigError(std::string(what) + ": cannot parse '" + s + "' as a number");
    }
}

Policy policy_from_json(const json& j, double tau, int n) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return Policy::constant(j.at("b").get<double>(), n);
    if (kind == "action")
        return Policy::from_action(ActionFunction::from_json(j.at("alpha")), tau, n);
    throw ConfigError("policy kind must be 'constant' or 'action'");
}

ControlSchedule control_from_spec(const std::string& s, double tau, double T) {
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos)
        throw ConfigError("control must be const:<b>, action:<file>, or policy:<file>");
    const std::string kind = s.substr(0, colon);
    const std::string rest = s.substr(colon + 1);
    if (kind == "const") return ControlSchedule::constant(parse_double(rest, "control"), tau);
    if (kind == "action")
        return ControlSchedule::from_action(ActionFunction::from_json(load_json(rest)), tau);
    if (kind == "policy") {
        const double taueff = tau > 0.0 ? tau : T;
        const int n = static_cast<int>(std::ceil(T / taueff - 1e-9));
        const Policy p = policy_from_json(load_json(rest), taueff, n < 1 ? 1 : n);
        return ControlSchedule::from_feedback(
            [p](int k, const Composition& x) { return p.decide(k, x); }, taueff);
    }
    throw ConfigError("control must be const:<b>, action:<file>, or policy:<file>");
}

std::vector<double> window_grid(double T, double tau) {
    const double taueff = tau > 0.0 ? tau : T;
    const int n = std::max(1, static_cast<int>(std::ceil(T / taueff - 1e-9)));
    std::vector<double> g;
    for (int k = 0; k < n; ++k) g.push_back(taueff * k);
    g.push_back(T);
    return g;
}

MeanFieldState state_from_file(const json& j, std::int64_t K_max) {
    if (j.is_array()) {
        MeanFieldState x = state_from_json(j);
        if (static_cast<std::int64_t>(x.size()) > K_max)
            x.resize(static_cast<std::size_t>(K_max));
        else
            x.resize(static_cast<std::size_t>(K_max), 0.0);
        return x;
    }
    return Composition::from_json(j).to_mean_field(K_max);
}

TerminalSpec terminal_from_options(const std::string& V0, double mstar) {
    if (V0.empty()) return TerminalSpec::quadratic(mstar);
    return TerminalSpec::from_expr(V0, mstar);
}

struct SimulateCmd {
    std::string kernel, x0, control, out, events;
    double T = 1.0, tau = 0.0;
    std::uint64_t seed = 1;
    std::int64_t replicas = 1;
    bool literal = false;

    void run() const {
        const RateKernel k = RateKernel::from_json(load_json(kernel));
        const Composition init = Composition::from_json(load_json(x0));
        const ControlSchedule sched = control_from_spec(control, tau, T);
        SimOptions opts;
        opts.literal_self_pairs = literal;
        opts.log_events = !events.empty();
        const std::vector<double> obs = window_grid(T, tau);

        std::string csv = "replica,t,k,x_k\n";
        std::string evlines;
        for (std::int64_t r = 0; r < replicas; ++r) {
            const Trajectory traj = simulate(init, k, sched, T, obs, derive_seed(seed,
                                             static_cast<std::uint64_t>(r)), opts);
            for (std::size_t ti = 0; ti < traj.times.size(); ++ti)
                for (const auto& [size, count] : traj.states[ti].counts())
                    csv += format_int(r) + ',' + format_g17(traj.times[ti]) + ',' +
                           format_int(size) + ',' +
                           format_g17(init.h() * static_cast<double>(count)) + '\n';
            for (const EventLogEntry& e : traj.events) {
                json line = {{"replica", r},
                             {"t", e.time},
                             {"kind", e.kind == EventKind::merge ? "merge" : "split"},
                             {"i", e.i},
                             {"j", e.j},
                             {"pre_count", e.pre_count}};
                evlines += line.dump() + '\n';
            }
        }
        if (out.empty())
            std::cout << csv;
        else
            write_text(out, csv);
        if (!events.empty()) write_text(events, evlines);
    }
};

struct MeanfieldCmd {
    std::string kernel, x0, action, reward, out;
    double T = 1.0, dt = 1e-3;
    std::int64_t K_max = 64;

    void run() const {
        const RateKernel k = RateKernel::from_json(load_json(kernel));
        const MeanFieldState init = state_from_file(load_json(x0), K_max);
        const ActionFunction alpha = ActionFunction::from_json(load_json(action));
        OdeConfig cfg;
        cfg.K_max = K_max;
        cfg.dt = dt;
        RewardModel rw;
        const bool have_reward = !reward.empty();
        if (have_reward) rw = RewardModel::from_json(load_json(reward));

        std::vector<double> grid;
        for (int i = 0; i <= 100; ++i) grid.push_back(T * i / 100.0);
        grid.back() = T;
        const IntegrateResult res =
            integrate(init, k, alpha, T, cfg, have_reward ? &rw : nullptr, grid);

        std::string csv = "t,k,x_k\n";
        for (std::size_t ti = 0; ti < res.times.size(); ++ti)
            for (std::size_t i = 0; i < res.path[ti].size(); ++i)
                if (res.path[ti][i] != 0.0)
                    csv += format_g17(res.times[ti]) + ',' + format_int(
                               static_cast<std::int64_t>(i) + 1) + ',' +
                           format_g17(res.path[ti][i]) + '\n';
        if (out.empty())
            std::cout << csv;
        else
            write_text(out, csv);

        json summary = {{"final_mass", mass_norm(res.final_state)},
                        {"clipped_total", res.clipped_total},
                        {"max_truncation_leak", res.max_leak}};
        if (have_reward)
            summary["value"] = res.running_reward + rw.terminal(res.final_state);
        if (!out.empty()) std::cout << summary.dump(2) << '\n';
    }
};

struct DpCmd {
    std::string kernel, reward, egrid = "0:1:0.1", out;
    std::int64_t N = 3;
    double h = 0.0, tau = 0.1;
    int n = 5;

    void run() const {
        const RateKernel k = RateKernel::from_json(load_json(kernel));
        const RewardModel rw = RewardModel::from_json(load_json(reward));
        const double heff = h > 0.0 ? h : 1.0 / static_cast<double>(N);
        const StateSpace space = StateSpace::enumerate(N, heff);
        const std::vector<double> E = parse_grid_spec(egrid);
        const DpResult dp = shapley_dp(space, E, rw, k, tau, n);

        json table = json::object();
        for (std::size_t s = 0; s < space.states.size(); ++s) {
            json cell = {{"value", dp.V[static_cast<std::size_t>(n)][s]}};
            if (n >= 1) cell["b"] = E[static_cast<std::size_t>(dp.argmax[n - 1][s])];
            table[space.states[s].key()] = cell;
        }
        json doc = {{"N", N}, {"h", heff}, {"tau", tau}, {"n", n}, {"E_grid", E},
                    {"table", table}};
        if (out.empty())
            std::cout << doc.dump(2) << '\n';
        else
            write_text(out, doc.dump(2) + '\n');
    }
};

struct ValueCmd {
    std::string kernel, reward, x0, policy;
    double tau = 0.1;
    int n = 10;
    std::int64_t replicas = 200;
    std::uint64_t seed = 1;

    void run() const {
        const RateKernel k = RateKernel::from_json(load_json(kernel));
        const RewardModel rw = RewardModel::from_json(load_json(reward));
        const Composition init = Composition::from_json(load_json(x0));
        const Policy pi = policy_from_json(load_json(policy), tau, n);
        const ValueEstimate est = value_mc(init, pi, rw, k, tau, n, replicas, seed);
        json doc = {{"mean", est.mean}, {"se", est.se}, {"replicas", est.replicas}};
        std::cout << doc.dump(2) << '\n';
    }
};

struct Example1dSolveCmd {
    std::string V0;
    double mstar = 1.0, T = 1.0, m0 = 1.0, t = 0.0;

    void run() const {
        const TerminalSpec spec = terminal_from_options(V0, mstar);
        const OptimalAction act = optimal_action(m0, T - t, spec);
        const char* branch = act.branch == ActionBranch::grow
                                 ? "grow"
                                 : act.branch == ActionBranch::hold_bstar ? "hold-bstar"
                                                                          : "shrink";
        json doc = {{"branch", branch},
                    {"b", act.b},
                    {"value", value_closed_form(t, m0, T, spec)},
                    {"m_terminal", m_flow(T - t, m0, act.b)}};
        std::cout << doc.dump(2) << '\n';
    }
};

struct Example1dGridCmd {
    std::string fC = "1", fB = "1", V0, B = "0", bgrid = "0:1:0.1", out;
    double mstar = 1.0, T = 1.0, m_max = 3.0, dt = 0.0;
    int m_points = 241, t_slices = 11;

    void run() const {
        const TerminalSpec spec = terminal_from_options(V0, mstar);
        const Expr eC = Expr::parse(fC, Expr::VarM);
        const Expr eB = Expr::parse(fB, Expr::VarM);
        const Expr eRun = Expr::parse(B, Expr::VarM | Expr::VarB);
        GridDpConfig cfg;
        cfg.m_max = m_max;
        cfg.m_points = m_points;
        cfg.b_grid = parse_grid_spec(bgrid);
        if (dt > 0.0) {
            cfg.dt = dt;
        } else {
            const double dm = (cfg.m_max - cfg.m_min) / (m_points - 1);
            double fmax = 0.0;
            for (int mi = 0; mi < m_points; ++mi) {
                const double m = cfg.m_min + dm * mi;
                for (double b : cfg.b_grid)
                    fmax = std::fmax(fmax, std::fabs(-b * eC.eval_m(m) * m * m +
                                                     (1.0 - b) * eB.eval_m(m) * m));
            }
            cfg.dt = fmax > 0.0 ? 0.45 * dm / fmax : T;
        }
        const GridDpResult res = grid_dp_generalized(
            [&](double m) { return eC.eval_m(m); }, [&](double m) { return eB.eval_m(m); }, spec,
            [&](double m, double b) { return eRun.eval_mb(m, b); }, T, cfg);

        const std::size_t nt = res.action.size();
        const std::size_t stride = std::max<std::size_t>(1, nt / static_cast<std::size_t>(
                                                                    std::max(1, t_slices - 1)));
        std::string csv = "t,m,value,action_b\n";
        for (std::size_t k = 0; k < nt; k += stride)
            for (std::size_t j = 0; j < res.m_grid.size(); ++j)
                csv += format_g17(res.t_grid[k]) + ',' + format_g17(res.m_grid[j]) + ',' +
                       format_g17(res.value[k][j]) + ',' + format_g17(res.action[k][j]) + '\n';
        for (std::size_t j = 0; j < res.m_grid.size(); ++j)
            csv += format_g17(T) + ',' + format_g17(res.m_grid[j]) + ',' +
                   format_g17(res.value[nt][j]) + ",\n";
        if (out.empty())
            std::cout << csv;
        else
            write_text(out, csv);
    }
};

struct CouplingCmd {
    std::string x, y, kernel, config, out, kind = "marching";
    double b = 0.5, tau = 1.0, rate = -1.0;
    int grid = 8;
    std::int64_t replicas = 1000;
    std::uint64_t seed = 1;

    void run() const {
        const RateKernel k = RateKernel::from_json(load_json(kernel));
        const Composition cx = Composition::from_json(load_json(x));
        const Composition cy = Composition::from_json(load_json(y));
        double env_rate = rate;
        json ledger;
        if (env_rate < 0.0) {
            if (config.empty())
                throw ConfigError("coupling needs --rate or --config to fix the envelope rate");
            const ScalingConfig cfg = ScalingConfig::from_json(load_json(config));
            const BoundsLedger led = compute_ledger(cfg);
            env_rate = led.M2 * std::sqrt(cfg.N);
            ledger = led.to_json();
        }
        const CouplingKind ck = kind == "independent" ? CouplingKind::independent
                                                      : CouplingKind::marching;
        const ContractionReport rep =
            contraction_experiment(cx, cy, k, b, tau, grid, replicas, seed, env_rate, ck);
        json doc = {{"times", rep.times},       {"mean_dist", rep.mean_dist},
                    {"se", rep.se},             {"envelope", rep.envelope},
                    {"initial_dist", rep.initial_dist}, {"violations", rep.violations},
                    {"envelope_rate", env_rate}};
        if (!ledger.is_null()) doc["ledger"] = ledger;
        if (out.empty())
            std::cout << doc.dump(2) << '\n';
        else
            write_text(out, doc.dump(2) + '\n');
    }
};

struct BoundsCmd {
    std::string config;
    double delta = 0.0;

    void run() const {
        const ScalingConfig cfg = ScalingConfig::from_json(load_json(config));
        std::cout << compute_ledger(cfg, delta).to_json().dump(2) << '\n';
    }
};

struct BoundsValidateCmd {
    std::string sequence;

    void run() const {
        const json doc = load_json(sequence);
        std::vector<ScalingConfig> seq;
        for (const auto& e : doc) seq.push_back(ScalingConfig::from_json(e));
        const std::vector<ScalingCheck> checks = validate_scaling(seq);
        json rows = json::array();
        for (const ScalingCheck& c : checks)
            rows.push_back({{"h", c.h},
                            {"tau", c.tau},
                            {"N", c.N},
                            {"tau_sqrtN", c.tau_sqrtN},
                            {"tau_N2", c.tau_N2},
                            {"h_N2", c.h_N2},
                            {"pass", c.pass},
                            {"offender", c.offender}});
        std::cout << rows.dump(2) << '\n';
    }
};

struct ExperimentCmd {
    std::string spec_path;

    void run() const {
        const ExperimentSpec spec = ExperimentSpec::from_json(load_json(spec_path));
        const ExperimentTable table = run_experiment(spec);
        write_experiment_outputs(spec, table);
        if (spec.out_csv.empty())
            std::cout << table.csv();
        else
            std::cout << "wrote " << spec.out_csv << '\n';
        if (!spec.out_json.empty()) std::cout << "wrote " << spec.out_json << '\n';
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled fragmentation-coagulation toolkit"};
    app.require_subcommand(1);

    SimulateCmd sim;
    auto* c_sim = app.add_subcommand("simulate", "sample chain trajectories");
    c_sim->add_option("--kernel", sim.kernel, "kernel JSON file")->required();
    c_sim->add_option("--x0", sim.x0, "initial composition JSON file")->required();
    c_sim->add_option("--control", sim.control, "const:<b> | action:<file> | policy:<file>")
        ->required();
    c_sim->add_option("--T", sim.T, "horizon");
    c_sim->add_option("--tau", sim.tau, "decision-window width (0 = single window)");
    c_sim->add_option("--seed", sim.seed, "master seed");
    c_sim->add_option("--replicas", sim.replicas, "number of trajectories");
    c_sim->add_option("--out", sim.out, "trajectory CSV path (default stdout)");
    c_sim->add_option("--events", sim.events, "event log JSON-lines path");
    c_sim->add_flag("--literal", sim.literal, "literal self-pair merge weights");
    c_sim->callback([&sim] { sim.run(); });

    MeanfieldCmd mf;
    auto* c_mf = app.add_subcommand("meanfield", "integrate the deterministic limit");
    c_mf->add_option("--kernel", mf.kernel)->required();
    c_mf->add_option("--x0", mf.x0, "initial state (dense array or composition JSON)")->required();
    c_mf->add_option("--action", mf.action, "action function JSON file")->required();
    c_mf->add_option("--T", mf.T);
    c_mf->add_option("--dt", mf.dt);
    c_mf->add_option("--Kmax", mf.K_max, "size-truncation level");
    c_mf->add_option("--reward", mf.reward, "reward JSON (adds a value summary)");
    c_mf->add_option("--out", mf.out, "path CSV (default stdout)");
    c_mf->callback([&mf] { mf.run(); });

    DpCmd dp;
    auto* c_dp = app.add_subcommand("dp", "exact finite-N dynamic program");
    c_dp->add_option("--N", dp.N, "total mass")->required();
    c_dp->add_option("--hstep", dp.h, "rescaling step (default 1/N)");
    c_dp->add_option("--kernel", dp.kernel)->required();
    c_dp->add_option("--reward", dp.reward)->required();
    c_dp->add_option("--Egrid", dp.egrid, "control grid start:stop:step");
    c_dp->add_option("--tau", dp.tau);
    c_dp->add_option("--n", dp.n, "decision steps");
    c_dp->add_option("--out", dp.out, "output JSON path (default stdout)");
    c_dp->callback([&dp] { dp.run(); });

    ValueCmd val;
    auto* c_val = app.add_subcommand("value", "Monte-Carlo policy value");
    c_val->add_option("--kernel", val.kernel)->required();
    c_val->add_option("--reward", val.reward)->required();
    c_val->add_option("--x0", val.x0)->required();
    c_val->add_option("--policy", val.policy, "policy JSON file")->required();
    c_val->add_option("--tau", val.tau);
    c_val->add_option("--n", val.n);
    c_val->add_option("--replicas", val.replicas);
    c_val->add_option("--seed", val.seed);
    c_val->callback([&val] { val.run(); });

    auto* c_ex = app.add_subcommand("example1d", "1-D reduced problem");
    c_ex->require_subcommand(1);
    Example1dSolveCmd exs;
    auto* c_exs = c_ex->add_subcommand("solve", "closed-form optimal action and value");
    c_exs->add_option("--V0", exs.V0, "terminal reward expression in m (default quadratic)");
    c_exs->add_option("--mstar", exs.mstar)->required();
    c_exs->add_option("--T", exs.T);
    c_exs->add_option("--m0", exs.m0);
    c_exs->add_option("--t", exs.t, "start time");
    c_exs->callback([&exs] { exs.run(); });
    Example1dGridCmd exg;
    auto* c_exg = c_ex->add_subcommand("grid", "grid HJB value/action tables");
    c_exg->add_option("--fC", exg.fC, "coagulation norm factor, expression in m");
    c_exg->add_option("--fB", exg.fB, "fragmentation norm factor, expression in m");
    c_exg->add_option("--V0", exg.V0, "terminal reward expression in m (default quadratic)");
    c_exg->add_option("--B", exg.B, "running reward expression in m,b");
    c_exg->add_option("--mstar", exg.mstar)->required();
    c_exg->add_option("--T", exg.T);
    c_exg->add_option("--mmax", exg.m_max);
    c_exg->add_option("--mpoints", exg.m_points);
    c_exg->add_option("--bgrid", exg.bgrid);
    c_exg->add_option("--dt", exg.dt, "time step (0 = auto from the CFL bound)");
    c_exg->add_option("--tslices", exg.t_slices, "time slices emitted");
    c_exg->add_option("--out", exg.out, "CSV path (default stdout)");
    c_exg->callback([&exg] { exg.run(); });

    CouplingCmd cpl;
    auto* c_cpl = app.add_subcommand("coupling", "two-chain contraction experiment");
    c_cpl->add_option("--x", cpl.x)->required();
    c_cpl->add_option("--y", cpl.y)->required();
    c_cpl->add_option("--kernel", cpl.kernel)->required();
    c_cpl->add_option("--b", cpl.b, "constant control");
    c_cpl->add_option("--tau", cpl.tau, "horizon");
    c_cpl->add_option("--replicas", cpl.replicas);
    c_cpl->add_option("--seed", cpl.seed);
    c_cpl->add_option("--grid", cpl.grid, "observation grid points");
    c_cpl->add_option("--rate", cpl.rate, "envelope growth rate (default from --config)");
    c_cpl->add_option("--config", cpl.config, "scaling config JSON for the envelope rate");
    c_cpl->add_option("--kind", cpl.kind, "marching | independent");
    c_cpl->add_option("--out", cpl.out, "report JSON path (default stdout)");
    c_cpl->callback([&cpl] { cpl.run(); });

    BoundsCmd bnd;
    BoundsValidateCmd bval;
    auto* c_bnd = app.add_subcommand("bounds", "explicit constants ledger");
    c_bnd->add_option("--config", bnd.config, "scaling config JSON");
    c_bnd->add_option("--delta", bnd.delta, "initial-state gap for the value-gap column");
    auto* c_bval = c_bnd->add_subcommand("validate", "admissibility of a scaling sequence");
    c_bval->add_option("--sequence", bval.sequence, "JSON array of scaling configs")->required();
    c_bval->callback([&bval] { bval.run(); });
    c_bnd->callback([&bnd, c_bnd] {
        if (c_bnd->get_subcommands().empty()) {
            if (bnd.config.empty()) throw ConfigError("bounds needs --config (or 'validate')");
            bnd.run();
        }
    });

    ExperimentCmd exp;
    auto* c_exp = app.add_subcommand("experiment", "run a declarative experiment spec");
    auto* c_run = c_exp->add_subcommand("run", "execute a spec file");
    c_run->add_option("spec", exp.spec_path, "experiment spec JSON")->required();
    c_run->callback([&exp] { exp.run(); });
    c_exp->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical instability: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
