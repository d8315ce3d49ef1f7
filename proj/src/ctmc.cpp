#include "fragcoag/ctmc.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/parallel.hpp"

namespace fragcoag {

namespace {

// i = j merge weight over ordered pairs: combinatorial n_i(n_i-1) picks two
// distinct coalitions; the literal-generator variant keeps n_i^2 but still
// suppresses the n_i = 1 case, which has no pair to merge
inline double self_pair_weight(std::int64_t ni, bool literal) {
    if (literal) return ni >= 2 ? static_cast<double>(ni) * static_cast<double>(ni) : 0.0;
    return static_cast<double>(ni) * static_cast<double>(ni - 1);
}

struct Rows {
    std::vector<std::int64_t> sizes; // occupied sizes ascending
    std::vector<std::int64_t> ns;    // their counts
    std::vector<double> merge_row;   // h * sum_j w_ij C_ij for each size i
    std::vector<double> split_row;   // n_i * sum_{j<i} F_ij
    double total = 0.0;
};

Rows rate_rows(const Composition& c, const RateKernel& kernel, double b, const SimOptions& opts) {
    Rows r;
    const double h = c.h();
    const double m = c.l1_norm();
    const double P = static_cast<double>(c.coalition_count());
    const bool uni = kernel.uniform();
    const double cu = uni ? kernel.coag_uniform(m, b) : 0.0;
    const double gu = uni ? kernel.frag_row_uniform(m, b) : 0.0;

    const auto& counts = c.counts();
    r.sizes.reserve(counts.size());
    r.ns.reserve(counts.size());
    r.merge_row.reserve(counts.size());
    r.split_row.reserve(counts.size());

    for (const auto& [i, ni] : counts) {
        double merge;
        if (uni) {
            // sum over ordered partners: n_i(P - n_i) cross + self-pair weight
            double w = opts.literal_self_pairs
                           ? (ni >= 2 ? static_cast<double>(ni) * P : P - 1.0)
                           : static_cast<double>(ni) * (P - 1.0);
            merge = h * cu * w;
        } else {
            merge = 0.0;
            for (const auto& [j, nj] : counts) {
                double w = (i == j) ? self_pair_weight(ni, opts.literal_self_pairs)
                                    : static_cast<double>(ni) * static_cast<double>(nj);
                if (w > 0.0) merge += h * w * kernel.coag(i, j, m, b);
            }
        }
        double split;
        if (i < 2) {
            split = 0.0;
        } else if (uni) {
            split = static_cast<double>(ni) * gu;
        } else {
            split = static_cast<double>(ni) * kernel.frag_row_sum(i, m, b);
        }
        r.sizes.push_back(i);
        r.ns.push_back(ni);
        r.merge_row.push_back(merge);
        r.split_row.push_back(split);
    }
    // fixed accumulation order: all merge rows ascending, then all split rows
    double t = 0.0;
    for (double v : r.merge_row) t += v;
    for (double v : r.split_row) t += v;
    r.total = t;
    return r;
}

struct PickedEvent {
    EventKind kind;
    std::int64_t i;
    std::int64_t j;
};

// walk the cumulative rate in the same order rate_rows summed it; u in [0, total)
PickedEvent select_event(const Composition& c, const RateKernel& kernel, double b,
                         const SimOptions& opts, const Rows& rows, double u) {
    const double h = c.h();
    const double m = c.l1_norm();
    const bool uni = kernel.uniform();
    const double cu = uni ? kernel.coag_uniform(m, b) : 0.0;

    bool have_fallback = false;
    PickedEvent fallback{EventKind::merge, 0, 0};

    double cum = 0.0;
    for (std::size_t r = 0; r < rows.sizes.size(); ++r) {
        double row = rows.merge_row[r];
        if (row <= 0.0) continue;
        const std::int64_t i = rows.sizes[r];
        const std::int64_t ni = rows.ns[r];
        if (u < cum + row) {
            // partner walk over occupied sizes ascending
            double resid = u - cum;
            double cj = 0.0;
            for (const auto& [j, nj] : c.counts()) {
                double w = (i == j) ? self_pair_weight(ni, opts.literal_self_pairs)
                                    : static_cast<double>(ni) * static_cast<double>(nj);
                if (w <= 0.0) continue;
                double term = h * w * (uni ? cu : kernel.coag(i, j, m, b));
                if (term <= 0.0) continue;
                cj += term;
                fallback = {EventKind::merge, i, j};
                have_fallback = true;
                if (resid < cj) return fallback;
            }
            if (have_fallback) return fallback; // u landed on the row's rounding slack
        }
        cum += row;
    }
    have_fallback = false;
    for (std::size_t r = 0; r < rows.sizes.size(); ++r) {
        double row = rows.split_row[r];
        if (row <= 0.0) continue;
        const std::int64_t i = rows.sizes[r];
        const double ni = static_cast<double>(rows.ns[r]);
        if (u < cum + row) {
            double resid = u - cum;
            double cj = 0.0;
            for (std::int64_t j = 1; j < i; ++j) {
                double term = ni * kernel.frag(i, j, m, b);
                if (term <= 0.0) continue;
                cj += term;
                fallback = {EventKind::split, i, j};
                have_fallback = true;
                if (resid < cj) return fallback;
            }
            if (have_fallback) return fallback;
        }
        cum += row;
    }
    // u fell into trailing rounding slack: take the last enabled event overall
    for (std::size_t r = rows.sizes.size(); r-- > 0;) {
        const std::int64_t i = rows.sizes[r];
        if (rows.split_row[r] > 0.0) {
            for (std::int64_t j = i - 1; j >= 1; --j)
                if (rows.ns[r] * kernel.frag(i, j, m, b) > 0.0) return {EventKind::split, i, j};
        }
        if (rows.merge_row[r] > 0.0) {
            const std::int64_t ni = rows.ns[r];
            for (auto it = c.counts().rbegin(); it != c.counts().rend(); ++it) {
                double w = (it->first == i) ? self_pair_weight(ni, opts.literal_self_pairs)
                                            : static_cast<double>(ni) * static_cast<double>(it->second);
                if (w > 0.0 && (uni ? cu : kernel.coag(i, it->first, m, b)) > 0.0)
                    return {EventKind::merge, i, it->first};
            }
        }
    }
    throw NumericalError("event selection: no enabled event despite positive total rate");
}

void apply_event(Composition& c, const PickedEvent& ev) {
    if (ev.kind == EventKind::merge)
        c.apply_merge(ev.i, ev.j);
    else
        c.apply_split(ev.i, ev.j);
}

} // namespace

double total_rate(const Composition& c, const RateKernel& kernel, double b,
                  const SimOptions& opts) {
    return rate_rows(c, kernel, b, opts).total;
}

std::vector<EventRate> event_rates(const Composition& c, const RateKernel& kernel, double b,
                                   const SimOptions& opts) {
    std::vector<EventRate> out;
    const double h = c.h();
    const double m = c.l1_norm();
    const auto& counts = c.counts();
    // merges keyed by unordered {i, j}, i <= j: both ordered terms folded in
    for (auto it = counts.begin(); it != counts.end(); ++it) {
        for (auto jt = it; jt != counts.end(); ++jt) {
            const std::int64_t i = it->first, j = jt->first;
            double w = (i == j) ? self_pair_weight(it->second, opts.literal_self_pairs)
                                : 2.0 * static_cast<double>(it->second) *
                                      static_cast<double>(jt->second);
            if (w <= 0.0) continue;
            double rate = h * w * kernel.coag(i, j, m, b);
            if (rate > 0.0) out.push_back({EventKind::merge, i, j, rate});
        }
    }
    // splits keyed by the unordered fragment pair {j, i-j}: j <= i-j
    for (const auto& [i, ni] : counts) {
        for (std::int64_t j = 1; 2 * j <= i; ++j) {
            double f = kernel.frag(i, j, m, b);
            if (2 * j < i) f += kernel.frag(i, i - j, m, b);
            double rate = static_cast<double>(ni) * f;
            if (rate > 0.0) out.push_back({EventKind::split, i, j, rate});
        }
    }
    return out;
}

StepResult step(Composition& c, const RateKernel& kernel, double b, Rng& rng,
                const SimOptions& opts) {
    Rows rows = rate_rows(c, kernel, b, opts);
    StepResult res;
    if (rows.total <= 0.0) {
        res.absorbed = true;
        res.wait = 0.0;
        res.event = {};
        return res;
    }
    res.wait = rng.exponential(rows.total);
    double u = rng.uniform() * rows.total;
    PickedEvent ev = select_event(c, kernel, b, opts, rows, u);
    res.event = {res.wait, ev.kind, ev.i, ev.j, c.coalition_count()};
    apply_event(c, ev);
    return res;
}

ControlSchedule ControlSchedule::constant(double b, double tau) {
    ControlSchedule s;
    s.tau = tau;
    s.pick = [b](int, const Composition&) { return b; };
    return s;
}

ControlSchedule ControlSchedule::from_action(const ActionFunction& alpha, double tau) {
    if (!(tau > 0.0)) throw ConfigError("control schedule: action sampling needs tau > 0");
    ControlSchedule s;
    s.tau = tau;
    s.pick = [alpha, tau](int k, const Composition&) { return alpha(k * tau); };
    return s;
}

ControlSchedule ControlSchedule::from_feedback(
    std::function<double(int, const Composition&)> rule, double tau) {
    if (!(tau > 0.0)) throw ConfigError("control schedule: feedback needs tau > 0");
    ControlSchedule s;
    s.tau = tau;
    s.pick = std::move(rule);
    return s;
}

Trajectory simulate(const Composition& x0, const RateKernel& kernel,
                    const ControlSchedule& control, double T, const std::vector<double>& obs_grid,
                    std::uint64_t seed, const SimOptions& opts) {
    if (!(T >= 0.0)) throw ConfigError("simulate: horizon must be >= 0");
    if (!control.pick) throw ConfigError("simulate: control schedule has no rule");
    for (std::size_t o = 0; o < obs_grid.size(); ++o) {
        if (o > 0 && !(obs_grid[o] >= obs_grid[o - 1]))
            throw ConfigError("simulate: observation grid must be ascending");
        if (obs_grid[o] < -1e-12 || obs_grid[o] > T + 1e-12)
            throw ConfigError("simulate: observation time outside [0, T]");
    }

    Trajectory traj;
    traj.seed = seed;
    traj.horizon = T;
    Rng rng(seed);
    Composition state = x0;

    const double tau = control.tau > 0.0 ? control.tau : T;
    int n_windows = 1;
    if (T > 0.0 && tau > 0.0 && tau < T)
        n_windows = static_cast<int>(std::ceil(T / tau - 1e-9));
    traj.window_events.assign(static_cast<std::size_t>(n_windows), 0);

    std::size_t oi = 0;
    auto emit_through = [&](double tcur) {
        while (oi < obs_grid.size() && obs_grid[oi] <= tcur) {
            traj.times.push_back(obs_grid[oi]);
            traj.states.push_back(state);
            ++oi;
        }
    };
    auto emit_before = [&](double tevent) {
        while (oi < obs_grid.size() && obs_grid[oi] < tevent) {
            traj.times.push_back(obs_grid[oi]);
            traj.states.push_back(state);
            ++oi;
        }
    };

    double t = 0.0;
    emit_through(0.0);
    if (T == 0.0) {
        traj.window_controls.push_back(control.pick(0, state));
        return traj;
    }

    for (int k = 0; k < n_windows; ++k) {
        const double wend = (k + 1 == n_windows) ? T : (k + 1) * tau;
        const double b = control.pick(k, state);
        traj.window_controls.push_back(b);
        for (;;) {
            Rows rows = rate_rows(state, kernel, b, opts);
            if (rows.total <= 0.0) break; // absorbed until the next control change
            double dt = rng.exponential(rows.total);
            if (t + dt >= wend) break;
            t += dt;
            emit_before(t);
            double u = rng.uniform() * rows.total;
            PickedEvent ev = select_event(state, kernel, b, opts, rows, u);
            if (opts.log_events)
                traj.events.push_back({t, ev.kind, ev.i, ev.j, state.coalition_count()});
            ++traj.window_events[static_cast<std::size_t>(k)];
            apply_event(state, ev);
        }
        t = wend;
        emit_through(t);
    }
    return traj;
}

DriftEstimate drift_estimate(const Composition& x, const RateKernel& kernel, double b, double tau,
                             std::int64_t replicas, std::uint64_t seed, const SimOptions& opts) {
    if (replicas < 2) throw ConfigError("drift_estimate: needs at least 2 replicas");
    if (!(tau >= 0.0)) throw ConfigError("drift_estimate: tau must be >= 0");
    const std::size_t dim = static_cast<std::size_t>(x.total_mass()); // sizes 1..N reachable
    const std::size_t M = static_cast<std::size_t>(replicas);
    const std::size_t chunks = chunk_count(M, kReplicaChunk);

    std::vector<std::vector<double>> sum(chunks), sumsq(chunks);
    parallel_chunks(M, kReplicaChunk, [&](std::size_t begin, std::size_t end, std::size_t slot) {
        std::vector<double>& s1 = sum[slot];
        std::vector<double>& s2 = sumsq[slot];
        s1.assign(dim, 0.0);
        s2.assign(dim, 0.0);
        std::vector<double> disp(dim);
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng(derive_seed(seed, r));
            Composition state = x;
            double t = 0.0;
            for (;;) {
                Rows rows = rate_rows(state, kernel, b, opts);
                if (rows.total <= 0.0) break;
                double dt = rng.exponential(rows.total);
                if (t + dt >= tau) break;
                t += dt;
                double u = rng.uniform() * rows.total;
                apply_event(state, select_event(state, kernel, b, opts, rows, u));
            }
            std::fill(disp.begin(), disp.end(), 0.0);
            for (const auto& [k, n] : state.counts())
                disp[static_cast<std::size_t>(k - 1)] += x.h() * static_cast<double>(n);
            for (const auto& [k, n] : x.counts())
                disp[static_cast<std::size_t>(k - 1)] -= x.h() * static_cast<double>(n);
            for (std::size_t d = 0; d < dim; ++d) {
                s1[d] += disp[d];
                s2[d] += disp[d] * disp[d];
            }
        }
    });

    DriftEstimate est;
    est.replicas = replicas;
    est.mean.assign(dim, 0.0);
    est.se.assign(dim, 0.0);
    for (std::size_t cck = 0; cck < chunks; ++cck)
        for (std::size_t d = 0; d < dim; ++d) {
            est.mean[d] += sum[cck][d];
            est.se[d] += sumsq[cck][d]; // holds sum of squares until finalized below
        }
    const double Md = static_cast<double>(M);
    for (std::size_t d = 0; d < dim; ++d) {
        double mean = est.mean[d] / Md;
        double var = (est.se[d] - Md * mean * mean) / (Md - 1.0);
        est.mean[d] = mean;
        est.se[d] = std::sqrt(std::fmax(var, 0.0) / Md);
    }
    return est;
}

} // namespace fragcoag
