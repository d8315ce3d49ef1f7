#include "fragcoag/coupling.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/parallel.hpp"

namespace fragcoag {

namespace {

bool key_less(const EventRate& a, const EventRate& b) {
    if (a.kind != b.kind) return a.kind == EventKind::merge;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

void apply_to(Composition& c, const JointRate& r) {
    if (r.kind == EventKind::merge)
        c.apply_merge(r.i, r.j);
    else
        c.apply_split(r.i, r.j);
}

void apply_to(Composition& c, const EventRate& r) {
    if (r.kind == EventKind::merge)
        c.apply_merge(r.i, r.j);
    else
        c.apply_split(r.i, r.j);
}

struct MarchingTable {
    std::vector<JointRate> rows;
    double total = 0.0; // sum over rows of joint + lone, in row order
};

MarchingTable build_marching(const CoupledState& s, const RateKernel& kernel, double b,
                             const SimOptions& opts) {
    MarchingTable t;
    const std::vector<EventRate> ex = event_rates(s.X, kernel, b, opts);
    const std::vector<EventRate> ey = event_rates(s.Y, kernel, b, opts);
    t.rows.reserve(ex.size() + ey.size());
    std::size_t a = 0, c = 0;
    while (a < ex.size() || c < ey.size()) {
        double rx = 0.0, ry = 0.0;
        EventRate key;
        if (c == ey.size() || (a < ex.size() && key_less(ex[a], ey[c]))) {
            key = ex[a];
            rx = ex[a++].rate;
        } else if (a == ex.size() || key_less(ey[c], ex[a])) {
            key = ey[c];
            ry = ey[c++].rate;
        } else { // same event enabled on both sides
            key = ex[a];
            rx = ex[a++].rate;
            ry = ey[c++].rate;
        }
        JointRate row;
        row.kind = key.kind;
        row.i = key.i;
        row.j = key.j;
        row.joint = std::fmin(rx, ry);
        row.lone = rx > ry ? rx - ry : ry - rx;
        row.lone_on_x = rx > ry;
        t.rows.push_back(row);
        t.total += row.joint;
        t.total += row.lone;
    }
    return t;
}

// slot walk in table order, joint slots before lone slots; u in [0, total)
void apply_marching(CoupledState& s, const MarchingTable& t, double u) {
    const JointRate* fb = nullptr;
    bool fb_joint = false;
    double cum = 0.0;
    for (const JointRate& row : t.rows) {
        if (row.joint > 0.0) {
            cum += row.joint;
            fb = &row;
            fb_joint = true;
            if (u < cum) break;
        }
        if (row.lone > 0.0) {
            cum += row.lone;
            fb = &row;
            fb_joint = false;
            if (u < cum) break;
        }
    }
    if (fb == nullptr) throw NumericalError("coupling: no enabled slot despite positive rate");
    if (fb_joint) {
        apply_to(s.X, *fb);
        apply_to(s.Y, *fb);
    } else if (fb->lone_on_x) {
        apply_to(s.X, *fb);
    } else {
        apply_to(s.Y, *fb);
    }
}

struct IndepTable {
    std::vector<EventRate> ex, ey;
    double total = 0.0;
};

IndepTable build_indep(const CoupledState& s, const RateKernel& kernel, double b,
                       const SimOptions& opts) {
    IndepTable t;
    t.ex = event_rates(s.X, kernel, b, opts);
    t.ey = event_rates(s.Y, kernel, b, opts);
    for (const EventRate& r : t.ex) t.total += r.rate;
    for (const EventRate& r : t.ey) t.total += r.rate;
    return t;
}

void apply_indep(CoupledState& s, const IndepTable& t, double u) {
    const EventRate* fb = nullptr;
    bool on_x = true;
    double cum = 0.0;
    for (const EventRate& r : t.ex) {
        cum += r.rate;
        fb = &r;
        on_x = true;
        if (u < cum) break;
    }
    if (!(fb != nullptr && u < cum)) {
        for (const EventRate& r : t.ey) {
            cum += r.rate;
            fb = &r;
            on_x = false;
            if (u < cum) break;
        }
    }
    if (fb == nullptr) throw NumericalError("coupling: no enabled slot despite positive rate");
    apply_to(on_x ? s.X : s.Y, *fb);
}

void check_pair(const CoupledState& s) {
    if (s.X.h() != s.Y.h()) throw ConfigError("coupling: components must share h");
}

} // namespace

std::vector<JointRate> joint_rate_table(const CoupledState& s, const RateKernel& kernel, double b,
                                        const SimOptions& opts) {
    check_pair(s);
    return build_marching(s, kernel, b, opts).rows;
}

CoupledStepResult coupled_step(CoupledState& s, const RateKernel& kernel, double b, Rng& rng,
                               CouplingKind kind, const SimOptions& opts) {
    check_pair(s);
    CoupledStepResult res;
    if (kind == CouplingKind::marching) {
        MarchingTable t = build_marching(s, kernel, b, opts);
        if (t.total <= 0.0) {
            res.absorbed = true;
            return res;
        }
        res.wait = rng.exponential(t.total);
        apply_marching(s, t, rng.uniform() * t.total);
    } else {
        IndepTable t = build_indep(s, kernel, b, opts);
        if (t.total <= 0.0) {
            res.absorbed = true;
            return res;
        }
        res.wait = rng.exponential(t.total);
        apply_indep(s, t, rng.uniform() * t.total);
    }
    return res;
}

CoupledState run_coupling(const Composition& x, const Composition& y, const RateKernel& kernel,
                          double b, double horizon, Rng& rng, CouplingKind kind,
                          const SimOptions& opts) {
    if (!(horizon >= 0.0)) throw ConfigError("coupling: horizon must be >= 0");
    CoupledState s{x, y};
    check_pair(s);
    double t = 0.0;
    for (;;) {
        double total;
        MarchingTable mt;
        IndepTable it;
        if (kind == CouplingKind::marching) {
            mt = build_marching(s, kernel, b, opts);
            total = mt.total;
        } else {
            it = build_indep(s, kernel, b, opts);
            total = it.total;
        }
        if (total <= 0.0) break;
        const double wait = rng.exponential(total);
        if (t + wait >= horizon) break;
        t += wait;
        const double u = rng.uniform() * total;
        if (kind == CouplingKind::marching)
            apply_marching(s, mt, u);
        else
            apply_indep(s, it, u);
    }
    return s;
}

ContractionReport contraction_experiment(const Composition& x, const Composition& y,
                                         const RateKernel& kernel, double b, double horizon,
                                         int grid_points, std::int64_t replicas,
                                         std::uint64_t seed, double envelope_rate,
                                         CouplingKind kind, const SimOptions& opts) {
    CoupledState s0{x, y};
    check_pair(s0);
    if (x.total_mass() != y.total_mass())
        throw ConfigError("coupling: contraction needs equal total mass on both components");
    if (!(horizon > 0.0)) throw ConfigError("coupling: horizon must be positive");
    if (grid_points < 1) throw ConfigError("coupling: needs at least one grid point");
    if (replicas < 2) throw ConfigError("coupling: needs at least 2 replicas");

    const std::size_t G = static_cast<std::size_t>(grid_points);
    ContractionReport rep;
    rep.times.resize(G);
    for (std::size_t g = 0; g < G; ++g)
        rep.times[g] = horizon * static_cast<double>(g + 1) / static_cast<double>(G);
    rep.initial_dist = std::sqrt(Composition::dist_l2sq(x, y));

    const std::size_t M = static_cast<std::size_t>(replicas);
    const std::size_t chunks = chunk_count(M, kReplicaChunk);
    std::vector<std::vector<double>> sum(chunks), sumsq(chunks);
    parallel_chunks(M, kReplicaChunk, [&](std::size_t begin, std::size_t end, std::size_t slot) {
        sum[slot].assign(G, 0.0);
        sumsq[slot].assign(G, 0.0);
        for (std::size_t r = begin; r < end; ++r) {
            Rng rng(derive_seed(seed, r));
            CoupledState s{x, y};
            double t = 0.0;
            std::size_t gi = 0;
            while (gi < G) {
                double total;
                MarchingTable mt;
                IndepTable it;
                if (kind == CouplingKind::marching) {
                    mt = build_marching(s, kernel, b, opts);
                    total = mt.total;
                } else {
                    it = build_indep(s, kernel, b, opts);
                    total = it.total;
                }
                double tnext = HUGE_VAL;
                if (total > 0.0) tnext = t + rng.exponential(total);
                while (gi < G && rep.times[gi] <= tnext) {
                    const double d = std::sqrt(Composition::dist_l2sq(s.X, s.Y));
                    sum[slot][gi] += d;
                    sumsq[slot][gi] += d * d;
                    ++gi;
                }
                if (gi == G || total <= 0.0) break;
                const double u = rng.uniform() * total;
                if (kind == CouplingKind::marching)
                    apply_marching(s, mt, u);
                else
                    apply_indep(s, it, u);
                t = tnext;
            }
        }
    });

    rep.mean_dist.assign(G, 0.0);
    rep.se.assign(G, 0.0);
    rep.envelope.resize(G);
    const double Md = static_cast<double>(M);
    for (std::size_t c = 0; c < chunks; ++c)
        for (std::size_t g = 0; g < G; ++g) {
            rep.mean_dist[g] += sum[c][g];
            rep.se[g] += sumsq[c][g];
        }
    for (std::size_t g = 0; g < G; ++g) {
        const double mean = rep.mean_dist[g] / Md;
        const double var = (rep.se[g] - Md * mean * mean) / (Md - 1.0);
        rep.mean_dist[g] = mean;
        rep.se[g] = std::sqrt(std::fmax(var, 0.0) / Md);
        rep.envelope[g] = std::exp(envelope_rate * rep.times[g]) * rep.initial_dist;
        if (mean > rep.envelope[g] + 3.0 * rep.se[g]) ++rep.violations;
    }
    return rep;
}

} // namespace fragcoag
