#include <cmath>
#include <memory>

#include "fragcoag/control.hpp"
#include "fragcoag/errors.hpp"
#include "fragcoag/vecops.hpp"

namespace fragcoag {

namespace {

constexpr std::uint64_t kCountCap = 1000000000000000000ull; // 10^18 saturation

void check_grid(const std::vector<double>& E_grid) {
    if (E_grid.empty()) throw ConfigError("dp: empty control grid");
    for (double b : E_grid)
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("dp: control grid values outside [0, 1]");
}

// C += A*B for dense row-major n x n (C must be zeroed by the caller)
void matmul_acc(const double* A, const double* B, double* C, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double a = A[i * n + k];
            if (a != 0.0) vec::axpy(a, B + k * n, C + i * n, n);
        }
}

double inf_norm(const std::vector<double>& A, std::size_t n) {
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::fabs(A[i * n + j]);
        best = std::fmax(best, row);
    }
    return best;
}

void gen_partitions(std::int64_t remaining, std::int64_t maxpart, Composition::Counts& cur,
                    double h, std::vector<Composition>& out) {
    if (remaining == 0) {
        out.emplace_back(h, cur);
        return;
    }
    for (std::int64_t part = std::min(maxpart, remaining); part >= 1; --part) {
        ++cur[part];
        gen_partitions(remaining - part, part, cur, h, out);
        if (--cur[part] == 0) cur.erase(part);
    }
}

} // namespace

std::uint64_t partition_count(std::int64_t N) {
    if (N < 0) throw ConfigError("partition_count: N must be >= 0");
    std::vector<std::uint64_t> p(static_cast<std::size_t>(N) + 1, 0);
    p[0] = 1;
    for (std::int64_t part = 1; part <= N; ++part)
        for (std::int64_t v = part; v <= N; ++v) {
            std::uint64_t& dst = p[static_cast<std::size_t>(v)];
            const std::uint64_t add = p[static_cast<std::size_t>(v - part)];
            dst = (dst > kCountCap - add) ? kCountCap : dst + add;
        }
    return p[static_cast<std::size_t>(N)];
}

StateSpace StateSpace::enumerate(std::int64_t N, double h, std::size_t cap) {
    if (N < 1) throw ConfigError("state space: N must be >= 1");
    const std::uint64_t count = partition_count(N);
    if (count > cap)
        throw ConfigError("state space: " + std::to_string(count) + " states exceed the cap of " +
                          std::to_string(cap));
    StateSpace s;
    s.h = h;
    s.N = N;
    s.states.reserve(static_cast<std::size_t>(count));
    Composition::Counts cur;
    gen_partitions(N, N, cur, h, s.states);
    s.index.reserve(s.states.size());
    for (std::size_t i = 0; i < s.states.size(); ++i) s.index.emplace(s.states[i].key(), i);
    return s;
}

std::size_t StateSpace::find(const Composition& c) const {
    auto it = index.find(c.key());
    if (it == index.end())
        throw ConfigError("state space: composition not in the enumerated space (mass " +
                          std::to_string(c.total_mass()) + " vs " + std::to_string(N) + ")");
    return it->second;
}

std::vector<double> expm_dense(const std::vector<double>& Q, std::size_t n, double t, double tol) {
    if (Q.size() != n * n) throw ConfigError("expm: matrix size mismatch");
    if (!(tol > 0.0)) throw ConfigError("expm: tolerance must be positive");
    std::vector<double> A(Q);
    for (double& v : A) v *= t;
    const double nrm = inf_norm(A, n);
    int s = 0;
    if (nrm > 0.5) {
        s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
        const double inv = std::ldexp(1.0, -s);
        for (double& v : A) v *= inv;
    }
    std::vector<double> E(n * n, 0.0), term(A), next(n * n);
    for (std::size_t i = 0; i < n; ++i) E[i * n + i] = 1.0;
    for (std::size_t i = 0; i < n * n; ++i) E[i] += term[i];
    for (int k = 2; k <= 400; ++k) {
        std::fill(next.begin(), next.end(), 0.0);
        matmul_acc(term.data(), A.data(), next.data(), n);
        const double inv_k = 1.0 / static_cast<double>(k);
        for (double& v : next) v *= inv_k;
        term.swap(next);
        for (std::size_t i = 0; i < n * n; ++i) E[i] += term[i];
        if (inf_norm(term, n) <= tol) break;
        if (k == 400) throw NumericalError("expm: series failed to converge");
    }
    for (int r = 0; r < s; ++r) {
        std::fill(next.begin(), next.end(), 0.0);
        matmul_acc(E.data(), E.data(), next.data(), n);
        E.swap(next);
    }
    return E;
}

std::vector<double> build_generator(const StateSpace& space, const RateKernel& kernel, double b,
                                    const SimOptions& opts) {
    const std::size_t S = space.states.size();
    std::vector<double> Q(S * S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        for (const EventRate& ev : event_rates(space.states[s], kernel, b, opts)) {
            Composition target = space.states[s];
            if (ev.kind == EventKind::merge)
                target.apply_merge(ev.i, ev.j);
            else
                target.apply_split(ev.i, ev.j);
            const std::size_t d = space.find(target);
            Q[s * S + d] += ev.rate;
            Q[s * S + s] -= ev.rate;
        }
    }
    return Q;
}

DpResult shapley_dp(const StateSpace& space, const std::vector<double>& E_grid,
                    const RewardModel& reward, const RateKernel& kernel, double tau, int n,
                    const SimOptions& opts) {
    check_grid(E_grid);
    if (!(tau > 0.0)) throw ConfigError("dp: tau must be positive");
    if (n < 0) throw ConfigError("dp: step count must be >= 0");
    const std::size_t S = space.states.size();
    if (S == 0) throw ConfigError("dp: empty state space");

    DpResult res;
    res.space = space;
    res.E_grid = E_grid;
    res.tau = tau;
    res.n = n;

    std::vector<std::vector<double>> P(E_grid.size());
    std::vector<std::vector<double>> Brow(E_grid.size(), std::vector<double>(S));
    for (std::size_t bi = 0; bi < E_grid.size(); ++bi) {
        P[bi] = expm_dense(build_generator(space, kernel, E_grid[bi], opts), S, tau);
        for (std::size_t s = 0; s < S; ++s)
            Brow[bi][s] = reward.running(space.states[s], E_grid[bi]);
    }

    res.V.reserve(static_cast<std::size_t>(n) + 1);
    res.argmax.reserve(static_cast<std::size_t>(n));
    std::vector<double> v0(S);
    for (std::size_t s = 0; s < S; ++s) v0[s] = reward.terminal(space.states[s]);
    res.V.push_back(std::move(v0));

    for (int k = 1; k <= n; ++k) {
        const std::vector<double>& prev = res.V.back();
        std::vector<double> vk(S, -HUGE_VAL);
        std::vector<int> arg(S, 0);
        for (std::size_t bi = 0; bi < E_grid.size(); ++bi) {
            const double* Pb = P[bi].data();
            for (std::size_t s = 0; s < S; ++s) {
                const double cand = tau * Brow[bi][s] + vec::dot(Pb + s * S, prev.data(), S);
                if (cand > vk[s]) { // ties keep the smallest control index
                    vk[s] = cand;
                    arg[s] = static_cast<int>(bi);
                }
            }
        }
        res.V.push_back(std::move(vk));
        res.argmax.push_back(std::move(arg));
    }
    return res;
}

double DpResult::value_at(const Composition& x0) const {
    return V[static_cast<std::size_t>(n)][space.find(x0)];
}

Policy DpResult::policy() const {
    auto sp = std::make_shared<StateSpace>(space);
    auto am = std::make_shared<std::vector<std::vector<int>>>(argmax);
    auto eg = std::make_shared<std::vector<double>>(E_grid);
    const int nn = n;
    return Policy::from_rule(
        [sp, am, eg, nn](int k, const Composition& x) {
            const int to_go = nn - k; // row used when building V[to_go]
            return (*eg)[static_cast<std::size_t>(
                (*am)[static_cast<std::size_t>(to_go - 1)][sp->find(x)])];
        },
        nn);
}

BruteResult openloop_brute_exact(const Composition& x0, const StateSpace& space,
                                 const std::vector<double>& E_grid, const RewardModel& reward,
                                 const RateKernel& kernel, double tau, int n,
                                 std::size_t max_candidates, const SimOptions& opts) {
    check_grid(E_grid);
    if (!(tau > 0.0)) throw ConfigError("brute: tau must be positive");
    if (n < 0) throw ConfigError("brute: step count must be >= 0");
    const std::size_t S = space.states.size();
    double fam = 1.0;
    for (int k = 0; k < n; ++k) fam *= static_cast<double>(E_grid.size());
    if (fam > static_cast<double>(max_candidates))
        throw ConfigError("brute: " + std::to_string(static_cast<long long>(fam)) +
                          " candidate sequences exceed the cap");

    std::vector<std::vector<double>> P(E_grid.size());
    std::vector<std::vector<double>> Brow(E_grid.size(), std::vector<double>(S));
    for (std::size_t bi = 0; bi < E_grid.size(); ++bi) {
        P[bi] = expm_dense(build_generator(space, kernel, E_grid[bi], opts), S, tau);
        for (std::size_t s = 0; s < S; ++s)
            Brow[bi][s] = reward.running(space.states[s], E_grid[bi]);
    }
    std::vector<double> v0(S);
    for (std::size_t s = 0; s < S; ++s) v0[s] = reward.terminal(space.states[s]);
    const std::size_t start = space.find(x0);

    BruteResult best;
    best.best_value = -HUGE_VAL;
    best.candidates = 0;
    std::vector<std::size_t> seq(static_cast<std::size_t>(n), 0);
    std::vector<double> mu(S), munext(S);
    for (;;) {
        std::fill(mu.begin(), mu.end(), 0.0);
        mu[start] = 1.0;
        double v = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::size_t bi = seq[static_cast<std::size_t>(k)];
            v += tau * vec::dot(mu.data(), Brow[bi].data(), S);
            std::fill(munext.begin(), munext.end(), 0.0);
            const double* Pb = P[bi].data();
            for (std::size_t s = 0; s < S; ++s)
                if (mu[s] != 0.0) vec::axpy(mu[s], Pb + s * S, munext.data(), S);
            mu.swap(munext);
        }
        v += vec::dot(mu.data(), v0.data(), S);
        ++best.candidates;
        if (v > best.best_value) {
            best.best_value = v;
            best.best_controls.assign(seq.size(), 0.0);
            for (std::size_t k = 0; k < seq.size(); ++k) best.best_controls[k] = E_grid[seq[k]];
        }
        // odometer over E_grid^n
        std::size_t pos = seq.size();
        while (pos > 0 && ++seq[pos - 1] == E_grid.size()) seq[--pos] = 0;
        if (pos == 0) break;
    }
    return best;
}

BruteResult openloop_brute_meanfield(const MeanFieldState& x0, const std::vector<double>& E_grid,
                                     const RewardModel& reward, const RateKernel& kernel,
                                     double tau, int n, const OdeConfig& ode_cfg,
                                     std::size_t max_candidates) {
    check_grid(E_grid);
    if (!(tau > 0.0)) throw ConfigError("brute: tau must be positive");
    if (n < 1) throw ConfigError("brute: needs at least one window");
    double fam = 1.0;
    for (int k = 0; k < n; ++k) fam *= static_cast<double>(E_grid.size());
    if (fam > static_cast<double>(max_candidates))
        throw ConfigError("brute: " + std::to_string(static_cast<long long>(fam)) +
                          " candidate sequences exceed the cap");
    const double T = static_cast<double>(n) * tau;

    BruteResult best;
    best.best_value = -HUGE_VAL;
    best.candidates = 0;
    std::vector<std::size_t> seq(static_cast<std::size_t>(n), 0);
    for (;;) {
        std::vector<ActionPiece> pieces;
        pieces.reserve(seq.size());
        for (int k = 0; k < n; ++k) {
            ActionPiece p;
            p.t0 = static_cast<double>(k) * tau;
            p.t1 = (k + 1 == n) ? T : static_cast<double>(k + 1) * tau;
            p.kind = ActionPiece::Kind::constant;
            p.b0 = p.b1 = E_grid[seq[static_cast<std::size_t>(k)]];
            pieces.push_back(p);
        }
        const double v = value_deterministic(x0, kernel, ActionFunction::from_pieces(pieces), T,
                                             reward, ode_cfg);
        ++best.candidates;
        if (v > best.best_value) {
            best.best_value = v;
            best.best_controls.assign(seq.size(), 0.0);
            for (std::size_t k = 0; k < seq.size(); ++k) best.best_controls[k] = E_grid[seq[k]];
        }
        std::size_t pos = seq.size();
        while (pos > 0 && ++seq[pos - 1] == E_grid.size()) seq[--pos] = 0;
        if (pos == 0) break;
    }
    return best;
}

} // namespace fragcoag
