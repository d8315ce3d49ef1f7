#include "fragcoag/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/vecops.hpp"

namespace fragcoag {

namespace {

struct RhsWork {
    std::vector<double> suffix;   // suffix[i] = sum of x[i..]
    std::vector<double> suffix_y; // same for y[j] = x[j]/(size-1), sizes >= 2
};

// f written in place; returns the truncation leak.  The uniform path costs one
// convolution per component; the general path pays the full double loop.
double rhs_core(const MeanFieldState& x, const RateKernel& kernel, double b, MeanFieldState& f,
                RhsWork& w) {
    const std::size_t K = x.size();
    f.assign(K, 0.0);
    if (K == 0) return 0.0;
    const double m = vec::sum(x.data(), K);

    if (kernel.uniform()) {
        const double c = kernel.coag_uniform(m, b);
        const double g = kernel.frag_row_uniform(m, b);
        w.suffix.assign(K + 1, 0.0);
        w.suffix_y.assign(K + 1, 0.0);
        for (std::size_t i = K; i-- > 0;) {
            w.suffix[i] = x[i] + w.suffix[i + 1];
            w.suffix_y[i] = (i >= 1 ? x[i] / static_cast<double>(i) : 0.0) + w.suffix_y[i + 1];
        }
        for (std::size_t i = 0; i < K; ++i) {
            const std::size_t s = i + 1;
            double v = c * vec::conv_at(x.data(), s) - 2.0 * c * x[i] * m;
            v += 2.0 * g * w.suffix_y[s]; // splits arriving from sizes > s
            if (s >= 2) v -= g * x[i];
            f[i] = v;
        }
        double leak = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            const double a = static_cast<double>(i + 1);
            leak += a * x[i] * w.suffix[K - 1 - i]; // partners of size > K-(i+1)
        }
        return 2.0 * c * leak;
    }

    for (std::size_t i = 0; i < K; ++i) {
        const std::int64_t s = static_cast<std::int64_t>(i + 1);
        double v = 0.0;
        for (std::int64_t j = 1; j < s; ++j) {
            double prod = x[static_cast<std::size_t>(j - 1)] * x[static_cast<std::size_t>(s - j - 1)];
            if (prod != 0.0) v += kernel.coag(j, s - j, m, b) * prod;
        }
        if (x[i] != 0.0) {
            double loss = 0.0;
            for (std::size_t jj = 0; jj < K; ++jj)
                if (x[jj] != 0.0)
                    loss += kernel.coag(s, static_cast<std::int64_t>(jj + 1), m, b) * x[jj];
            v -= 2.0 * x[i] * loss;
        }
        for (std::size_t jj = i + 1; jj < K; ++jj)
            if (x[jj] != 0.0)
                v += 2.0 * kernel.frag(static_cast<std::int64_t>(jj + 1), s, m, b) * x[jj];
        if (x[i] != 0.0 && s >= 2) {
            double loss = 0.0;
            for (std::int64_t j = 1; j < s; ++j) loss += kernel.frag(s, j, m, b);
            v -= x[i] * loss;
        }
        f[i] = v;
    }
    double leak = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        if (x[i] == 0.0) continue;
        const std::int64_t a = static_cast<std::int64_t>(i + 1);
        for (std::size_t jj = K - i - 1; jj < K; ++jj) { // partner size > K - a
            if (x[jj] == 0.0) continue;
            const std::int64_t bb = static_cast<std::int64_t>(jj + 1);
            leak += static_cast<double>(a + bb) * kernel.coag(a, bb, m, b) * x[i] * x[jj];
        }
    }
    return leak;
}

int find_piece(const std::vector<ActionPiece>& pieces, double t) {
    int lo = 0, hi = static_cast<int>(pieces.size()) - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (t < pieces[static_cast<std::size_t>(mid)].t1)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

// evaluate alpha from inside a fixed piece so stages at the right endpoint see
// the piece's own left-limit value, not the next piece's start
double piece_value(const ActionPiece& p, double t) {
    if (p.kind == ActionPiece::Kind::constant) return p.b0;
    double w = (t - p.t0) / (p.t1 - p.t0);
    w = std::clamp(w, 0.0, 1.0);
    return p.b0 + (p.b1 - p.b0) * w;
}

} // namespace

RhsResult smoluchowski_rhs(const MeanFieldState& x, const RateKernel& kernel, double b) {
    RhsResult r;
    RhsWork w;
    r.leak = rhs_core(x, kernel, b, r.f, w);
    return r;
}

double mass_drift(const MeanFieldState& x, const RateKernel& kernel, double b) {
    MeanFieldState f;
    RhsWork w;
    rhs_core(x, kernel, b, f, w);
    return vec::mass(f.data(), f.size());
}

IntegrateResult integrate(const MeanFieldState& x0, const RateKernel& kernel,
                          const ActionFunction& alpha, double T, const OdeConfig& cfg,
                          const RewardModel* reward, const std::vector<double>& record_grid) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("integrate: horizon must be >= 0");
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt))
        throw ConfigError("integrate: dt must be positive");
    if (alpha.pieces().empty()) throw ConfigError("integrate: control has no pieces");
    if (alpha.t_begin() > 1e-9 || alpha.t_end() < T - 1e-9)
        throw ConfigError("integrate: control does not cover [0, T]");

    std::size_t K = cfg.K_max > 0 ? static_cast<std::size_t>(cfg.K_max) : x0.size();
    for (std::size_t i = K; i < x0.size(); ++i)
        if (x0[i] != 0.0)
            throw TruncationError("integrate: truncation index below the initial support");
    MeanFieldState state(x0);
    state.resize(K, 0.0);

    for (std::size_t i = 0; i < record_grid.size(); ++i) {
        if (i > 0 && !(record_grid[i] >= record_grid[i - 1]))
            throw ConfigError("integrate: record grid must be ascending");
        if (record_grid[i] < -1e-12 || record_grid[i] > T + 1e-12)
            throw ConfigError("integrate: record time outside [0, T]");
    }

    IntegrateResult res;
    res.times = record_grid;
    res.path.reserve(record_grid.size());

    // split points: piece boundaries and record times, so every RK4 step lies
    // inside one piece and every record time is hit exactly
    std::vector<double> splits{0.0, T};
    for (double t : alpha.breakpoints())
        if (t > 1e-12 && t < T - 1e-12) splits.push_back(t);
    for (double t : record_grid)
        if (t > 1e-12 && t < T - 1e-12) splits.push_back(t);
    std::sort(splits.begin(), splits.end());
    splits.erase(std::unique(splits.begin(), splits.end(),
                             [](double a, double b) { return b - a < 1e-12; }),
                 splits.end());

    std::size_t ri = 0;
    auto emit_through = [&](double t) {
        while (ri < record_grid.size() && record_grid[ri] <= t + 1e-12) {
            res.path.push_back(state);
            ++ri;
        }
    };
    emit_through(0.0);

    RhsWork w;
    MeanFieldState k1, k2, k3, k4, xs(K), xn(K);
    const auto& pieces = alpha.pieces();

    for (std::size_t seg = 0; seg + 1 < splits.size(); ++seg) {
        const double a = splits[seg], bend = splits[seg + 1];
        const ActionPiece& piece = pieces[static_cast<std::size_t>(
            find_piece(pieces, 0.5 * (a + bend)))];
        const double len = bend - a;
        const std::size_t nsteps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / cfg.dt - 1e-9)));
        const double hstep = len / static_cast<double>(nsteps);
        for (std::size_t sidx = 0; sidx < nsteps; ++sidx) {
            const double t = a + hstep * static_cast<double>(sidx);
            const double b0 = piece_value(piece, t);
            const double bmid = piece_value(piece, t + 0.5 * hstep);
            const double bEnd = piece_value(piece, t + hstep);

            res.max_leak = std::fmax(res.max_leak, rhs_core(state, kernel, b0, k1, w));
            std::copy(state.begin(), state.end(), xs.begin());
            vec::axpy(0.5 * hstep, k1.data(), xs.data(), K);
            res.max_leak = std::fmax(res.max_leak, rhs_core(xs, kernel, bmid, k2, w));
            double r2 = reward ? reward->running(xs, bmid) : 0.0;
            std::copy(state.begin(), state.end(), xs.begin());
            vec::axpy(0.5 * hstep, k2.data(), xs.data(), K);
            res.max_leak = std::fmax(res.max_leak, rhs_core(xs, kernel, bmid, k3, w));
            double r3 = reward ? reward->running(xs, bmid) : 0.0;
            std::copy(state.begin(), state.end(), xs.begin());
            vec::axpy(hstep, k3.data(), xs.data(), K);
            res.max_leak = std::fmax(res.max_leak, rhs_core(xs, kernel, bEnd, k4, w));

            if (reward) {
                double r1 = reward->running(state, b0);
                double r4 = reward->running(xs, bEnd);
                res.running_reward += (hstep / 6.0) * ((r1 + 2.0 * r2) + (2.0 * r3 + r4));
            }
            vec::rk4_combine(state.data(), k1.data(), k2.data(), k3.data(), k4.data(), hstep,
                             xn.data(), K);
            res.clipped_total += vec::clip_negative(xn.data(), K);
            if (res.clipped_total > cfg.clip_tol)
                throw NumericalError(
                    "integrate: clipped mass beyond tolerance; reduce dt or raise K_max");
            state.swap(xn);
        }
        emit_through(bend);
    }
    emit_through(T);
    res.final_state = std::move(state);
    return res;
}

double value_deterministic(const MeanFieldState& x0, const RateKernel& kernel,
                           const ActionFunction& alpha, double T, const RewardModel& reward,
                           const OdeConfig& cfg) {
    IntegrateResult r = integrate(x0, kernel, alpha, T, cfg, &reward);
    return r.running_reward + reward.terminal(r.final_state);
}

double generator_apply(const std::function<double(const MeanFieldState&, std::size_t)>& dG,
                       const MeanFieldState& x, const RateKernel& kernel, double b) {
    if (!dG) throw ConfigError("generator_apply: missing derivative evaluator");
    MeanFieldState f;
    RhsWork w;
    rhs_core(x, kernel, b, f, w);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0) acc += f[i] * dG(x, i);
    return acc;
}

} // namespace fragcoag
