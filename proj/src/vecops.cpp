#include "fragcoag/vecops.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "fragcoag/errors.hpp"

namespace fragcoag::vec {

// max/min with the comparison order of the AVX2 vmaxpd/vminpd instructions
// (result = second operand on ties involving signed zeros), so both backends
// produce the same bits even at x == -0.0
static inline double vmax(double a, double b) { return a > b ? a : b; }
static inline double vmin(double a, double b) { return a < b ? a : b; }

namespace scalar_impl {

static double sum(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i];
        acc[1] += x[i + 1];
        acc[2] += x[i + 2];
        acc[3] += x[i + 3];
    }
    for (; i < n; ++i) acc[i & 3] += x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static double dot(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i] * y[i];
        acc[1] += x[i + 1] * y[i + 1];
        acc[2] += x[i + 2] * y[i + 2];
        acc[3] += x[i + 3] * y[i + 3];
    }
    for (; i < n; ++i) acc[i & 3] += x[i] * y[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static double mass(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += static_cast<double>(i + 1) * x[i];
        acc[1] += static_cast<double>(i + 2) * x[i + 1];
        acc[2] += static_cast<double>(i + 3) * x[i + 2];
        acc[3] += static_cast<double>(i + 4) * x[i + 3];
    }
    for (; i < n; ++i) acc[i & 3] += static_cast<double>(i + 1) * x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static double l2sq(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += x[i] * x[i];
        acc[1] += x[i + 1] * x[i + 1];
        acc[2] += x[i + 2] * x[i + 2];
        acc[3] += x[i + 3] * x[i + 3];
    }
    for (; i < n; ++i) acc[i & 3] += x[i] * x[i];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static double dist_l2sq(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        double d0 = x[i] - y[i];
        double d1 = x[i + 1] - y[i + 1];
        double d2 = x[i + 2] - y[i + 2];
        double d3 = x[i + 3] - y[i + 3];
        acc[0] += d0 * d0;
        acc[1] += d1 * d1;
        acc[2] += d2 * d2;
        acc[3] += d3 * d3;
    }
    for (; i < n; ++i) {
        double d = x[i] - y[i];
        acc[i & 3] += d * d;
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static double conv_at(const double* x, std::size_t s) {
    if (s < 2) return 0.0;
    const std::size_t L = s - 1; // terms a = 0..L-1: x[a] * x[s-2-a]
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t a = 0;
    for (; a + 4 <= L; a += 4) {
        acc[0] += x[a] * x[s - 2 - a];
        acc[1] += x[a + 1] * x[s - 3 - a];
        acc[2] += x[a + 2] * x[s - 4 - a];
        acc[3] += x[a + 3] * x[s - 5 - a];
    }
    for (; a < L; ++a) acc[a & 3] += x[a] * x[s - 2 - a];
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

static void scale(double* x, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] * a;
}

static void rk4_combine(const double* x0, const double* k1, const double* k2, const double* k3,
                        const double* k4, double dt, double* out, std::size_t n) {
    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t1 = k1[i] + 2.0 * k2[i];
        double t2 = 2.0 * k3[i] + k4[i];
        out[i] = x0[i] + c * (t1 + t2);
    }
}

static double clip_negative(double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc[0] += static_cast<double>(i + 1) * vmax(-x[i], 0.0);
        acc[1] += static_cast<double>(i + 2) * vmax(-x[i + 1], 0.0);
        acc[2] += static_cast<double>(i + 3) * vmax(-x[i + 2], 0.0);
        acc[3] += static_cast<double>(i + 4) * vmax(-x[i + 3], 0.0);
        x[i] = vmax(x[i], 0.0);
        x[i + 1] = vmax(x[i + 1], 0.0);
        x[i + 2] = vmax(x[i + 2], 0.0);
        x[i + 3] = vmax(x[i + 3], 0.0);
    }
    for (; i < n; ++i) {
        acc[i & 3] += static_cast<double>(i + 1) * vmax(-x[i], 0.0);
        x[i] = vmax(x[i], 0.0);
    }
    return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

static void hjb_best(const double* u, const double* f, const double* badd, double inv_dm,
                     double* best, std::size_t n) {
    if (n < 3) return;
    for (std::size_t p = 1; p + 1 < n; ++p) {
        double dfwd = (u[p + 1] - u[p]) * inv_dm;
        double dbwd = (u[p] - u[p - 1]) * inv_dm;
        double cand = vmax(f[p], 0.0) * dfwd + vmin(f[p], 0.0) * dbwd + badd[p];
        best[p] = vmax(best[p], cand);
    }
}

} // namespace scalar_impl

const Ops& ops_scalar() {
    static const Ops ops{
        scalar_impl::sum,       scalar_impl::dot,         scalar_impl::mass,
        scalar_impl::l2sq,      scalar_impl::dist_l2sq,   scalar_impl::conv_at,
        scalar_impl::axpy,      scalar_impl::scale,       scalar_impl::rk4_combine,
        scalar_impl::clip_negative, scalar_impl::hjb_best,
    };
    return ops;
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

namespace {

struct Dispatch {
    const Ops* ops;
    Backend backend;
};

Dispatch select_startup() {
    const char* env = std::getenv("FRAGCOAG_VECOPS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return {&ops_scalar(), Backend::scalar};
        if (std::strcmp(env, "avx2") == 0) {
            const Ops* o = ops_avx2();
            if (o == nullptr || !cpu_has_avx2())
                throw ConfigError("FRAGCOAG_VECOPS=avx2 requested but AVX2 is unavailable");
            return {o, Backend::avx2};
        }
        throw ConfigError(std::string("FRAGCOAG_VECOPS has unknown value \"") + env +
                          "\" (expected scalar or avx2)");
    }
    const Ops* o = ops_avx2();
    if (o != nullptr && cpu_has_avx2()) return {o, Backend::avx2};
    return {&ops_scalar(), Backend::scalar};
}

Dispatch& dispatch() {
    static Dispatch d = select_startup();
    return d;
}

} // namespace

Backend active() { return dispatch().backend; }

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool force(Backend b) {
    if (b == Backend::scalar) {
        dispatch() = {&ops_scalar(), Backend::scalar};
        return true;
    }
    const Ops* o = ops_avx2();
    if (o == nullptr || !cpu_has_avx2()) return false;
    dispatch() = {o, Backend::avx2};
    return true;
}

double sum(const double* x, std::size_t n) { return dispatch().ops->sum(x, n); }
double dot(const double* x, const double* y, std::size_t n) { return dispatch().ops->dot(x, y, n); }
double mass(const double* x, std::size_t n) { return dispatch().ops->mass(x, n); }
double l2sq(const double* x, std::size_t n) { return dispatch().ops->l2sq(x, n); }
double dist_l2sq(const double* x, const double* y, std::size_t n) {
    return dispatch().ops->dist_l2sq(x, y, n);
}
double conv_at(const double* x, std::size_t s) { return dispatch().ops->conv_at(x, s); }
void axpy(double a, const double* x, double* y, std::size_t n) { dispatch().ops->axpy(a, x, y, n); }
void scale(double* x, double a, std::size_t n) { dispatch().ops->scale(x, a, n); }
void rk4_combine(const double* x0, const double* k1, const double* k2, const double* k3,
                 const double* k4, double dt, double* out, std::size_t n) {
    dispatch().ops->rk4_combine(x0, k1, k2, k3, k4, dt, out, n);
}
double clip_negative(double* x, std::size_t n) { return dispatch().ops->clip_negative(x, n); }
void hjb_best(const double* u, const double* f, const double* badd, double inv_dm, double* best,
              std::size_t n) {
    dispatch().ops->hjb_best(u, f, badd, inv_dm, best, n);
}

} // namespace fragcoag::vec
