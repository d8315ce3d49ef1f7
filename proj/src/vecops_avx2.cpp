// AVX2 backend.  This translation unit is compiled with -mavx2 (and only this one);
// entry is gated at runtime by the dispatcher in vecops.cpp.  Every reduction keeps
// its four vector lanes separate until a final (l0+l1)+(l2+l3) combine, matching the
// scalar backend's accumulation plan, and no FMA is used, so results are bit-identical
// to the scalar path.

#include "fragcoag/vecops.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace fragcoag::vec {

namespace avx2_impl {

static inline double vmax(double a, double b) { return a > b ? a : b; }
static inline double vmin(double a, double b) { return a < b ? a : b; }

static double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) l[i & 3] += x[i];
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) l[i & 3] += x[i] * y[i];
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static double mass(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    __m256d idx = _mm256_set_pd(4.0, 3.0, 2.0, 1.0); // lanes {1,2,3,4}: size of slot i is i+1
    const __m256d four = _mm256_set1_pd(4.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(idx, _mm256_loadu_pd(x + i)));
        idx = _mm256_add_pd(idx, four);
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) l[i & 3] += static_cast<double>(i + 1) * x[i];
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static double l2sq(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) l[i & 3] += x[i] * x[i];
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static double dist_l2sq(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) {
        double d = x[i] - y[i];
        l[i & 3] += d * d;
    }
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static double conv_at(const double* x, std::size_t s) {
    if (s < 2) return 0.0;
    const std::size_t L = s - 1;
    __m256d acc = _mm256_setzero_pd();
    std::size_t a = 0;
    for (; a + 4 <= L; a += 4) {
        __m256d fwd = _mm256_loadu_pd(x + a);
        // lanes want x[s-2-a], x[s-3-a], x[s-4-a], x[s-5-a]: load ascending, reverse
        __m256d rev = _mm256_loadu_pd(x + (s - 5 - a));
        rev = _mm256_permute4x64_pd(rev, 0x1B);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(fwd, rev));
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; a < L; ++a) l[a & 3] += x[a] * x[s - 2 - a];
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

static void scale(double* x, double a, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), av));
    for (; i < n; ++i) x[i] = x[i] * a;
}

static void rk4_combine(const double* x0, const double* k1, const double* k2, const double* k3,
                        const double* k4, double dt, double* out, std::size_t n) {
    const double c = dt / 6.0;
    const __m256d cv = _mm256_set1_pd(c);
    const __m256d two = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d t1 = _mm256_add_pd(_mm256_loadu_pd(k1 + i), _mm256_mul_pd(two, _mm256_loadu_pd(k2 + i)));
        __m256d t2 = _mm256_add_pd(_mm256_mul_pd(two, _mm256_loadu_pd(k3 + i)), _mm256_loadu_pd(k4 + i));
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(x0 + i), _mm256_mul_pd(cv, _mm256_add_pd(t1, t2)));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i < n; ++i) {
        double t1 = k1[i] + 2.0 * k2[i];
        double t2 = 2.0 * k3[i] + k4[i];
        out[i] = x0[i] + c * (t1 + t2);
    }
}

static double clip_negative(double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc = _mm256_setzero_pd();
    __m256d idx = _mm256_set_pd(4.0, 3.0, 2.0, 1.0);
    const __m256d four = _mm256_set1_pd(4.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        __m256d neg = _mm256_max_pd(_mm256_sub_pd(zero, v), zero);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(idx, neg));
        _mm256_storeu_pd(x + i, _mm256_max_pd(v, zero));
        idx = _mm256_add_pd(idx, four);
    }
    alignas(32) double l[4];
    _mm256_store_pd(l, acc);
    for (; i < n; ++i) {
        l[i & 3] += static_cast<double>(i + 1) * vmax(-x[i], 0.0);
        x[i] = vmax(x[i], 0.0);
    }
    return (l[0] + l[1]) + (l[2] + l[3]);
}

static void hjb_best(const double* u, const double* f, const double* badd, double inv_dm,
                     double* best, std::size_t n) {
    if (n < 3) return;
    const __m256d zero = _mm256_setzero_pd();
    const __m256d inv = _mm256_set1_pd(inv_dm);
    std::size_t p = 1;
    for (; p + 5 <= n; p += 4) { // covers interior points p..p+3 <= n-2
        __m256d uc = _mm256_loadu_pd(u + p);
        __m256d dfwd = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(u + p + 1), uc), inv);
        __m256d dbwd = _mm256_mul_pd(_mm256_sub_pd(uc, _mm256_loadu_pd(u + p - 1)), inv);
        __m256d fv = _mm256_loadu_pd(f + p);
        __m256d fpos = _mm256_max_pd(fv, zero);
        __m256d fneg = _mm256_min_pd(fv, zero);
        __m256d cand = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(fpos, dfwd), _mm256_mul_pd(fneg, dbwd)),
            _mm256_loadu_pd(badd + p));
        _mm256_storeu_pd(best + p, _mm256_max_pd(_mm256_loadu_pd(best + p), cand));
    }
    for (; p + 1 < n; ++p) {
        double dfwd = (u[p + 1] - u[p]) * inv_dm;
        double dbwd = (u[p] - u[p - 1]) * inv_dm;
        double cand = vmax(f[p], 0.0) * dfwd + vmin(f[p], 0.0) * dbwd + badd[p];
        best[p] = vmax(best[p], cand);
    }
}

} // namespace avx2_impl

const Ops* ops_avx2() {
    static const Ops ops{
        avx2_impl::sum,       avx2_impl::dot,         avx2_impl::mass,
        avx2_impl::l2sq,      avx2_impl::dist_l2sq,   avx2_impl::conv_at,
        avx2_impl::axpy,      avx2_impl::scale,       avx2_impl::rk4_combine,
        avx2_impl::clip_negative, avx2_impl::hjb_best,
    };
    return &ops;
}

} // namespace fragcoag::vec

#else // !__AVX2__: built without the AVX2 unit (non-x86 target); dispatcher falls back to scalar

namespace fragcoag::vec {
const Ops* ops_avx2() { return nullptr; }
} // namespace fragcoag::vec

#endif
