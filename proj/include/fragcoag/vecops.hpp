#pragma once

#include <cstddef>

// Dense-vector kernels with two interchangeable backends: portable scalar code and
// an AVX2 translation unit.  Both sides evaluate every operation with the same
// arithmetic plan -- reductions keep four lane accumulators indexed by position
// mod 4, added in position order and combined as (acc0+acc1)+(acc2+acc3); no FMA
// contraction anywhere -- so the two backends return bit-identical doubles and a
// run's output does not depend on which one the dispatcher picked.
namespace fragcoag::vec {

enum class Backend { scalar, avx2 };

// backend chosen at startup: AVX2 when the CPU supports it, overridable with
// FRAGCOAG_VECOPS=scalar|avx2 in the environment
Backend active();
const char* backend_name(Backend b);
bool cpu_has_avx2();
// switch backends mid-run (tests); returns false if unsupported on this CPU
bool force(Backend b);

// --- reductions (striped, deterministic) ---

// sum_i x[i]
double sum(const double* x, std::size_t n);
// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum_i (i+1)*x[i]  -- mass norm of a state indexed by coalition size i+1
double mass(const double* x, std::size_t n);
// sum_i x[i]^2
double l2sq(const double* x, std::size_t n);
// sum_i (x[i]-y[i])^2
double dist_l2sq(const double* x, const double* y, std::size_t n);
// coagulation gain at size s (1-based): sum_{j=1..s-1} x[j-1]*x[s-j-1]; needs s-1 <= n+1
double conv_at(const double* x, std::size_t s);

// --- elementwise maps (one fixed expression tree per element) ---

// y[i] += a*x[i]
void axpy(double a, const double* x, double* y, std::size_t n);
// x[i] *= a
void scale(double* x, double a, std::size_t n);
// out[i] = x0[i] + (dt/6)*((k1[i] + 2*k2[i]) + (2*k3[i] + k4[i]))
void rk4_combine(const double* x0, const double* k1, const double* k2, const double* k3,
                 const double* k4, double dt, double* out, std::size_t n);
// clamp negatives to zero; returns sum_i (i+1)*max(-x[i], 0), the mass that was clipped
double clip_negative(double* x, std::size_t n);

// --- upwind Hamiltonian sweep ---
// For interior points p = 1..n-2:
//   dfwd = (u[p+1]-u[p])*inv_dm, dbwd = (u[p]-u[p-1])*inv_dm
//   cand = max(f[p],0)*dfwd + min(f[p],0)*dbwd + badd[p]
//   best[p] = max(best[p], cand)
// Boundary points are the caller's job (one-sided stencils).
void hjb_best(const double* u, const double* f, const double* badd, double inv_dm,
              double* best, std::size_t n);

// function table a backend fills in; used by the dispatcher and the equivalence tests
struct Ops {
    double (*sum)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*mass)(const double*, std::size_t);
    double (*l2sq)(const double*, std::size_t);
    double (*dist_l2sq)(const double*, const double*, std::size_t);
    double (*conv_at)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double*, double, std::size_t);
    void (*rk4_combine)(const double*, const double*, const double*, const double*,
                        const double*, double, double*, std::size_t);
    double (*clip_negative)(double*, std::size_t);
    void (*hjb_best)(const double*, const double*, const double*, double, double*, std::size_t);
};

const Ops& ops_scalar();
const Ops* ops_avx2(); // nullptr when the binary was built without the AVX2 unit

} // namespace fragcoag::vec
