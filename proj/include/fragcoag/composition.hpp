#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace fragcoag {

// dense rescaled state: slot k-1 holds x_k, k = 1..K_max
using MeanFieldState = std::vector<double>;

// Norms of the rescaled state x = h*n: plain l1 (h * number of coalitions),
// the size-weighted l1L (h * total mass, the conserved quantity), and l2.
// Chain l2 <= l1 <= l1L holds whenever every slot carries size >= 1.
struct NormReport {
    double l1;
    double l1L;
    double l2;
};


// Integer coalition profile: counts[k] = number of coalitions of size k, all
// counts positive (empty slots are absent).  h is the rescaling step; the chain
// studied here keeps N = sum_k k*counts[k] constant, so mass_norm() = h*N is an
// invariant of every merge/split.  Mass and coalition totals are cached and
// maintained incrementally because every event rate needs them.
class Composition {
public:
    using Counts = std::map<std::int64_t, std::int64_t>;

    Composition() = default;
    Composition(double h, Counts counts);

    static Composition singletons(std::int64_t N, double h);
    // N/size coalitions of the given size; N must be divisible by size
    static Composition blocks(std::int64_t N, std::int64_t size, double h);

    double h() const { return h_; }
    const Counts& counts() const { return counts_; }
    std::int64_t count(std::int64_t k) const;
    std::int64_t total_mass() const { return mass_; }        // N
    std::int64_t coalition_count() const { return total_; }  // sum_k n_k
    std::int64_t max_size() const;
    bool empty() const { return counts_.empty(); }

    double mass_norm() const { return h_ * static_cast<double>(mass_); }
    double l1_norm() const { return h_ * static_cast<double>(total_); }
    NormReport norms() const;

    // i + j -> one coalition of size i+j; requires the pair to exist (i == j needs two)
    void apply_merge(std::int64_t i, std::int64_t j);
    // one coalition of size i -> j and i-j; requires n_i >= 1 and 1 <= j < i
    void apply_split(std::int64_t i, std::int64_t j);

    // dense x_k = h*n_k for k = 1..K_max (index k-1); occupied size beyond K_max
    // raises TruncationError
    std::vector<double> to_mean_field(std::int64_t K_max) const;

    // squared l2 distance between x = h*n of two profiles on the same h
    static double dist_l2sq(const Composition& a, const Composition& b);

    // canonical "k:n,k:n" form; doubles as a hash key for policy/value tables
    std::string key() const;

    bool operator==(const Composition& o) const { return h_ == o.h_ && counts_ == o.counts_; }
    bool operator!=(const Composition& o) const { return !(*this == o); }

    nlohmann::json to_json() const;
    static Composition from_json(const nlohmann::json& j);

private:
    double h_ = 1.0;
    Counts counts_;
    std::int64_t mass_ = 0;
    std::int64_t total_ = 0;

    void bump(std::int64_t k, std::int64_t delta);
};

// norms of a dense state (absolute values, so it is safe on intermediate
// integrator states that may dip below zero)
NormReport norms(const MeanFieldState& x);
inline NormReport norms(const Composition& c) { return c.norms(); }

// guard for the invariant state space: mass norm must not exceed the radius R
void require_in_radius(const Composition& c, double R);
void require_in_radius(const MeanFieldState& x, double R);

// mass norm sum_k k*x_k of a dense state
double mass_norm(const MeanFieldState& x);

nlohmann::json state_to_json(const MeanFieldState& x);
MeanFieldState state_from_json(const nlohmann::json& j);

} // namespace fragcoag
