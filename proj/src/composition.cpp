#include "fragcoag/composition.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/vecops.hpp"

namespace fragcoag {

Composition::Composition(double h, Counts counts) : h_(h), counts_(std::move(counts)) {
    if (!(h > 0.0) || !std::isfinite(h))
        throw ConfigError("composition: h must be a positive finite real, got " + std::to_string(h));
    for (auto it = counts_.begin(); it != counts_.end();) {
        if (it->first < 1)
            throw ConfigError("composition: coalition size must be >= 1, got " + std::to_string(it->first));
        if (it->second < 0)
            throw ConfigError("composition: count for size " + std::to_string(it->first) +
                              " is negative");
        if (it->second == 0) {
            it = counts_.erase(it);
            continue;
        }
        mass_ += it->first * it->second;
        total_ += it->second;
        ++it;
    }
}

Composition Composition::singletons(std::int64_t N, double h) {
    if (N < 0) throw ConfigError("composition: N must be >= 0");
    Counts c;
    if (N > 0) c[1] = N;
    return Composition(h, std::move(c));
}

Composition Composition::blocks(std::int64_t N, std::int64_t size, double h) {
    if (size < 1) throw ConfigError("composition: block size must be >= 1");
    if (N % size != 0)
        throw ConfigError("composition: N = " + std::to_string(N) + " not divisible by block size " +
                          std::to_string(size));
    Counts c;
    if (N > 0) c[size] = N / size;
    return Composition(h, std::move(c));
}

std::int64_t Composition::count(std::int64_t k) const {
    auto it = counts_.find(k);
    return it == counts_.end() ? 0 : it->second;
}

std::int64_t Composition::max_size() const {
    return counts_.empty() ? 0 : counts_.rbegin()->first;
}

NormReport Composition::norms() const {
    double sq = 0.0;
    for (const auto& [k, n] : counts_) {
        (void)k;
        sq += static_cast<double>(n) * static_cast<double>(n);
    }
    return NormReport{l1_norm(), mass_norm(), h_ * std::sqrt(sq)};
}

NormReport norms(const MeanFieldState& x) {
    double l1 = 0.0, l1L = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double a = std::fabs(x[i]);
        l1 += a;
        l1L += static_cast<double>(i + 1) * a;
    }
    return NormReport{l1, l1L, std::sqrt(vec::l2sq(x.data(), x.size()))};
}

double mass_norm(const MeanFieldState& x) { return vec::mass(x.data(), x.size()); }

void require_in_radius(const Composition& c, double R) {
    if (!(R > 0.0)) throw ConfigError("state space radius R must be positive");
    // tiny slack keeps h*N == R configurations (the usual choice) inside
    if (c.mass_norm() > R * (1.0 + 1e-12))
        throw ConfigError("initial state has mass norm " + std::to_string(c.mass_norm()) +
                          " > R = " + std::to_string(R));
}

void require_in_radius(const MeanFieldState& x, double R) {
    if (!(R > 0.0)) throw ConfigError("state space radius R must be positive");
    if (mass_norm(x) > R * (1.0 + 1e-12))
        throw ConfigError("initial state has mass norm " + std::to_string(mass_norm(x)) +
                          " > R = " + std::to_string(R));
}

nlohmann::json state_to_json(const MeanFieldState& x) { return nlohmann::json(x); }

MeanFieldState state_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("state json: expected an array of reals");
    MeanFieldState x;
    x.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("state json: entries must be numbers");
        x.push_back(v.get<double>());
    }
    return x;
}

void Composition::bump(std::int64_t k, std::int64_t delta) {
    auto it = counts_.find(k);
    std::int64_t cur = it == counts_.end() ? 0 : it->second;
    std::int64_t next = cur + delta;
    if (next < 0)
        throw ConfigError("composition: count for size " + std::to_string(k) +
                          " would become negative");
    if (next == 0) {
        if (it != counts_.end()) counts_.erase(it);
    } else if (it != counts_.end()) {
        it->second = next;
    } else {
        counts_.emplace(k, next);
    }
    mass_ += k * delta;
    total_ += delta;
}

void Composition::apply_merge(std::int64_t i, std::int64_t j) {
    if (i < 1 || j < 1) throw ConfigError("merge: sizes must be >= 1");
    std::int64_t need_i = (i == j) ? 2 : 1;
    if (count(i) < need_i || (i != j && count(j) < 1))
        throw ConfigError("merge: pair (" + std::to_string(i) + "," + std::to_string(j) +
                          ") not present in state " + key());
    bump(i, -1);
    bump(j, -1);
    bump(i + j, +1);
}

void Composition::apply_split(std::int64_t i, std::int64_t j) {
    if (j < 1 || j >= i)
        throw ConfigError("split: need 1 <= j < i, got i = " + std::to_string(i) + ", j = " +
                          std::to_string(j));
    if (count(i) < 1)
        throw ConfigError("split: no coalition of size " + std::to_string(i) + " in state " + key());
    bump(i, -1);
    bump(j, +1);
    bump(i - j, +1);
}

std::vector<double> Composition::to_mean_field(std::int64_t K_max) const {
    if (K_max < 1) throw ConfigError("to_mean_field: K_max must be >= 1");
    if (max_size() > K_max)
        throw TruncationError("to_mean_field: occupied size " + std::to_string(max_size()) +
                              " exceeds K_max = " + std::to_string(K_max));
    std::vector<double> x(static_cast<std::size_t>(K_max), 0.0);
    for (const auto& [k, n] : counts_)
        x[static_cast<std::size_t>(k - 1)] = h_ * static_cast<double>(n);
    return x;
}

double Composition::dist_l2sq(const Composition& a, const Composition& b) {
    if (a.h_ != b.h_) throw ConfigError("dist_l2sq: compositions live on different h");
    double acc = 0.0;
    auto ia = a.counts_.begin();
    auto ib = b.counts_.begin();
    while (ia != a.counts_.end() || ib != b.counts_.end()) {
        std::int64_t na = 0, nb = 0;
        if (ib == b.counts_.end() || (ia != a.counts_.end() && ia->first < ib->first)) {
            na = ia->second;
            ++ia;
        } else if (ia == a.counts_.end() || ib->first < ia->first) {
            nb = ib->second;
            ++ib;
        } else {
            na = ia->second;
            nb = ib->second;
            ++ia;
            ++ib;
        }
        double d = a.h_ * static_cast<double>(na - nb);
        acc += d * d;
    }
    return acc;
}

std::string Composition::key() const {
    std::string s;
    for (const auto& [k, n] : counts_) {
        if (!s.empty()) s += ',';
        s += std::to_string(k);
        s += ':';
        s += std::to_string(n);
    }
    return s;
}

nlohmann::json Composition::to_json() const {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [k, n] : counts_) counts[std::to_string(k)] = n;
    return nlohmann::json{{"h", h_}, {"counts", counts}};
}

Composition Composition::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("h") || !j.contains("counts"))
        throw ConfigError("composition json: expected {\"h\": real, \"counts\": {size: count}}");
    if (!j["h"].is_number()) throw ConfigError("composition json: h must be a number");
    const auto& jc = j["counts"];
    if (!jc.is_object()) throw ConfigError("composition json: counts must be an object");
    Counts c;
    for (auto it = jc.begin(); it != jc.end(); ++it) {
        std::int64_t k;
        try {
            std::size_t pos = 0;
            k = std::stoll(it.key(), &pos);
            if (pos != it.key().size()) throw std::invalid_argument(it.key());
        } catch (const std::exception&) {
            throw ConfigError("composition json: bad size key \"" + it.key() + "\"");
        }
        if (!it.value().is_number_integer())
            throw ConfigError("composition json: count for size " + it.key() +
                              " must be an integer");
        c[k] = it.value().get<std::int64_t>();
    }
    return Composition(j["h"].get<double>(), std::move(c));
}

} // namespace fragcoag
