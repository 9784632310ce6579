#pragma once
// N-out-of-K hard-decision fusion: exact global miss/false-alarm
// probabilities for i.i.d. local decisions, and the polynomial upper bounds
// the threshold optimizer works with.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "mcfusion/links.hpp"

namespace mcfusion {

inline constexpr unsigned max_receivers = 64;

namespace detail {

constexpr std::array<std::array<std::uint64_t, max_receivers + 1>, max_receivers + 1> make_binomials() {
    std::array<std::array<std::uint64_t, max_receivers + 1>, max_receivers + 1> c{};
    for (unsigned n = 0; n <= max_receivers; ++n) {
        c[n][0] = 1;
        for (unsigned k = 1; k <= n; ++k) c[n][k] = c[n - 1][k - 1] + (k <= n - 1 ? c[n - 1][k] : 0);
    }
    return c;
}

inline constexpr auto binomials = make_binomials();

}  // namespace detail

constexpr std::uint64_t binomial(unsigned n, unsigned k) {
    return k > n ? 0 : detail::binomials[n][k];
}

struct FusionRule {
    enum class Kind { or_rule, and_rule, majority, n_of_k };

    unsigned k = 1;
    unsigned n = 1;
    Kind kind = Kind::n_of_k;

    static FusionRule make_or(unsigned k) { return checked(k, 1, Kind::or_rule); }
    static FusionRule make_and(unsigned k) { return checked(k, k, Kind::and_rule); }
    static FusionRule make_majority(unsigned k) { return checked(k, (k + 1) / 2, Kind::majority); }
    static FusionRule make_n_of_k(unsigned n, unsigned k) { return checked(k, n, Kind::n_of_k); }

    // Same rule family for a different receiver count (n_of_k keeps N, clamped to K).
    FusionRule with_receivers(unsigned new_k) const {
        switch (kind) {
            case Kind::or_rule: return make_or(new_k);
            case Kind::and_rule: return make_and(new_k);
            case Kind::majority: return make_majority(new_k);
            case Kind::n_of_k: break;
        }
        return make_n_of_k(std::min(n, new_k), new_k);
    }

    std::string name() const {
        switch (kind) {
            case Kind::or_rule: return "or";
            case Kind::and_rule: return "and";
            case Kind::majority: return "majority";
            case Kind::n_of_k: break;
        }
        return "n-of-k:" + std::to_string(n);
    }

private:
    static FusionRule checked(unsigned k, unsigned n, Kind kind) {
        if (k < 1 || k > max_receivers) throw std::invalid_argument("fusion rule: K must lie in [1, 64]");
        if (n < 1 || n > k) throw std::invalid_argument("fusion rule: N must lie in [1, K]");
        return FusionRule{k, n, kind};
    }
};

struct GlobalError {
    double q_md = 0.0;
    double q_fa = 0.0;
    double q_fc = 0.0;
};

inline GlobalError global_error(double p_md, double p_fa, const FusionRule& rule, double p1) {
    const unsigned K = rule.k;
    double detect = 0.0, q_fa = 0.0;
    for (unsigned n = rule.n; n <= K; ++n) {
        const double c = static_cast<double>(binomial(K, n));
        detect += c * std::pow(1.0 - p_md, n) * std::pow(p_md, K - n);
        q_fa += c * std::pow(p_fa, n) * std::pow(1.0 - p_fa, K - n);
    }
    GlobalError g;
    g.q_md = std::clamp(1.0 - detect, 0.0, 1.0);
    g.q_fa = std::clamp(q_fa, 0.0, 1.0);
    g.q_fc = p1 * g.q_md + (1.0 - p1) * g.q_fa;
    return g;
}

inline GlobalError global_error(const LinkError& p, const FusionRule& rule, double p1) {
    return global_error(p.p_md, p.p_fa, rule, p1);
}

// Miss probability written as "at least K-N+1 local misses".
inline double rewritten_miss(double p_md, const FusionRule& rule) {
    const unsigned K = rule.k;
    double q = 0.0;
    for (unsigned m = K - rule.n + 1; m <= K; ++m)
        q += static_cast<double>(binomial(K, m)) * std::pow(p_md, m) * std::pow(1.0 - p_md, K - m);
    return q;
}

struct FusionBounds {
    double q_md_plus = 0.0;
    double q_fa_plus = 0.0;
};

// OR and AND keep their tighter one-term bounds; every other rule drops the
// (1-p)^(.) factors of the binomial sums.
inline FusionBounds upper_bounds(double p_md, double p_fa, const FusionRule& rule) {
    const unsigned K = rule.k;
    const double k = static_cast<double>(K);
    switch (rule.kind) {
        case FusionRule::Kind::or_rule: return {std::pow(p_md, K), k * p_fa};
        case FusionRule::Kind::and_rule: return {k * p_md, std::pow(p_fa, K)};
        default: break;
    }
    FusionBounds b;
    for (unsigned m = K - rule.n + 1; m <= K; ++m) b.q_md_plus += static_cast<double>(binomial(K, m)) * std::pow(p_md, m);
    for (unsigned m = rule.n; m <= K; ++m) b.q_fa_plus += static_cast<double>(binomial(K, m)) * std::pow(p_fa, m);
    return b;
}

inline FusionBounds upper_bounds(const LinkError& p, const FusionRule& rule) {
    return upper_bounds(p.p_md, p.p_fa, rule);
}

}  // namespace mcfusion
