#pragma once
// Per-link detection statistics for the TX->RX hop (perfect reporting) and the
// TX->RX->FC cascade (noisy reporting).
//
// Noisy reporting needs the RX decision history, which has 2^(j-1) outcomes.
// Two reductions are provided:
//   * a single coin-toss candidate history (exact-Poisson evaluation);
//   * the history-averaged mean V-bar, where every earlier decision counts as
//     one half (Gaussian surrogate used by the optimizer).
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "mcfusion/diffusion.hpp"
#include "mcfusion/random.hpp"

namespace mcfusion {

enum class CdfMode { exact_poisson, gaussian };
enum class Scenario { perfect, noisy };

// Conditional mean counts per interval; index j-1 holds interval j.
struct LinkStats {
    std::vector<double> u0;
    std::vector<double> u1;
    std::vector<double> vbar0;
    std::vector<double> vbar1;

    std::size_t intervals() const { return u0.size(); }
};

struct LinkError {
    double p_md = 0.0;
    double p_fa = 0.0;
    CdfMode mode = CdfMode::exact_poisson;
    Scenario scenario = Scenario::perfect;
};

struct CandidateRealization {
    SymbolSequence bits;
    std::uint64_t seed = 0;
};

// Pr(X < threshold) under the chosen count model. A zero mean is a point mass
// at 0 in both models (the Gaussian form is taken in its lambda -> 0+ limit).
inline double count_cdf(CdfMode mode, double threshold, double mean) {
    if (mode == CdfMode::exact_poisson) {
        if (threshold != std::floor(threshold))
            throw std::invalid_argument("exact-Poisson thresholds must be integers");
        return poisson_cdf(static_cast<long>(threshold), mean);
    }
    if (mean == 0.0) return threshold > 0.5 ? 1.0 : (threshold < 0.5 ? 0.0 : 0.5);
    return gaussian_cdf_cc(threshold, mean);
}

inline std::pair<std::vector<double>, std::vector<double>> conditional_means_tx_rx(
    std::span<const std::uint8_t> tx_prefix, const IsiProfile& tx_rx) {
    if (tx_prefix.empty()) throw std::invalid_argument("conditional_means_tx_rx: empty prefix");
    std::vector<double> u0(tx_prefix.size()), u1(tx_prefix.size());
    for (std::size_t j = 1; j <= tx_prefix.size(); ++j) {
        u0[j - 1] = tx_rx.history_mean(tx_prefix, j);
        u1[j - 1] = u0[j - 1] + tx_rx.current();
    }
    return {std::move(u0), std::move(u1)};
}

inline std::pair<std::vector<double>, std::vector<double>> conditional_means_tx_rx(
    std::span<const std::uint8_t> tx_prefix, const Topology& topo, const PhysicalParams& params) {
    require_symmetric(topo);
    if (tx_prefix.empty()) throw std::invalid_argument("conditional_means_tx_rx: empty prefix");
    return conditional_means_tx_rx(tx_prefix, IsiProfile::build(Link::tx_to_rx, topo, params, tx_prefix.size()));
}

// RX->FC conditional means averaged uniformly over all earlier decision
// histories. By linearity each earlier decision contributes half its lag term.
inline std::pair<std::vector<double>, std::vector<double>> averaged_conditional_means(
    std::size_t intervals, const IsiProfile& rx_fc) {
    std::vector<double> v0(intervals), v1(intervals);
    for (std::size_t j = 1; j <= intervals; ++j) {
        double sum = 0.0;
        for (std::size_t i = 1; i < j; ++i) sum += 0.5 * rx_fc[j - i];
        v0[j - 1] = sum;
        v1[j - 1] = sum + rx_fc.current();
    }
    return {std::move(v0), std::move(v1)};
}

inline std::pair<std::vector<double>, std::vector<double>> averaged_conditional_means(
    std::size_t intervals, const Topology& topo, const PhysicalParams& params) {
    require_symmetric(topo);
    return averaged_conditional_means(intervals, IsiProfile::build(Link::rx_to_fc, topo, params, intervals));
}

inline LinkStats make_link_stats(std::span<const std::uint8_t> tx_prefix, const IsiProfile& tx_rx,
                                 const IsiProfile& rx_fc) {
    LinkStats stats;
    std::tie(stats.u0, stats.u1) = conditional_means_tx_rx(tx_prefix, tx_rx);
    std::tie(stats.vbar0, stats.vbar1) = averaged_conditional_means(tx_prefix.size(), rx_fc);
    return stats;
}

inline LinkError perfect_link_error(const LinkStats& stats, std::size_t j, double xi_r, CdfMode mode) {
    if (j < 1 || j > stats.intervals()) throw std::out_of_range("perfect_link_error: interval out of range");
    LinkError e;
    e.mode = mode;
    e.scenario = Scenario::perfect;
    e.p_md = count_cdf(mode, xi_r, stats.u1[j - 1]);
    e.p_fa = 1.0 - count_cdf(mode, xi_r, stats.u0[j - 1]);
    return e;
}

// Biased coin toss: decision i is flipped with probability p_md[i] (bit 1) or
// p_fa[i] (bit 0). Draw i uses counter_uniform(seed, i), so a candidate is a
// deterministic, monotone function of the error probabilities.
inline CandidateRealization candidate_realization(std::span<const std::uint8_t> tx_prefix,
                                                  std::span<const LinkError> per_interval_errors,
                                                  std::uint64_t seed) {
    if (per_interval_errors.size() > tx_prefix.size())
        throw std::invalid_argument("candidate_realization: more errors than transmitted symbols");
    CandidateRealization c;
    c.seed = seed;
    c.bits.resize(per_interval_errors.size());
    for (std::size_t i = 0; i < per_interval_errors.size(); ++i) {
        const std::uint8_t sent = tx_prefix[i] ? 1 : 0;
        const double p = sent ? per_interval_errors[i].p_md : per_interval_errors[i].p_fa;
        const bool flip = counter_uniform(seed, i) < p;
        c.bits[i] = static_cast<std::uint8_t>(sent ^ (flip ? 1 : 0));
    }
    return c;
}

// Cascade of the TX->RX decision and the RX->FC report. f1/f0 are
// Pr(report count < xi_fc) given the RX sent 1/0.
inline LinkError cascade_link_error(const LinkError& first_hop, double f1, double f0) {
    LinkError e = first_hop;
    e.scenario = Scenario::noisy;
    e.p_md = (1.0 - first_hop.p_md) * f1 + first_hop.p_md * f0;
    e.p_fa = first_hop.p_fa * (1.0 - f1) + (1.0 - first_hop.p_fa) * (1.0 - f0);
    return e;
}

// Exact-Poisson mode conditions the report ISI on the candidate history and
// needs both `candidate` and `rx_fc`; Gaussian mode uses stats.vbar0/vbar1.
inline LinkError noisy_link_error(const LinkStats& stats, std::size_t j, double xi_r, double xi_fc,
                                  const CandidateRealization* candidate, const IsiProfile* rx_fc, CdfMode mode) {
    const LinkError hop = perfect_link_error(stats, j, xi_r, mode);
    double v0 = 0.0, v1 = 0.0;
    if (mode == CdfMode::exact_poisson) {
        if (candidate == nullptr || rx_fc == nullptr)
            throw std::invalid_argument("noisy_link_error: exact mode needs a candidate history");
        if (candidate->bits.size() + 1 < j)
            throw std::invalid_argument("noisy_link_error: candidate shorter than j - 1");
        v0 = rx_fc->history_mean(candidate->bits, j);
        v1 = v0 + rx_fc->current();
    } else {
        v0 = stats.vbar0.at(j - 1);
        v1 = stats.vbar1.at(j - 1);
    }
    return cascade_link_error(hop, count_cdf(mode, xi_fc, v1), count_cdf(mode, xi_fc, v0));
}

}  // namespace mcfusion
