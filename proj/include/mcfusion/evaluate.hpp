#pragma once
// Exact (Poisson) expected error of the whole system, averaged over an
// ensemble of transmitted sequences and over all symbol intervals.
#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcfusion/diffusion.hpp"
#include "mcfusion/fusion.hpp"
#include "mcfusion/links.hpp"
#include "mcfusion/parallel.hpp"
#include "mcfusion/random.hpp"

namespace mcfusion {

// All 2^L - 1 sequences containing at least one "1". Sequence s has bit i
// (0-based) equal to bit (L-1-i) of s, so the list is in binary counting order.
inline std::vector<SymbolSequence> nonzero_sequences(int length) {
    if (length < 1 || length > 20) throw std::invalid_argument("nonzero_sequences: length must lie in [1, 20]");
    const std::size_t count = (std::size_t{1} << length) - 1;
    std::vector<SymbolSequence> out(count, SymbolSequence(static_cast<std::size_t>(length)));
    for (std::size_t s = 1; s <= count; ++s)
        for (int i = 0; i < length; ++i) out[s - 1][i] = static_cast<std::uint8_t>((s >> (length - 1 - i)) & 1u);
    return out;
}

// Lag profiles of both hops for a symmetric topology.
struct Channel {
    IsiProfile tx_rx;
    IsiProfile rx_fc;

    static Channel build(const Topology& topo, const PhysicalParams& params) {
        topo.validate();
        params.validate();
        require_symmetric(topo);
        const auto lags = static_cast<std::size_t>(params.length);
        return {IsiProfile::build(Link::tx_to_rx, topo, params, lags),
                IsiProfile::build(Link::rx_to_fc, topo, params, lags)};
    }
};

struct ErrorReport {
    std::vector<GlobalError> per_interval;  // ensemble average for each interval
    GlobalError average;                    // mean over intervals
};

struct EvaluatorOptions {
    Scenario scenario = Scenario::perfect;
    unsigned candidates = 32;  // R, noisy scenario only
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

class ExactEvaluator {
public:
    ExactEvaluator(std::vector<SymbolSequence> ensemble, Channel channel, FusionRule rule, double p1,
                   EvaluatorOptions options)
        : ensemble_(std::move(ensemble)), channel_(std::move(channel)), rule_(rule), p1_(p1), options_(options) {
        if (ensemble_.empty()) throw std::invalid_argument("evaluator: empty sequence ensemble");
        if (!(p1 > 0.0 && p1 < 1.0)) throw std::invalid_argument("evaluator: P1 must lie in (0, 1)");
        if (options_.scenario == Scenario::noisy && options_.candidates < 1)
            throw std::invalid_argument("evaluator: at least one candidate draw required");
        length_ = ensemble_.front().size();
        for (const auto& s : ensemble_)
            if (s.size() != length_) throw std::invalid_argument("evaluator: sequences differ in length");
        if (channel_.tx_rx.size() < length_ || channel_.rx_fc.size() < length_)
            throw std::invalid_argument("evaluator: lag profile shorter than the sequences");
        stats_.reserve(ensemble_.size());
        for (const auto& s : ensemble_) stats_.push_back(make_link_stats(s, channel_.tx_rx, channel_.rx_fc));
    }

    const std::vector<SymbolSequence>& ensemble() const { return ensemble_; }
    const std::vector<LinkStats>& stats() const { return stats_; }
    const Channel& channel() const { return channel_; }
    const FusionRule& rule() const { return rule_; }
    const EvaluatorOptions& options() const { return options_; }
    double p1() const { return p1_; }
    std::size_t intervals() const { return length_; }

    std::uint64_t candidate_seed(std::size_t sequence, unsigned draw) const {
        return derive_seed(options_.seed, {sequence, draw});
    }

    // xi_fc is ignored in the perfect scenario.
    ErrorReport report(long xi_r, long xi_fc = 0) const { return accumulate(prepare(xi_r), xi_fc); }
    double operator()(long xi_r, long xi_fc = 0) const { return report(xi_r, xi_fc).average.q_fc; }

    // Row-major table of expected errors: index (r - r_lo) * width + (f - f_lo).
    std::vector<double> grid(long r_lo, long r_hi, long f_lo, long f_hi) const {
        if (r_hi < r_lo || f_hi < f_lo) throw std::invalid_argument("evaluator grid: empty range");
        const auto rows = static_cast<std::size_t>(r_hi - r_lo + 1);
        const auto width = static_cast<std::size_t>(f_hi - f_lo + 1);
        std::vector<double> out(rows * width);
        parallel_for(rows, options_.threads, [&](std::size_t r) {
            const Prepared prep = prepare(r_lo + static_cast<long>(r));
            if (options_.scenario == Scenario::perfect) {
                const double q = accumulate(prep, 0).average.q_fc;
                std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(r * width), width, q);
                return;
            }
            const std::vector<ErrorReport> row = accumulate_row(prep, f_lo, f_hi);
            for (std::size_t f = 0; f < width; ++f) out[r * width + f] = row[f].average.q_fc;
        });
        return out;
    }

private:
    struct Prepared {
        std::vector<LinkError> hop;     // [sequence * L + j-1]
        std::vector<double> report_v0;  // [(sequence * R + draw) * L + j-1], noisy only
    };

    Prepared prepare(long xi_r) const {
        const std::size_t L = length_;
        Prepared p;
        p.hop.resize(ensemble_.size() * L);
        for (std::size_t s = 0; s < ensemble_.size(); ++s)
            for (std::size_t j = 1; j <= L; ++j)
                p.hop[s * L + j - 1] = perfect_link_error(stats_[s], j, static_cast<double>(xi_r), CdfMode::exact_poisson);
        if (options_.scenario == Scenario::perfect) return p;

        const unsigned R = options_.candidates;
        p.report_v0.resize(ensemble_.size() * R * L);
        for (std::size_t s = 0; s < ensemble_.size(); ++s) {
            const std::span<const LinkError> errors(p.hop.data() + s * L, L - 1);
            for (unsigned d = 0; d < R; ++d) {
                const CandidateRealization c = candidate_realization(ensemble_[s], errors, candidate_seed(s, d));
                double* v0 = p.report_v0.data() + (s * R + d) * L;
                for (std::size_t j = 1; j <= L; ++j) v0[j - 1] = channel_.rx_fc.history_mean(c.bits, j);
            }
        }
        return p;
    }

    ErrorReport accumulate(const Prepared& p, long xi_fc) const {
        const std::size_t L = length_;
        const std::size_t S = ensemble_.size();
        std::vector<double> md(L, 0.0), fa(L, 0.0);
        if (options_.scenario == Scenario::perfect) {
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t j = 0; j < L; ++j) {
                    const GlobalError g = global_error(p.hop[s * L + j], rule_, p1_);
                    md[j] += g.q_md;
                    fa[j] += g.q_fa;
                }
            return finish(md, fa, static_cast<double>(S));
        }
        const unsigned R = options_.candidates;
        const double current = channel_.rx_fc.current();
        const double xf = static_cast<double>(xi_fc);
        for (std::size_t s = 0; s < S; ++s)
            for (unsigned d = 0; d < R; ++d) {
                const double* v0 = p.report_v0.data() + (s * R + d) * L;
                for (std::size_t j = 0; j < L; ++j) {
                    const double f1 = count_cdf(CdfMode::exact_poisson, xf, v0[j] + current);
                    const double f0 = count_cdf(CdfMode::exact_poisson, xf, v0[j]);
                    const GlobalError g = global_error(cascade_link_error(p.hop[s * L + j], f1, f0), rule_, p1_);
                    md[j] += g.q_md;
                    fa[j] += g.q_fa;
                }
            }
        return finish(md, fa, static_cast<double>(S) * R);
    }

    // Noisy accumulation for every xi_fc in [f_lo, f_hi] at once.
    std::vector<ErrorReport> accumulate_row(const Prepared& p, long f_lo, long f_hi) const {
        const std::size_t L = length_;
        const std::size_t S = ensemble_.size();
        const unsigned R = options_.candidates;
        const auto width = static_cast<std::size_t>(f_hi - f_lo + 1);
        const double current = channel_.rx_fc.current();
        std::vector<double> md(width * L, 0.0), fa(width * L, 0.0), f1(width), f0(width);
        for (std::size_t s = 0; s < S; ++s)
            for (unsigned d = 0; d < R; ++d) {
                const double* v0 = p.report_v0.data() + (s * R + d) * L;
                for (std::size_t j = 0; j < L; ++j) {
                    poisson_cdf_range(f_lo, f_hi, v0[j] + current, f1.data());
                    poisson_cdf_range(f_lo, f_hi, v0[j], f0.data());
                    for (std::size_t f = 0; f < width; ++f) {
                        const GlobalError g = global_error(cascade_link_error(p.hop[s * L + j], f1[f], f0[f]), rule_, p1_);
                        md[f * L + j] += g.q_md;
                        fa[f * L + j] += g.q_fa;
                    }
                }
            }
        std::vector<ErrorReport> out;
        out.reserve(width);
        const double count = static_cast<double>(S) * R;
        for (std::size_t f = 0; f < width; ++f)
            out.push_back(finish({md.begin() + static_cast<std::ptrdiff_t>(f * L), md.begin() + static_cast<std::ptrdiff_t>((f + 1) * L)},
                                 {fa.begin() + static_cast<std::ptrdiff_t>(f * L), fa.begin() + static_cast<std::ptrdiff_t>((f + 1) * L)}, count));
        return out;
    }

    ErrorReport finish(const std::vector<double>& md, const std::vector<double>& fa, double count) const {
        ErrorReport r;
        r.per_interval.resize(length_);
        for (std::size_t j = 0; j < length_; ++j) {
            GlobalError& g = r.per_interval[j];
            g.q_md = md[j] / count;
            g.q_fa = fa[j] / count;
            g.q_fc = p1_ * g.q_md + (1.0 - p1_) * g.q_fa;
            r.average.q_md += g.q_md / static_cast<double>(length_);
            r.average.q_fa += g.q_fa / static_cast<double>(length_);
        }
        r.average.q_fc = p1_ * r.average.q_md + (1.0 - p1_) * r.average.q_fa;
        return r;
    }

    std::vector<SymbolSequence> ensemble_;
    Channel channel_;
    FusionRule rule_;
    double p1_;
    EvaluatorOptions options_;
    std::size_t length_ = 0;
    std::vector<LinkStats> stats_;
};

}  // namespace mcfusion
