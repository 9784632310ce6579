#pragma once
// Particle-based simulator: every molecule performs free Brownian motion,
// receivers and the fusion center are passive spheres that count molecules at
// their sampling instants.
//
// Positions are only advanced at instants where some observer looks at that
// species (Brownian increments compose exactly), so the cost does not depend
// on the micro-step; sim_dt only fixes the time grid the schedule must sit on.
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mcfusion/diffusion.hpp"
#include "mcfusion/evaluate.hpp"
#include "mcfusion/fusion.hpp"
#include "mcfusion/links.hpp"
#include "mcfusion/parallel.hpp"
#include "mcfusion/random.hpp"

namespace mcfusion {

struct Thresholds {
    long xi_r = 1;
    long xi_fc = 1;
};

struct SimOptions {
    double sim_dt = 5e-6;
    bool truncate = true;
    double lifetime_intervals = 5.0;  // particles older than this many T are dropped
};

struct TrialResult {
    SymbolSequence tx_sequence;
    SymbolSequence fc_decisions;
    std::vector<SymbolSequence> rx_decisions;  // [k][j]
    std::vector<std::uint8_t> errors;          // fc != tx per interval
    std::size_t error_count = 0;
    std::size_t peak_particles = 0;
};

using Rng = boost::random::mt19937_64;

namespace detail {

inline void check_on_grid(double t, double dt, const char* what) {
    const double ticks = t / dt;
    if (std::abs(ticks - std::round(ticks)) > 1e-6)
        throw std::invalid_argument(std::string("simulation: ") + what + " is not a multiple of sim_dt");
}

// Molecules of one diffusivity, kept in emission order.
class Population {
public:
    explicit Population(double diffusivity) : d_(diffusivity) {}

    void emit(const Vec3& at, std::size_t count, double time, int species) {
        for (std::size_t i = 0; i < count; ++i) {
            pend_x_.push_back(at.x);
            pend_y_.push_back(at.y);
            pend_z_.push_back(at.z);
            pend_species_.push_back(species);
            pend_birth_.push_back(time);
        }
    }

    // Moves every molecule to time t and folds pending emissions in.
    void advance(double t, Rng& rng, boost::random::normal_distribution<double>& normal) {
        if (!x_.empty()) {
            const double s = std::sqrt(2.0 * d_ * (t - last_));
            for (std::size_t i = 0; i < x_.size(); ++i) {
                x_[i] += s * normal(rng);
                y_[i] += s * normal(rng);
                z_[i] += s * normal(rng);
            }
        }
        for (std::size_t i = 0; i < pend_x_.size(); ++i) {
            const double s = std::sqrt(2.0 * d_ * (t - pend_birth_[i]));
            x_.push_back(pend_x_[i] + s * normal(rng));
            y_.push_back(pend_y_[i] + s * normal(rng));
            z_.push_back(pend_z_[i] + s * normal(rng));
            species_.push_back(pend_species_[i]);
            birth_.push_back(pend_birth_[i]);
        }
        pend_x_.clear();
        pend_y_.clear();
        pend_z_.clear();
        pend_species_.clear();
        pend_birth_.clear();
        last_ = t;
    }

    void drop_born_before(double cutoff) {
        const auto first = std::lower_bound(birth_.begin(), birth_.end(), cutoff);
        const auto n = first - birth_.begin();
        if (n == 0) return;
        x_.erase(x_.begin(), x_.begin() + n);
        y_.erase(y_.begin(), y_.begin() + n);
        z_.erase(z_.begin(), z_.begin() + n);
        species_.erase(species_.begin(), species_.begin() + n);
        birth_.erase(birth_.begin(), birth_.begin() + n);
    }

    // Molecules of the given species inside the sphere; species < 0 counts all.
    std::size_t count_inside(const Vec3& c, double r, int species) const {
        const double r2 = r * r;
        std::size_t n = 0;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            if (species >= 0 && species_[i] != species) continue;
            const double dx = x_[i] - c.x, dy = y_[i] - c.y, dz = z_[i] - c.z;
            if (dx * dx + dy * dy + dz * dz < r2) ++n;
        }
        return n;
    }

    std::size_t size() const { return x_.size() + pend_x_.size(); }

private:
    double d_;
    double last_ = 0.0;
    std::vector<double> x_, y_, z_, birth_;
    std::vector<int> species_;
    std::vector<double> pend_x_, pend_y_, pend_z_, pend_birth_;
    std::vector<int> pend_species_;
};

}  // namespace detail

inline void validate_schedule(const PhysicalParams& p, const SimOptions& o) {
    if (!(o.sim_dt > 0.0)) throw std::invalid_argument("simulation: sim_dt must be positive");
    detail::check_on_grid(p.dt_rx, o.sim_dt, "dt_rx");
    detail::check_on_grid(p.dt_fc, o.sim_dt, "dt_fc");
    detail::check_on_grid(p.t_trans, o.sim_dt, "t_trans");
    detail::check_on_grid(p.symbol_interval(), o.sim_dt, "T");
}

// One transmission of tx_sequence through the full TX -> RXs -> FC chain.
// In the perfect scenario the local decisions reach the FC unaltered.
inline TrialResult run_trial(const Topology& topo, const PhysicalParams& params, const FusionRule& rule,
                             const Thresholds& th, const SymbolSequence& tx_sequence, std::uint64_t seed,
                             const SimOptions& options = {}, Scenario scenario = Scenario::noisy) {
    topo.validate();
    params.validate();
    validate_schedule(params, options);
    if (rule.k != topo.receiver_count()) throw std::invalid_argument("simulation: rule K differs from receiver count");
    if (th.xi_r < 1 || (scenario == Scenario::noisy && th.xi_fc < 1))
        throw std::invalid_argument("simulation: thresholds must be positive integers");
    if (tx_sequence.size() != static_cast<std::size_t>(params.length))
        throw std::invalid_argument("simulation: sequence length differs from L");

    const std::size_t K = topo.receiver_count();
    const std::size_t L = tx_sequence.size();
    const double T = params.symbol_interval();
    const auto s0 = static_cast<std::size_t>(std::llround(params.s0));
    const auto sk = static_cast<std::size_t>(std::llround(params.sk));
    const double lifetime = options.lifetime_intervals * T;

    Rng rng(seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    detail::Population info(params.d0);
    detail::Population reports(params.dk);

    TrialResult out;
    out.tx_sequence = tx_sequence;
    out.fc_decisions.assign(L, 0);
    out.rx_decisions.assign(K, SymbolSequence(L, 0));
    out.errors.assign(L, 0);

    std::vector<long> rx_count(K), fc_count(K);
    for (std::size_t j = 0; j < L; ++j) {
        const double start = static_cast<double>(j) * T;
        if (tx_sequence[j]) info.emit(topo.tx, s0, start, 0);

        std::fill(rx_count.begin(), rx_count.end(), 0);
        for (int m = 1; m <= params.m_rx; ++m) {
            const double t = start + m * params.dt_rx;
            info.advance(t, rng, normal);
            if (options.truncate) info.drop_born_before(t - lifetime);
            for (std::size_t k = 0; k < K; ++k)
                rx_count[k] += static_cast<long>(info.count_inside(topo.rx[k], topo.rx_radius, -1));
            out.peak_particles = std::max(out.peak_particles, info.size() + reports.size());
        }
        for (std::size_t k = 0; k < K; ++k) out.rx_decisions[k][j] = rx_count[k] >= th.xi_r ? 1 : 0;

        std::size_t votes = 0;
        if (scenario == Scenario::perfect) {
            for (std::size_t k = 0; k < K; ++k) votes += out.rx_decisions[k][j];
        } else {
            const double emit_at = start + params.t_trans;
            for (std::size_t k = 0; k < K; ++k)
                if (out.rx_decisions[k][j]) reports.emit(topo.rx[k], sk, emit_at, static_cast<int>(k));
            std::fill(fc_count.begin(), fc_count.end(), 0);
            for (int m = 1; m <= params.m_fc; ++m) {
                const double t = emit_at + m * params.dt_fc;
                reports.advance(t, rng, normal);
                if (options.truncate) reports.drop_born_before(t - lifetime);
                for (std::size_t k = 0; k < K; ++k)
                    fc_count[k] += static_cast<long>(reports.count_inside(topo.fc, topo.fc_radius, static_cast<int>(k)));
            }
            for (std::size_t k = 0; k < K; ++k) votes += fc_count[k] >= th.xi_fc ? 1 : 0;
        }
        out.fc_decisions[j] = votes >= rule.n ? 1 : 0;
        out.errors[j] = out.fc_decisions[j] != tx_sequence[j] ? 1 : 0;
        out.error_count += out.errors[j];
    }
    return out;
}

struct ErrorEstimate {
    double q_hat = 0.0;
    double ci_halfwidth = 0.0;   // Wilson 95 %
    double std_error = 0.0;      // binomial sqrt(q(1-q)/n)
    std::uint64_t errors = 0;
    std::uint64_t samples = 0;   // trials x intervals
    std::size_t trials = 0;
};

inline constexpr double z95 = 1.959963984540054;

inline double wilson_halfwidth(std::uint64_t errors, std::uint64_t n, double z = z95) {
    if (n == 0) throw std::invalid_argument("wilson_halfwidth: no samples");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(errors) / nn;
    const double z2 = z * z;
    return z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
}

// trial(index, seed) -> TrialResult. Trial seeds depend only on (seed, index).
template <class TrialFn>
    requires std::invocable<TrialFn&, std::size_t, std::uint64_t>
ErrorEstimate estimate_error(TrialFn&& trial, std::size_t n_trials, std::uint64_t seed, unsigned threads = 1) {
    if (n_trials < 100) throw std::invalid_argument("estimate_error: at least 100 trials required");
    std::vector<std::uint64_t> errors(n_trials), samples(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t i) {
        const TrialResult r = trial(i, derive_seed(seed, {i}));
        errors[i] = r.error_count;
        samples[i] = r.errors.size();
    });
    ErrorEstimate e;
    e.trials = n_trials;
    for (std::size_t i = 0; i < n_trials; ++i) {
        e.errors += errors[i];
        e.samples += samples[i];
    }
    if (e.samples == 0) throw std::invalid_argument("estimate_error: trials produced no intervals");
    const double n = static_cast<double>(e.samples);
    e.q_hat = static_cast<double>(e.errors) / n;
    e.std_error = std::sqrt(e.q_hat * (1.0 - e.q_hat) / n);
    e.ci_halfwidth = wilson_halfwidth(e.errors, e.samples);
    return e;
}

struct SimulationConfig {
    Topology topology;
    PhysicalParams params;
    FusionRule rule;
    Thresholds thresholds;
    Scenario scenario = Scenario::noisy;
    SimOptions options;
    std::vector<SymbolSequence> sequences;  // empty: uniform over all non-zero sequences
};

inline ErrorEstimate estimate_error(const SimulationConfig& cfg, std::size_t n_trials, std::uint64_t seed,
                                    unsigned threads = 1) {
    const std::vector<SymbolSequence> pool =
        cfg.sequences.empty() ? nonzero_sequences(cfg.params.length) : cfg.sequences;
    return estimate_error(
        [&](std::size_t, std::uint64_t trial_seed) {
            const std::size_t pick = derive_seed(trial_seed, {1}) % pool.size();
            return run_trial(cfg.topology, cfg.params, cfg.rule, cfg.thresholds, pool[pick],
                             derive_seed(trial_seed, {0}), cfg.options, cfg.scenario);
        },
        n_trials, seed, threads);
}

// Fraction of n walkers, released at distance d from the centre of a sphere,
// found inside it after time t. Returns {fraction, standard error}.
inline std::pair<double, double> empirical_hit_fraction(double d, double radius, double diffusivity, double t,
                                                        std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("empirical_hit_fraction: no walkers");
    Rng rng(seed);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(2.0 * diffusivity * t);
    const double r2 = radius * radius;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = d + s * normal(rng), dy = s * normal(rng), dz = s * normal(rng);
        if (dx * dx + dy * dy + dz * dz < r2) ++inside;
    }
    const double p = static_cast<double>(inside) / static_cast<double>(n);
    return {p, std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(n)) / static_cast<double>(n))};
}

}  // namespace mcfusion
