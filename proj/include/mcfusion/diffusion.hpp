#pragma once
// Physical-layer primitives for a diffusive ON/OFF keyed channel:
// hit probabilities of passive spherical observers, ISI-aware mean counts,
// and the count CDFs (exact Poisson, Gaussian with continuity correction).
//
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcfusion {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
    return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

inline double sphere_volume(double radius) {
    return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
}

// Positions in metres. Receivers are indexed 0..K-1.
struct Topology {
    Vec3 tx;
    std::vector<Vec3> rx;
    Vec3 fc;
    double rx_radius = 0.0;
    double fc_radius = 0.0;

    static constexpr double symmetry_tolerance = 1e-9;  // m

    std::size_t receiver_count() const { return rx.size(); }
    double tx_rx_distance(std::size_t k) const { return distance(tx, rx.at(k)); }
    double rx_fc_distance(std::size_t k) const { return distance(fc, rx.at(k)); }
    double rx_volume() const { return sphere_volume(rx_radius); }
    double fc_volume() const { return sphere_volume(fc_radius); }

    bool symmetric() const {
        if (rx.empty()) return false;
        double t_lo = tx_rx_distance(0), t_hi = t_lo;
        double f_lo = rx_fc_distance(0), f_hi = f_lo;
        for (std::size_t k = 1; k < rx.size(); ++k) {
            t_lo = std::min(t_lo, tx_rx_distance(k));
            t_hi = std::max(t_hi, tx_rx_distance(k));
            f_lo = std::min(f_lo, rx_fc_distance(k));
            f_hi = std::max(f_hi, rx_fc_distance(k));
        }
        return t_hi - t_lo < symmetry_tolerance && f_hi - f_lo < symmetry_tolerance;
    }

    void validate() const {
        if (rx.empty()) throw std::invalid_argument("topology: at least one receiver required");
        if (!(rx_radius > 0.0) || !(fc_radius > 0.0))
            throw std::invalid_argument("topology: radii must be positive");
        for (std::size_t k = 0; k < rx.size(); ++k) {
            if (!(tx_rx_distance(k) > rx_radius))
                throw std::invalid_argument("topology: RX " + std::to_string(k + 1) +
                                            " overlaps the transmitter (d_T <= r_R)");
            if (!(rx_fc_distance(k) > 0.0))
                throw std::invalid_argument("topology: RX " + std::to_string(k + 1) +
                                            " coincides with the fusion center");
        }
    }
};

struct PhysicalParams {
    double d0 = 0.0;        // TX molecule diffusivity, m^2/s
    double dk = 0.0;        // RX report molecule diffusivity, m^2/s
    double s0 = 0.0;        // molecules per "1" at TX
    double sk = 0.0;        // molecules per "1" at each RX
    double dt_rx = 0.0;     // s
    double dt_fc = 0.0;     // s
    int m_rx = 0;           // samples per interval at each RX
    int m_fc = 0;           // samples per interval (per molecule type) at the FC
    double t_trans = 0.0;   // s
    double t_report = 0.0;  // s
    int length = 0;         // symbols per sequence
    double p1 = 0.5;        // prior of "1"

    double symbol_interval() const { return t_trans + t_report; }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) throw std::invalid_argument(std::string("params: ") + name + " must be positive");
        };
        positive(d0, "D0");
        positive(dk, "Dk");
        positive(s0, "S0");
        positive(sk, "Sk");
        positive(dt_rx, "dt_rx");
        positive(dt_fc, "dt_fc");
        positive(t_trans, "t_trans");
        positive(t_report, "t_report");
        if (m_rx < 1 || m_fc < 1) throw std::invalid_argument("params: sample counts must be >= 1");
        if (length < 1) throw std::invalid_argument("params: sequence length must be >= 1");
        if (!(m_rx * dt_rx < t_trans))
            throw std::invalid_argument("params: M_rx * dt_rx must be < t_trans");
        if (!(m_fc * dt_fc <= t_report * (1.0 + 1e-12)))
            throw std::invalid_argument("params: M_fc * dt_fc must be <= t_report");
        if (!(p1 > 0.0 && p1 < 1.0)) throw std::invalid_argument("params: P1 must lie in (0, 1)");
    }
};

using SymbolSequence = std::vector<std::uint8_t>;

enum class Link { tx_to_rx, rx_to_fc };

// Uniform-concentration (far-field) probability that one molecule released at
// distance d is inside an observer of the given volume at time t.
inline double point_hit_probability(double d, double rx_volume, double diffusivity, double t) {
    if (!(t > 0.0) || !(d > 0.0) || !(diffusivity > 0.0))
        throw std::domain_error("point_hit_probability: t, d and D must be positive");
    if (rx_volume < 0.0) throw std::domain_error("point_hit_probability: negative volume");
    const double four_dt = 4.0 * diffusivity * t;
    const double p = rx_volume / std::pow(std::numbers::pi * four_dt, 1.5) * std::exp(-d * d / four_dt);
    return std::min(p, 1.0);
}

// Exact probability that a molecule released at distance d from the centre of a
// passive sphere of radius r is inside it at time t.
inline double sphere_hit_probability(double d, double obs_radius, double diffusivity, double t) {
    if (!(t > 0.0) || !(d > 0.0) || !(diffusivity > 0.0) || !(obs_radius > 0.0))
        throw std::domain_error("sphere_hit_probability: t, d, r and D must be positive");
    const double root_dt = std::sqrt(diffusivity * t);
    const double tau1 = (obs_radius + d) / (2.0 * root_dt);
    const double tau2 = (obs_radius - d) / (2.0 * root_dt);
    // Both terms are written without catastrophic cancellation: erfc for large
    // arguments, expm1 for the difference of Gaussians (tau1^2 - tau2^2 = r d / Dt).
    const double erf_sum = tau1 < 1.0 ? std::erf(tau1) + std::erf(tau2)
                                      : (tau2 < 0.0 ? std::erfc(-tau2) - std::erfc(tau1)
                                                    : 2.0 - std::erfc(tau1) - std::erfc(tau2));
    const double exp_diff = std::exp(-tau2 * tau2) * std::expm1(-obs_radius * d / (diffusivity * t));
    const double p = 0.5 * erf_sum + root_dt / (d * std::sqrt(std::numbers::pi)) * exp_diff;
    return std::clamp(p, 0.0, 1.0);
}

// Per-lag mean contribution of one "1" emission: lag[n] = S * sum_m P_ob(nT + m dt).
// lag[0] is the current-symbol contribution; lag[n>0] is ISI n intervals later.
class IsiProfile {
public:
    IsiProfile() = default;
    explicit IsiProfile(std::vector<double> lag) : lag_(std::move(lag)) {}

    static IsiProfile build(Link link, const Topology& topo, const PhysicalParams& params, std::size_t lags) {
        const double period = params.symbol_interval();
        std::vector<double> lag(lags, 0.0);
        for (std::size_t n = 0; n < lags; ++n) {
            double sum = 0.0;
            if (link == Link::tx_to_rx) {
                for (int m = 1; m <= params.m_rx; ++m)
                    sum += point_hit_probability(topo.tx_rx_distance(0), topo.rx_volume(), params.d0,
                                                 static_cast<double>(n) * period + m * params.dt_rx);
                lag[n] = params.s0 * sum;
            } else {
                // Offsets are relative to the RX emission instant (j-1)T + t_trans.
                for (int m = 1; m <= params.m_fc; ++m)
                    sum += sphere_hit_probability(topo.rx_fc_distance(0), topo.fc_radius, params.dk,
                                                  static_cast<double>(n) * period + m * params.dt_fc);
                lag[n] = params.sk * sum;
            }
        }
        return IsiProfile(std::move(lag));
    }

    std::size_t size() const { return lag_.size(); }
    double operator[](std::size_t n) const { return lag_[n]; }
    double current() const { return lag_.at(0); }
    std::span<const double> lags() const { return lag_; }

    // Mean count in interval j (1-based) given bits[0..j-1].
    double mean(std::span<const std::uint8_t> bits, std::size_t j) const {
        if (j < 1 || j > bits.size()) throw std::out_of_range("IsiProfile::mean: interval out of range");
        if (j > lag_.size()) throw std::out_of_range("IsiProfile::mean: profile too short");
        double sum = 0.0;
        for (std::size_t i = 1; i <= j; ++i)
            if (bits[i - 1]) sum += lag_[j - i];
        return sum;
    }

    // Mean count in interval j from previous bits only (current bit treated as 0).
    double history_mean(std::span<const std::uint8_t> bits, std::size_t j) const {
        if (j < 1 || j > lag_.size()) throw std::out_of_range("IsiProfile::history_mean: interval out of range");
        if (bits.size() + 1 < j) throw std::out_of_range("IsiProfile::history_mean: history too short");
        double sum = 0.0;
        for (std::size_t i = 1; i < j; ++i)
            if (bits[i - 1]) sum += lag_[j - i];
        return sum;
    }

private:
    std::vector<double> lag_;
};

inline void require_symmetric(const Topology& topo) {
    if (!topo.symmetric())
        throw std::invalid_argument("analytical evaluation requires a symmetric topology");
}

// Mean number of molecules observed in interval j (1-based) given the emitted prefix.
inline double mean_observed_count(std::span<const std::uint8_t> prefix, std::size_t j, Link link,
                                  const Topology& topo, const PhysicalParams& params) {
    require_symmetric(topo);
    if (j < 1 || j > prefix.size()) throw std::out_of_range("mean_observed_count: interval out of range");
    return IsiProfile::build(link, topo, params, j).mean(prefix, j);
}

// Pr(X < threshold) for X ~ Poisson(mean). Term recurrence in long double.
inline double poisson_cdf(long threshold, double mean) {
    if (mean < 0.0 || std::isnan(mean)) throw std::domain_error("poisson_cdf: negative mean");
    if (threshold <= 0) return 0.0;
    const long double lambda = mean;
    long double term = std::exp(-lambda);
    long double sum = term;
    for (long w = 1; w < threshold; ++w) {
        term *= lambda / static_cast<long double>(w);
        sum += term;
    }
    return static_cast<double>(std::min(sum, 1.0L));
}

// poisson_cdf(t, mean) for every t in [lo, hi] from one recurrence pass;
// out[t - lo] matches the single-threshold result exactly.
inline void poisson_cdf_range(long lo, long hi, double mean, double* out) {
    if (mean < 0.0 || std::isnan(mean)) throw std::domain_error("poisson_cdf: negative mean");
    if (hi < lo) return;
    const long double lambda = mean;
    long double term = std::exp(-lambda);
    long double sum = term;
    long w = 1;
    for (long t = lo; t <= hi; ++t) {
        if (t <= 0) {
            out[t - lo] = 0.0;
            continue;
        }
        for (; w < t; ++w) {
            term *= lambda / static_cast<long double>(w);
            sum += term;
        }
        out[t - lo] = static_cast<double>(std::min(sum, 1.0L));
    }
}

// Lambda(x, mean) = erf((x - 0.5 - mean) / sqrt(2 mean)).
inline double erf_term(double x, double mean) {
    if (!(mean > 0.0)) throw std::domain_error("erf_term: mean must be positive");
    return std::erf((x - 0.5 - mean) / std::sqrt(2.0 * mean));
}

// Theta(x, mean) = exp(-(0.5 + mean - x)^2 / (2 mean)).
inline double gauss_kernel(double x, double mean) {
    if (!(mean > 0.0)) throw std::domain_error("gauss_kernel: mean must be positive");
    const double u = 0.5 + mean - x;
    return std::exp(-u * u / (2.0 * mean));
}

// Continuity-corrected Gaussian approximation of Pr(X < threshold).
inline double gaussian_cdf_cc(double threshold, double mean) {
    if (!(mean > 0.0)) throw std::domain_error("gaussian_cdf_cc: mean must be positive");
    return 0.5 * (1.0 + erf_term(threshold, mean));
}

}  // namespace mcfusion
