#pragma once
// Reference environment: diffusion, budgets, sampling and geometry used by
// the bundled experiments. Lengths are metres.
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mcfusion/diffusion.hpp"

namespace mcfusion::presets {

inline constexpr double um = 1e-6;

inline PhysicalParams reference_params(unsigned k) {
    if (k < 1) throw std::invalid_argument("reference_params: K must be >= 1");
    PhysicalParams p;
    p.d0 = 5e-9;
    p.dk = 5e-9;
    p.s0 = 8000.0;
    p.sk = 2000.0 / k;
    p.dt_rx = 100e-6;
    p.dt_fc = 30e-6;
    p.m_rx = 5;
    p.m_fc = 5;
    p.t_trans = 1e-3;
    p.t_report = 0.3e-3;
    p.length = 10;
    p.p1 = 0.5;
    return p;
}

inline const std::vector<Vec3>& reference_rx_positions() {
    static const std::vector<Vec3> rx{
        {2 * um, 0.6 * um, 0},           {2 * um, -0.6 * um, 0},          {2 * um, -0.3 * um, 0.5196 * um},
        {2 * um, -0.3 * um, -0.519 * um}, {2 * um, 0.3 * um, 0.5196 * um}, {2 * um, 0.3 * um, -0.5196 * um},
    };
    return rx;
}

// First K receivers of the reference layout around the FC at (2, 0, 0) um.
inline Topology reference_topology(unsigned k, double rx_radius = 0.225 * um, double fc_radius = 0.2 * um) {
    const auto& all = reference_rx_positions();
    if (k < 1 || k > all.size()) throw std::invalid_argument("reference_topology: K must lie in [1, 6]");
    Topology t;
    t.tx = {0, 0, 0};
    t.rx.assign(all.begin(), all.begin() + k);
    t.fc = {2 * um, 0, 0};
    t.rx_radius = rx_radius;
    t.fc_radius = fc_radius;
    return t;
}

// Single TX-RX link used as the K = 1 baseline of the receiver-count sweep.
inline PhysicalParams single_link_params() {
    PhysicalParams p = reference_params(1);
    p.s0 = 10000.0;
    return p;
}

// Radius giving each of K receivers an equal share of six 0.2 um spheres.
inline double fixed_volume_radius(unsigned k) {
    if (k < 1) throw std::invalid_argument("fixed_volume_radius: K must be >= 1");
    return 0.2 * um * std::cbrt(6.0 / k);
}

}  // namespace mcfusion::presets
