#pragma once
// Threshold optimization: convex feasible region, Gaussian surrogate
// objectives, golden-section / alternating minimization, integer rounding and
// the exhaustive integer-grid oracle.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcfusion/diffusion.hpp"
#include "mcfusion/fusion.hpp"
#include "mcfusion/links.hpp"

namespace mcfusion {

struct IntervalStats {
    double u0 = 0.0;
    double u1 = 0.0;
    double vbar0 = 0.0;
    double vbar1 = 0.0;
};

inline IntervalStats interval_stats(const LinkStats& s, std::size_t j) {
    if (j < 1 || j > s.intervals()) throw std::out_of_range("interval_stats: interval out of range");
    IntervalStats out{s.u0[j - 1], s.u1[j - 1], 0.0, 0.0};
    if (s.vbar0.size() >= j) {
        out.vbar0 = s.vbar0[j - 1];
        out.vbar1 = s.vbar1[j - 1];
    }
    return out;
}

// Fixed arguments of the constraint functions (xi^- and xi^+ on each axis).
struct ConstraintBounds {
    double xi_r_minus = 0.0;
    double xi_r_plus = 0.0;
    double xi_fc_minus = 0.0;
    double xi_fc_plus = 0.0;

    static ConstraintBounds from(const IntervalStats& s) {
        return {s.u0 + 1.0, s.u1, s.vbar0 + 1.0, s.vbar1};
    }
};

// Lambda extended to a zero mean by its lambda -> 0+ limit.
inline double lambda_or_limit(double x, double mean) {
    if (mean > 0.0) return erf_term(x, mean);
    if (mean < 0.0) throw std::domain_error("lambda_or_limit: negative mean");
    return x > 0.5 ? 1.0 : (x < 0.5 ? -1.0 : 0.0);
}

// Lambda convention of the constraint functions. The printed expressions
// follow the Hessian determinant of the bounds only with every Lambda term
// negated; Theta, the linear factors and the bound arguments are unchanged.
enum class ConstraintForm { printed, sign_corrected };

namespace detail {

// Lambda as it enters the constraints, evaluated at xi^- (minus) or xi^+.
struct ConstraintLambda {
    double minus = 0.0;
    double plus = 0.0;
};

inline ConstraintLambda constraint_lambda(double xi_minus, double xi_plus, double mean, ConstraintForm form) {
    if (form == ConstraintForm::printed) return {erf_term(xi_minus, mean), erf_term(xi_plus, mean)};
    return {-erf_term(xi_minus, mean), -erf_term(xi_plus, mean)};
}

}  // namespace detail

inline double constraint_phi(double mu, double nu, unsigned k, const IntervalStats& s, const ConstraintBounds& b,
                             ConstraintForm form = ConstraintForm::printed) {
    const double K = k;
    const auto lr = detail::constraint_lambda(b.xi_r_minus, b.xi_r_plus, s.u1, form);
    const auto lf = detail::constraint_lambda(b.xi_fc_minus, b.xi_fc_plus, s.vbar1, form);
    const double lr_m = lr.minus, lr_p = lr.plus, lf_m = lf.minus, lf_p = lf.plus;
    const double tr_p = gauss_kernel(b.xi_r_plus, s.u1);
    const double tf_p = gauss_kernel(b.xi_fc_plus, s.vbar1);
    const double root2pi = std::sqrt(2.0 * std::numbers::pi);
    const double g = -3.0 + lf_p + lr_p * (1.0 + lf_p);

    const double a = -4.0 + K + K * lf_m + K * lr_m * (1.0 + lf_m);
    const double first = 4.0 * tr_p * a * a;
    const double outer = (1.0 + lr_m) / std::sqrt(s.u1 * s.vbar1) * (1.0 + lf_m);
    const double in_nu = 2.0 * (K - 1.0) * std::sqrt(s.vbar1) * (1.0 + lr_p) - root2pi / tf_p * (0.5 + s.vbar1 - nu) * g;
    const double in_mu = tr_p * (1.0 + lf_m) * (K - 1.0) * 2.0 * std::sqrt(s.u1) - root2pi * (0.5 + s.u1 - mu) * g;
    return first - outer * in_nu * in_mu;
}

inline double constraint_psi(double mu, double nu, unsigned k, const IntervalStats& s, const ConstraintBounds& b,
                             ConstraintForm form = ConstraintForm::printed) {
    const double K = k;
    const auto lr = detail::constraint_lambda(b.xi_r_minus, b.xi_r_plus, s.u0, form);
    const auto lf = detail::constraint_lambda(b.xi_fc_minus, b.xi_fc_plus, s.vbar0, form);
    const double lr_m = lr.minus, lr_p = lr.plus, lf_m = lf.minus, lf_p = lf.plus;
    const double tr_m = gauss_kernel(b.xi_r_minus, s.u0);
    const double tf_m = gauss_kernel(b.xi_fc_minus, s.vbar0);
    const double root2pi = std::sqrt(2.0 * std::numbers::pi);

    const double a = -4.0 + K - K * lf_p + K * lr_p * (-1.0 + lf_p);
    const double first = 4.0 * tr_m * a * a;
    const double outer = (1.0 - lr_p) / std::sqrt(s.u0 * s.vbar0) * (-1.0 + lf_m);
    const double in_nu = -2.0 * (K - 1.0) * std::sqrt(s.vbar0) * (-1.0 + lr_m) +
                         root2pi / tf_m * (0.5 + s.vbar0 - nu) * (-3.0 - lf_p + lr_m * (-1.0 + lf_m));
    const double in_mu = tr_m * (-1.0 + lf_m) * (K - 1.0) * 2.0 * std::sqrt(s.u0) -
                         root2pi * (0.5 + s.u0 - mu) * (-3.0 - lf_m + lr_m * (-1.0 + lf_p));
    return first - outer * in_nu * in_mu;
}

// Exponents whose miss / false-alarm powers enter the rule's bound.
inline std::vector<unsigned> phi_orders(const FusionRule& rule) {
    switch (rule.kind) {
        case FusionRule::Kind::or_rule: return {rule.k};
        case FusionRule::Kind::and_rule: return {1};
        default: break;
    }
    std::vector<unsigned> out;
    for (unsigned m = rule.k - rule.n + 1; m <= rule.k; ++m) out.push_back(m);
    return out;
}

inline std::vector<unsigned> psi_orders(const FusionRule& rule) {
    switch (rule.kind) {
        case FusionRule::Kind::or_rule: return {1};
        case FusionRule::Kind::and_rule: return {rule.k};
        default: break;
    }
    std::vector<unsigned> out;
    for (unsigned m = rule.n; m <= rule.k; ++m) out.push_back(m);
    return out;
}

struct FeasibleBox {
    double xi_r_lo = -std::numeric_limits<double>::infinity();
    double xi_r_hi = std::numeric_limits<double>::infinity();
    bool has_fc = false;
    double xi_fc_lo = -std::numeric_limits<double>::infinity();
    double xi_fc_hi = std::numeric_limits<double>::infinity();

    bool feasible() const { return xi_r_lo <= xi_r_hi && (!has_fc || xi_fc_lo <= xi_fc_hi); }
    bool contains(double r, double fc = 0.0) const {
        return r >= xi_r_lo && r <= xi_r_hi && (!has_fc || (fc >= xi_fc_lo && fc <= xi_fc_hi));
    }
    void intersect(const FeasibleBox& o) {
        xi_r_lo = std::max(xi_r_lo, o.xi_r_lo);
        xi_r_hi = std::min(xi_r_hi, o.xi_r_hi);
        if (o.has_fc) {
            has_fc = true;
            xi_fc_lo = std::max(xi_fc_lo, o.xi_fc_lo);
            xi_fc_hi = std::min(xi_fc_hi, o.xi_fc_hi);
        }
    }
};

namespace detail {

// Tightens [lo, hi] with {x : f(x) <= 0} for affine f.
template <class F>
void clip_affine(F f, double& lo, double& hi) {
    const double x0 = lo, x1 = std::max(hi, lo + 1.0);
    const double f0 = f(x0), f1 = f(x1);
    const double slope = (f1 - f0) / (x1 - x0);
    if (slope == 0.0) {
        if (f0 > 0.0) hi = lo - 1.0;
        return;
    }
    const double root = x0 - f0 / slope;
    if (slope > 0.0)
        hi = std::min(hi, root);
    else
        lo = std::max(lo, root);
}

}  // namespace detail

inline FeasibleBox feasible_box(const IntervalStats& s, Scenario scenario, const FusionRule& rule,
                               ConstraintForm form = ConstraintForm::sign_corrected) {
    FeasibleBox box;
    box.xi_r_lo = s.u0 + 0.5;
    box.xi_r_hi = s.u1 + 0.5;
    if (scenario == Scenario::perfect) return box;

    box.has_fc = true;
    box.xi_fc_lo = s.vbar0 + 0.5;
    box.xi_fc_hi = s.vbar1 + 0.5;
    const ConstraintBounds b = ConstraintBounds::from(s);
    for (unsigned m : phi_orders(rule)) {
        detail::clip_affine([&](double mu) { return constraint_phi(mu, b.xi_fc_plus, m, s, b, form); }, box.xi_r_lo, box.xi_r_hi);
        detail::clip_affine([&](double nu) { return constraint_phi(b.xi_r_plus, nu, m, s, b, form); }, box.xi_fc_lo, box.xi_fc_hi);
    }
    // Psi is undefined for a zero mean; the Gaussian terms then sit at their
    // lambda -> 0+ limit and the initial box already keeps them convex.
    if (s.u0 > 0.0 && s.vbar0 > 0.0) {
        for (unsigned m : psi_orders(rule)) {
            detail::clip_affine([&](double mu) { return constraint_psi(mu, b.xi_fc_minus, m, s, b, form); }, box.xi_r_lo, box.xi_r_hi);
            detail::clip_affine([&](double nu) { return constraint_psi(b.xi_r_minus, nu, m, s, b, form); }, box.xi_fc_lo, box.xi_fc_hi);
        }
    }
    return box;
}

inline FeasibleBox feasible_box(const LinkStats& stats, std::size_t j, Scenario scenario, const FusionRule& rule,
                               ConstraintForm form = ConstraintForm::sign_corrected) {
    return feasible_box(interval_stats(stats, j), scenario, rule, form);
}

// Intersection over every sequence and interval of the ensemble.
inline FeasibleBox feasible_box(std::span<const LinkStats> ensemble, Scenario scenario, const FusionRule& rule,
                               ConstraintForm form = ConstraintForm::sign_corrected) {
    if (ensemble.empty()) throw std::invalid_argument("feasible_box: empty ensemble");
    FeasibleBox box;
    for (const auto& s : ensemble)
        for (std::size_t j = 1; j <= s.intervals(); ++j) box.intersect(feasible_box(s, j, scenario, rule, form));
    return box;
}

namespace detail {

// 1 + Lambda and 1 - Lambda through erfc, so small link errors keep their
// relative precision. A zero mean takes the lambda -> 0+ limit.
inline double one_plus_lambda(double x, double mean) {
    if (mean > 0.0) return std::erfc((0.5 + mean - x) / std::sqrt(2.0 * mean));
    return 1.0 + lambda_or_limit(x, mean);
}

inline double one_minus_lambda(double x, double mean) {
    if (mean > 0.0) return std::erfc((x - 0.5 - mean) / std::sqrt(2.0 * mean));
    return 1.0 - lambda_or_limit(x, mean);
}

// 1 - (2 - a)(2 - b) / 4 without cancellation.
inline double joint_error(double a, double b) { return 0.5 * (a + b) - 0.25 * a * b; }

}  // namespace detail

// Gaussian link errors used by the surrogates.
inline LinkError surrogate_link_error(double xi_r, double xi_fc, const IntervalStats& s, Scenario scenario) {
    LinkError e;
    e.mode = CdfMode::gaussian;
    e.scenario = scenario;
    if (scenario == Scenario::perfect) {
        e.p_md = 0.5 * detail::one_plus_lambda(xi_r, s.u1);
        e.p_fa = 0.5 * detail::one_minus_lambda(xi_r, s.u0);
        return e;
    }
    e.p_md = detail::joint_error(detail::one_plus_lambda(xi_r, s.u1), detail::one_plus_lambda(xi_fc, s.vbar1));
    e.p_fa = detail::joint_error(detail::one_minus_lambda(xi_r, s.u0), detail::one_minus_lambda(xi_fc, s.vbar0));
    return e;
}

inline double surrogate_objective(double xi_r, double xi_fc, const IntervalStats& s, const FusionRule& rule,
                                  Scenario scenario, double p1) {
    const FusionBounds b = upper_bounds(surrogate_link_error(xi_r, xi_fc, s, scenario), rule);
    return p1 * b.q_md_plus + (1.0 - p1) * b.q_fa_plus;
}

inline double surrogate_objective(double xi_r, double xi_fc, const LinkStats& stats, std::size_t j,
                                  const FusionRule& rule, Scenario scenario, double p1) {
    return surrogate_objective(xi_r, xi_fc, interval_stats(stats, j), rule, scenario, p1);
}

// Interval-averaged surrogate of one sequence.
inline double sequence_surrogate(double xi_r, double xi_fc, const LinkStats& stats, const FusionRule& rule,
                                 Scenario scenario, double p1) {
    double sum = 0.0;
    for (std::size_t j = 1; j <= stats.intervals(); ++j)
        sum += surrogate_objective(xi_r, xi_fc, stats, j, rule, scenario, p1);
    return sum / static_cast<double>(stats.intervals());
}

inline double averaged_surrogate(double xi_r, double xi_fc, std::span<const LinkStats> ensemble,
                                 const FusionRule& rule, Scenario scenario, double p1) {
    double sum = 0.0;
    for (const auto& s : ensemble) sum += sequence_surrogate(xi_r, xi_fc, s, rule, scenario, p1);
    return sum / static_cast<double>(ensemble.size());
}

struct ScalarMin {
    double x = 0.0;
    double value = 0.0;
};

template <class F>
ScalarMin golden_section(F&& f, double lo, double hi, double tol = 1e-6) {
    if (!(lo <= hi)) throw std::invalid_argument("golden_section: empty interval");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a >= tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    ScalarMin best{fc <= fd ? c : d, std::min(fc, fd)};
    for (double edge : {lo, hi}) {
        const double v = f(edge);
        if (v < best.value) best = {edge, v};
    }
    return best;
}

enum class Method { convex, exhaustive };

inline const char* method_name(Method m) { return m == Method::convex ? "convex" : "exhaustive"; }

struct Solution {
    double xi_r = 0.0;
    std::optional<double> xi_fc;
    double objective = 0.0;
    long rounded_xi_r = 0;
    std::optional<long> rounded_xi_fc;
    double rounded_error = 0.0;
    Method method = Method::convex;
    std::size_t candidates_checked = 0;
    unsigned sweeps = 0;
    FeasibleBox box;
    bool infeasible = false;
};

struct Problem {
    std::span<const LinkStats> ensemble;  // one entry for a per-sequence problem
    FusionRule rule;
    Scenario scenario = Scenario::perfect;
    double p1 = 0.5;
    ConstraintForm form = ConstraintForm::sign_corrected;
};

inline double problem_objective(const Problem& p, double xi_r, double xi_fc) {
    return averaged_surrogate(xi_r, xi_fc, p.ensemble, p.rule, p.scenario, p.p1);
}

// Minimizes the surrogate over the feasible box without rounding.
inline Solution minimize_surrogate(const Problem& p) {
    Solution sol;
    sol.box = feasible_box(p.ensemble, p.scenario, p.rule, p.form);
    if (!sol.box.feasible()) {
        sol.infeasible = true;
        return sol;
    }
    const FeasibleBox& box = sol.box;
    if (p.scenario == Scenario::perfect) {
        const ScalarMin m = golden_section([&](double r) { return problem_objective(p, r, 0.0); }, box.xi_r_lo, box.xi_r_hi);
        sol.xi_r = m.x;
        sol.objective = m.value;
        return sol;
    }

    double r = 0.5 * (box.xi_r_lo + box.xi_r_hi);
    double f = 0.5 * (box.xi_fc_lo + box.xi_fc_hi);
    double best = problem_objective(p, r, f);
    constexpr unsigned max_sweeps = 200;
    unsigned sweep = 0;
    while (sweep < max_sweeps) {
        ++sweep;
        const double before = best;
        r = golden_section([&](double x) { return problem_objective(p, x, f); }, box.xi_r_lo, box.xi_r_hi).x;
        const ScalarMin mf = golden_section([&](double y) { return problem_objective(p, r, y); }, box.xi_fc_lo, box.xi_fc_hi);
        f = mf.x;
        best = std::min(best, mf.value);
        if (before - best >= 1e-10) continue;
        bool moved = false;
        for (double cr : {box.xi_r_lo, box.xi_r_hi})
            for (double cf : {box.xi_fc_lo, box.xi_fc_hi}) {
                const double v = problem_objective(p, cr, cf);
                if (v < best) {
                    best = v;
                    r = cr;
                    f = cf;
                    moved = true;
                }
            }
        if (!moved) break;
    }
    sol.xi_r = r;
    sol.xi_fc = f;
    sol.objective = best;
    sol.sweeps = sweep;
    return sol;
}

// Picks the best of floor/ceil on each axis under the exact evaluator
// (evaluator(xi_r, xi_fc) -> expected error). Ties keep the smaller threshold.
template <class Evaluator>
Solution round_thresholds(Solution raw, const Evaluator& exact) {
    auto nearest = [](double x) {
        std::vector<long> v{static_cast<long>(std::floor(x))};
        if (std::ceil(x) != std::floor(x)) v.push_back(static_cast<long>(std::ceil(x)));
        return v;
    };
    const std::vector<long> rs = nearest(raw.xi_r);
    const std::vector<long> fs = raw.xi_fc ? nearest(*raw.xi_fc) : std::vector<long>{0};
    double best = std::numeric_limits<double>::infinity();
    raw.candidates_checked = 0;
    for (long r : rs)
        for (long f : fs) {
            const double v = exact(r, f);
            ++raw.candidates_checked;
            if (v < best) {
                best = v;
                raw.rounded_xi_r = r;
                if (raw.xi_fc) raw.rounded_xi_fc = f;
            }
        }
    raw.rounded_error = best;
    return raw;
}

struct IntegerGrid {
    long r_lo = 1;
    long r_hi = 1;
    long fc_lo = 0;
    long fc_hi = 0;
};

inline IntegerGrid default_grid(std::span<const LinkStats> ensemble, Scenario scenario) {
    double max_u1 = 0.0, max_v1 = 0.0;
    for (const auto& s : ensemble) {
        for (double u : s.u1) max_u1 = std::max(max_u1, u);
        for (double v : s.vbar1) max_v1 = std::max(max_v1, v);
    }
    IntegerGrid g;
    g.r_hi = static_cast<long>(std::ceil(max_u1)) + 5;
    if (scenario == Scenario::noisy) {
        g.fc_lo = 1;
        g.fc_hi = static_cast<long>(std::ceil(max_v1)) + 5;
    }
    return g;
}

template <class Evaluator>
Solution exhaustive_optimal(const Evaluator& exact, const IntegerGrid& grid, bool joint) {
    if (grid.r_hi < grid.r_lo || grid.fc_hi < grid.fc_lo) throw std::invalid_argument("exhaustive_optimal: empty grid");
    const long width = grid.fc_hi - grid.fc_lo + 1;
    std::vector<double> table;
    if constexpr (requires { exact.grid(0L, 0L, 0L, 0L); }) {
        table = exact.grid(grid.r_lo, grid.r_hi, grid.fc_lo, grid.fc_hi);
    } else {
        for (long r = grid.r_lo; r <= grid.r_hi; ++r)
            for (long f = grid.fc_lo; f <= grid.fc_hi; ++f) table.push_back(exact(r, f));
    }
    Solution sol;
    sol.method = Method::exhaustive;
    sol.rounded_error = std::numeric_limits<double>::infinity();
    for (long r = grid.r_lo; r <= grid.r_hi; ++r)
        for (long f = grid.fc_lo; f <= grid.fc_hi; ++f) {
            const double v = table[static_cast<std::size_t>((r - grid.r_lo) * width + (f - grid.fc_lo))];
            if (v < sol.rounded_error) {
                sol.rounded_error = v;
                sol.rounded_xi_r = r;
                if (joint) sol.rounded_xi_fc = f;
            }
        }
    sol.candidates_checked = table.size();
    sol.xi_r = static_cast<double>(sol.rounded_xi_r);
    if (joint) sol.xi_fc = static_cast<double>(*sol.rounded_xi_fc);
    sol.objective = sol.rounded_error;
    return sol;
}

// Convex solve plus rounding; an empty feasible box falls back to the
// exhaustive oracle and is tagged as such.
template <class Evaluator>
Solution solve(const Problem& p, const Evaluator& exact) {
    Solution raw = minimize_surrogate(p);
    if (raw.infeasible) {
        Solution ex = exhaustive_optimal(exact, default_grid(p.ensemble, p.scenario), p.scenario == Scenario::noisy);
        ex.box = raw.box;
        ex.infeasible = true;
        return ex;
    }
    return round_thresholds(std::move(raw), exact);
}

// ---------------------------------------------------------------------------
// Numerical convexity checks.

struct Hessian2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;
    double det() const { return xx * yy - xy * xy; }
};

template <class F>
Hessian2 fd_hessian(F&& f, double x, double y, double h) {
    const double f0 = f(x, y);
    Hessian2 H;
    H.xx = (f(x + h, y) - 2.0 * f0 + f(x - h, y)) / (h * h);
    H.yy = (f(x, y + h) - 2.0 * f0 + f(x, y - h)) / (h * h);
    H.xy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    return H;
}

template <class F>
double fd_second_derivative(F&& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

struct ConvexityReport {
    double min_scaled_minor = std::numeric_limits<double>::infinity();
    std::size_t points = 0;
    std::size_t violations = 0;
    double worst_xi_r = 0.0;
    double worst_xi_fc = 0.0;

    bool passed() const { return violations == 0; }
};

inline constexpr double convexity_tolerance = 1e-9;

namespace detail {

// Minors are scaled by the larger of the Hessian entries and the function
// value so that finite-difference round-off does not register as a violation.
inline void record_minors(ConvexityReport& rep, const Hessian2& H, double value, bool joint, double r, double f) {
    const double scale = std::max({std::abs(H.xx), std::abs(H.yy), std::abs(H.xy), std::abs(value),
                                   std::numeric_limits<double>::min()});
    double m = H.xx / scale;
    if (joint) m = std::min({m, H.yy / scale, H.det() / (scale * scale)});
    ++rep.points;
    if (m < rep.min_scaled_minor) {
        rep.min_scaled_minor = m;
        rep.worst_xi_r = r;
        rep.worst_xi_fc = f;
    }
    if (m < -convexity_tolerance) ++rep.violations;
}

}  // namespace detail

// Checks p_md^K and p_fa^K on a grid_density x grid_density lattice strictly
// inside the box (one axis in the perfect scenario).
inline ConvexityReport verify_convexity(const IntervalStats& s, const FusionRule& rule, Scenario scenario,
                                        const FeasibleBox& box, int grid_density) {
    if (!box.feasible()) throw std::invalid_argument("verify_convexity: empty box");
    if (grid_density < 2) throw std::invalid_argument("verify_convexity: grid density must be >= 2");
    const bool joint = scenario == Scenario::noisy;
    const double wr = box.xi_r_hi - box.xi_r_lo;
    const double wf = joint ? box.xi_fc_hi - box.xi_fc_lo : 0.0;
    const double h = 1e-3 * std::max(1.0, std::max(wr, wf));
    const double mr = std::min(2.0 * h, 0.25 * wr);
    const double mf = std::min(2.0 * h, 0.25 * wf);

    const double k = rule.k;
    const std::array<std::function<double(double, double)>, 2> terms{
        [=](double r, double f) { return std::pow(surrogate_link_error(r, f, s, scenario).p_md, k); },
        [=](double r, double f) { return std::pow(surrogate_link_error(r, f, s, scenario).p_fa, k); },
    };

    ConvexityReport rep;
    const int nf = joint ? grid_density : 1;
    for (int a = 0; a < grid_density; ++a) {
        const double r = box.xi_r_lo + mr + (wr - 2.0 * mr) * a / (grid_density - 1);
        for (int c = 0; c < nf; ++c) {
            const double f = joint ? box.xi_fc_lo + mf + (wf - 2.0 * mf) * c / (grid_density - 1) : 0.0;
            for (const auto& term : terms) {
                Hessian2 H;
                if (joint) {
                    H = fd_hessian(term, r, f, h);
                } else {
                    H.xx = fd_second_derivative([&](double x) { return term(x, 0.0); }, r, h);
                }
                detail::record_minors(rep, H, term(r, f), joint, r, f);
            }
        }
    }
    return rep;
}

}  // namespace mcfusion
