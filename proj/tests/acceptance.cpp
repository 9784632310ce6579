// Acceptance run: one PASS/FAIL line per criterion, indented detail lines
// below it, and a summary at the end. Failures are reported, not hidden; the
// exit status is non-zero only if the run itself breaks.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "mcfusion/mcfusion.hpp"

using namespace mcfusion;
using presets::um;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    int passed = 0;
    int total = 0;
    void report(int id, const char* name, bool ok, double secs) {
        ++total;
        passed += ok;
        std::printf("[%s] criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, secs);
        std::fflush(stdout);
    }
};

template <class... A>
void note(const char* f, A... a) {
    std::printf("       ");
    std::printf(f, a...);
    std::printf("\n");
}

double rel(double got, double want) { return (got - want) / want; }

std::vector<FusionRule> rules(unsigned k) {
    return {FusionRule::make_or(k), FusionRule::make_and(k), FusionRule::make_majority(k)};
}

ExactEvaluator evaluator(const Topology& topo, const PhysicalParams& p, const FusionRule& rule, Scenario sc) {
    EvaluatorOptions o;
    o.scenario = sc;
    o.candidates = 32;
    o.seed = 1;
    return ExactEvaluator(nonzero_sequences(p.length), Channel::build(topo, p), rule, p.p1, o);
}

struct RuleResult {
    FusionRule rule;
    Solution exhaustive;
    Solution convex;
};

std::vector<RuleResult> optimise_all(const Topology& topo, const PhysicalParams& p, Scenario sc) {
    std::vector<RuleResult> out;
    for (const auto& rule : rules(static_cast<unsigned>(topo.receiver_count()))) {
        const ExactEvaluator ev = evaluator(topo, p, rule, sc);
        RuleResult r{rule, exhaustive_optimal(ev, default_grid(ev.stats(), sc), sc == Scenario::noisy), {}};
        r.convex = solve(Problem{ev.stats(), rule, sc, p.p1}, ev);
        out.push_back(r);
    }
    return out;
}

double exhaustive_error(const Topology& topo, const PhysicalParams& p, const FusionRule& rule, Scenario sc) {
    const ExactEvaluator ev = evaluator(topo, p, rule, sc);
    return exhaustive_optimal(ev, default_grid(ev.stats(), sc), sc == Scenario::noisy).rounded_error;
}

// Criterion 7 pieces.

bool fusion_enumeration() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (unsigned k = 1; k <= 12; ++k)
        for (unsigned n = 1; n <= k; ++n) {
            const double pm = u(rng), pf = u(rng);
            double miss = 0.0, fa = 0.0;
            for (unsigned v = 0; v < (1u << k); ++v) {
                double w1 = 1.0, w0 = 1.0;
                for (unsigned i = 0; i < k; ++i) {
                    const bool one = (v >> i) & 1u;
                    w1 *= one ? 1.0 - pm : pm;
                    w0 *= one ? pf : 1.0 - pf;
                }
                if (static_cast<unsigned>(std::popcount(v)) < n) miss += w1;
                else fa += w0;
            }
            const GlobalError g = global_error(pm, pf, FusionRule::make_n_of_k(n, k), 0.5);
            worst = std::max({worst, std::abs(g.q_md - miss), std::abs(g.q_fa - fa)});
        }
    note("fusion vs 2^K enumeration, K <= 12: max error %.2e", worst);
    return worst < 1e-12;
}

bool bound_dominance() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const unsigned k = 1 + rng() % 12;
        const FusionRule r = i % 4 == 0   ? FusionRule::make_or(k)
                             : i % 4 == 1 ? FusionRule::make_and(k)
                             : i % 4 == 2 ? FusionRule::make_majority(k)
                                          : FusionRule::make_n_of_k(1 + rng() % k, k);
        const double pm = u(rng), pf = u(rng);
        const GlobalError g = global_error(pm, pf, r, 0.5);
        const FusionBounds b = upper_bounds(pm, pf, r);
        bad += b.q_md_plus < g.q_md - 1e-15 || b.q_fa_plus < g.q_fa - 1e-15;
    }
    note("upper-bound dominance: %d violations in 1000 instances", bad);
    return bad == 0;
}

bool gaussian_gap() {
    bool ok = true;
    for (double mean : {100.0, 500.0, 1000.0}) {
        double gap = 0.0;
        for (long t = 0; t <= static_cast<long>(2 * mean); ++t)
            gap = std::max(gap, std::abs(gaussian_cdf_cc(t, mean) - poisson_cdf(t, mean)));
        note("Gaussian vs Poisson sup-gap at lambda = %g: %.2e", mean, gap);
        ok = ok && gap < 0.01;
    }
    return ok;
}

bool vbar_linearity(const Channel& ch) {
    const auto [v0, v1] = averaged_conditional_means(10, ch.rx_fc);
    double worst = 0.0;
    for (std::size_t j = 1; j <= 10; ++j) {
        const unsigned count = 1u << (j - 1);
        double sum = 0.0;
        for (unsigned h = 0; h < count; ++h) {
            SymbolSequence bits(j - 1);
            for (std::size_t i = 0; i + 1 < j; ++i) bits[i] = (h >> i) & 1u;
            sum += ch.rx_fc.history_mean(bits, j);
        }
        worst = std::max(worst, std::abs(v0[j - 1] - sum / count));
    }
    note("averaged report means vs enumeration, j <= 10: max error %.2e", worst);
    return worst < 1e-12;
}

bool monotonicity(const std::vector<LinkStats>& ensemble) {
    int bad = 0;
    for (std::size_t i = 0; i < ensemble.size(); i += 31)
        for (std::size_t j = 1; j <= 10; ++j)
            for (int x = 0; x < 30; ++x)
                for (CdfMode mode : {CdfMode::exact_poisson, CdfMode::gaussian}) {
                    const LinkError a = perfect_link_error(ensemble[i], j, x, mode);
                    const LinkError b = perfect_link_error(ensemble[i], j, x + 1, mode);
                    bad += a.p_md > b.p_md || a.p_fa < b.p_fa;
                }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const unsigned k = 1 + rng() % 12;
        const double pm = u(rng), pf = u(rng);
        for (unsigned n = 1; n < k; ++n) {
            const GlobalError a = global_error(pm, pf, FusionRule::make_n_of_k(n, k), 0.5);
            const GlobalError b = global_error(pm, pf, FusionRule::make_n_of_k(n + 1, k), 0.5);
            bad += a.q_md > b.q_md + 1e-15 || a.q_fa < b.q_fa - 1e-15;
        }
    }
    note("monotonicity in xi_R and in N: %d violations", bad);
    return bad == 0;
}

bool psd_inside_boxes(const std::vector<LinkStats>& ensemble) {
    bool ok = true;
    for (Scenario sc : {Scenario::perfect, Scenario::noisy})
        for (const auto& rule : rules(3)) {
            const FeasibleBox box = feasible_box(ensemble, sc, rule);
            if (!box.feasible()) {
                note("%s %s: box empty", rule.name().c_str(), sc == Scenario::noisy ? "noisy" : "perfect");
                ok = false;
                continue;
            }
            std::size_t points = 0, violations = 0;
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& s : ensemble)
                for (std::size_t j = 1; j <= s.intervals(); ++j) {
                    const ConvexityReport rep = verify_convexity(interval_stats(s, j), rule, sc, box, 4);
                    points += rep.points;
                    violations += rep.violations;
                    worst = std::min(worst, rep.min_scaled_minor);
                }
            note("%s %s: %zu Hessians, %zu below -1e-9, min scaled minor %.2e", rule.name().c_str(),
                   sc == Scenario::noisy ? "noisy" : "perfect", points, violations, worst);
            ok = ok && violations == 0;
        }

    const IntervalStats s = interval_stats(ensemble.back(), 10);
    FeasibleBox outside;
    outside.xi_r_lo = s.u1 + 1.0;
    outside.xi_r_hi = s.u1 + 8.0;
    const ConvexityReport rep = verify_convexity(s, FusionRule::make_or(1), Scenario::perfect, outside, 8);
    note("counterexample beyond U1 + 0.5: min scaled second derivative %.2e at xi_R = %.2f (U1 = %.2f)",
           rep.min_scaled_minor, rep.worst_xi_r, s.u1);
    return ok && !rep.passed();
}

}  // namespace

int main() {
    const auto t_all = Clock::now();
    Verdict v;
    const Topology topo = presets::reference_topology(3);
    const PhysicalParams params = presets::reference_params(3);

    // 1-3: reference configuration.
    auto t0 = Clock::now();
    const std::vector<RuleResult> noisy = optimise_all(topo, params, Scenario::noisy);
    const double noisy_secs = seconds_since(t0);
    struct Target { long xi_fc, xi_r; double error; };
    const Target table[3] = {{4, 9, 2.78e-3}, {2, 4, 8.99e-3}, {3, 7, 2.64e-3}};
    bool ok1 = true;
    for (int i = 0; i < 3; ++i) {
        const Solution& e = noisy[i].exhaustive;
        const bool th = std::abs(*e.rounded_xi_fc - table[i].xi_fc) <= 1 && std::abs(e.rounded_xi_r - table[i].xi_r) <= 1;
        const bool er = std::abs(rel(e.rounded_error, table[i].error)) <= 0.15;
        ok1 = ok1 && th && er;
        note("%-8s (xi_FC, xi_R) = (%ld, %ld) vs (%ld, %ld) %s; error %.3e vs %.3e (%+.1f%%) %s",
               noisy[i].rule.name().c_str(), *e.rounded_xi_fc, e.rounded_xi_r, table[i].xi_fc, table[i].xi_r,
               th ? "ok" : "MISS", e.rounded_error, table[i].error, 100 * rel(e.rounded_error, table[i].error),
               er ? "ok" : "MISS");
    }
    note("runtime %.1f s (target < 600 s)", noisy_secs);
    v.report(1, "reference optimum by exhaustive search, K = 3, noisy", ok1 && noisy_secs < 600, noisy_secs);

    t0 = Clock::now();
    bool ok2 = true;
    for (int i = 0; i < 3; ++i) {
        const Solution& c = noisy[i].convex;
        const double gap = rel(c.rounded_error, noisy[i].exhaustive.rounded_error);
        const double limit = noisy[i].rule.kind == FusionRule::Kind::and_rule ? 0.02 : 0.20;
        ok2 = ok2 && gap <= limit && !c.infeasible;
        note("%-8s convex (%ld, %ld) error %.3e, gap %+.1f%% (limit %.0f%%)%s", noisy[i].rule.name().c_str(),
               c.rounded_xi_fc.value_or(-1), c.rounded_xi_r, c.rounded_error, 100 * gap, 100 * limit,
               c.infeasible ? " [box empty, exhaustive fallback]" : "");
    }
    v.report(2, "convex solver versus exhaustive optimum", ok2, seconds_since(t0));

    t0 = Clock::now();
    const std::vector<RuleResult> perfect = optimise_all(topo, params, Scenario::perfect);
    bool ok3 = true;
    for (const auto* set : {&perfect, &noisy}) {
        const double o = (*set)[0].exhaustive.rounded_error, a = (*set)[1].exhaustive.rounded_error,
                     m = (*set)[2].exhaustive.rounded_error;
        ok3 = ok3 && m <= o && o <= a;
        note("%s: majority %.3e <= or %.3e <= and %.3e", set == &perfect ? "perfect" : "noisy  ", m, o, a);
    }
    v.report(3, "rule ordering at the optima", ok3, seconds_since(t0));

    // 4: receiver-count sweeps, perfect reporting.
    t0 = Clock::now();
    bool ok4 = true;
    const Topology six = presets::reference_topology(6, 0.2 * um);
    auto sweep_point = [&](unsigned k, double radius) {
        Topology t = six;
        t.rx.resize(k);
        t.rx_radius = radius;
        PhysicalParams p = presets::reference_params(k);
        if (k == 1) p.s0 = presets::single_link_params().s0;
        return std::pair{t, p};
    };
    for (const auto& rule : rules(1)) {
        std::vector<double> err;
        for (unsigned k = 1; k <= 6; ++k) {
            const auto [t, p] = sweep_point(k, 0.2 * um);
            err.push_back(exhaustive_error(t, p, rule.with_receivers(k), Scenario::perfect));
        }
        bool dec = true;
        for (std::size_t i = 1; i < err.size(); ++i) dec = dec && err[i] < err[i - 1];
        ok4 = ok4 && dec;
        note("%-8s K = 1..6: %.3e %.3e %.3e %.3e %.3e %.3e %s", rule.name().c_str(), err[0], err[1], err[2], err[3],
               err[4], err[5], dec ? "strictly decreasing" : "NOT strictly decreasing");
    }
    {
        std::vector<double> err;
        for (unsigned k = 1; k <= 6; ++k) {
            const auto [t, p] = sweep_point(k, presets::fixed_volume_radius(k));
            err.push_back(exhaustive_error(t, p, FusionRule::make_majority(k), Scenario::perfect));
        }
        bool nondec = true;
        for (std::size_t i = 1; i < err.size(); ++i) nondec = nondec && err[i] >= err[i - 1];
        ok4 = ok4 && nondec;
        note("majority, fixed total volume, K = 1..6: %.3e %.3e %.3e %.3e %.3e %.3e %s", err[0], err[1], err[2],
               err[3], err[4], err[5], nondec ? "non-decreasing" : "NOT non-decreasing");
    }
    v.report(4, "receiver-count sweeps (perfect reporting)", ok4, seconds_since(t0));

    // 5: FC radius sweep, noisy reporting.
    t0 = Clock::now();
    bool ok5 = true;
    const std::vector<double> radii{0.125, 0.15, 0.175, 0.2, 0.225, 0.25};
    for (const auto& rule : rules(3)) {
        std::vector<double> err;
        for (double r : radii) {
            Topology t = topo;
            t.fc_radius = r * um;
            err.push_back(exhaustive_error(t, params, rule, Scenario::noisy));
        }
        bool nonincr = true;
        for (std::size_t i = 1; i < err.size(); ++i) nonincr = nonincr && err[i] <= err[i - 1];
        ok5 = ok5 && nonincr;
        note("%-8s r_FC = 0.125..0.25 um: %.3e %.3e %.3e %.3e %.3e %.3e %s", rule.name().c_str(), err[0], err[1],
               err[2], err[3], err[4], err[5], nonincr ? "non-increasing" : "NOT non-increasing");
    }
    v.report(5, "FC radius sweep (noisy reporting)", ok5, seconds_since(t0));

    // 6: particle simulation at the exhaustive optima.
    t0 = Clock::now();
    bool ok6 = true;
    constexpr std::size_t trials = 10'000;
    for (const auto& r : noisy) {
        SimulationConfig cfg;
        cfg.topology = topo;
        cfg.params = params;
        cfg.rule = r.rule;
        cfg.thresholds = {r.exhaustive.rounded_xi_r, *r.exhaustive.rounded_xi_fc};
        cfg.scenario = Scenario::noisy;
        const ErrorEstimate e = estimate_error(cfg, trials, 2024);
        const double q = r.exhaustive.rounded_error;
        const double se = std::sqrt(q * (1.0 - q) / static_cast<double>(e.samples));
        const double z = (e.q_hat - q) / se;
        ok6 = ok6 && std::abs(z) <= 3.0;
        note("%-8s simulated %.3e +- %.1e (95%% Wilson) over %llu intervals; analytic %.3e; %.2f standard errors",
               r.rule.name().c_str(), e.q_hat, e.ci_halfwidth, static_cast<unsigned long long>(e.samples), q, z);
    }
    const double sim_secs = seconds_since(t0);
    note("runtime %.1f s (target < 1800 s)", sim_secs);
    v.report(6, "particle simulation versus analytic error", ok6 && sim_secs < 1800, sim_secs);

    // 7: property suite.
    t0 = Clock::now();
    const Channel ch = Channel::build(topo, params);
    std::vector<LinkStats> ensemble;
    for (const auto& s : nonzero_sequences(10)) ensemble.push_back(make_link_stats(s, ch.tx_rx, ch.rx_fc));
    bool ok7 = fusion_enumeration();
    ok7 = bound_dominance() && ok7;
    ok7 = gaussian_gap() && ok7;
    ok7 = vbar_linearity(ch) && ok7;
    ok7 = monotonicity(ensemble) && ok7;
    ok7 = psd_inside_boxes(ensemble) && ok7;
    const double prop_secs = seconds_since(t0);
    note("runtime %.1f s (target < 60 s)", prop_secs);
    v.report(7, "property suite", ok7 && prop_secs < 60, prop_secs);

    // 8: walker oracle for both hit probabilities.
    t0 = Clock::now();
    bool ok8 = true;
    struct Point { double d, r, t; };
    const Point tx_points[3] = {{2.088 * um, 0.225 * um, 100e-6}, {2.088 * um, 0.225 * um, 500e-6}, {1.5 * um, 0.225 * um, 300e-6}};
    const Point fc_points[3] = {{0.6 * um, 0.2 * um, 30e-6}, {0.6 * um, 0.2 * um, 150e-6}, {1.2 * um, 0.2 * um, 90e-6}};
    std::uint64_t seed = 100;
    for (const auto& pt : tx_points) {
        const double want = point_hit_probability(pt.d, sphere_volume(pt.r), 5e-9, pt.t);
        const auto [f, se] = empirical_hit_fraction(pt.d, pt.r, 5e-9, pt.t, 1'000'000, ++seed);
        ok8 = ok8 && std::abs(f - want) <= 3.0 * se;
        note("uniform-concentration form d = %.3f um t = %3.0f us: %.4e vs walkers %.4e (%.2f SE)", pt.d / um,
               pt.t * 1e6, want, f, (f - want) / se);
    }
    for (const auto& pt : fc_points) {
        const double want = sphere_hit_probability(pt.d, pt.r, 5e-9, pt.t);
        const auto [f, se] = empirical_hit_fraction(pt.d, pt.r, 5e-9, pt.t, 1'000'000, ++seed);
        ok8 = ok8 && std::abs(f - want) <= 3.0 * se;
        note("exact sphere form      d = %.3f um t = %3.0f us: %.4e vs walkers %.4e (%.2f SE)", pt.d / um,
               pt.t * 1e6, want, f, (f - want) / se);
    }
    v.report(8, "hit probabilities versus 10^6 walkers", ok8, seconds_since(t0));

    std::printf("acceptance: %d of %d criteria passed (%.0f s)\n", v.passed, v.total, seconds_since(t_all));
    return 0;
}
