#pragma once
// Experiment configuration (JSON, schema version 1) and the runners behind the
// command-line tool. Lengths in the file are micrometres, times are seconds.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mcfusion/mcfusion.hpp"

namespace mcfusion::cli {

using nlohmann::json;

inline constexpr int schema_version = 1;

// Validation failure tied to a location in the configuration document.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;  // dotted key path, e.g. "sweep.values"
};

struct EvaluateSpec {
    std::optional<std::pair<long, long>> xi_r;
    std::optional<std::pair<long, long>> xi_fc;
};

struct SimulateSpec {
    std::size_t trials = 10000;
    std::optional<long> xi_r;  // unset: exhaustive optimum
    std::optional<long> xi_fc;
    double sim_dt = 5e-6;
    bool truncate = true;
};

struct SweepSpec {
    std::string axis;  // K | r_fc | k_fixed_volume
    std::vector<double> values;
    double rx_budget = 2000.0;
    bool single_link_baseline = true;
    double single_link_s0 = 10000.0;
    double volume_radius_um = 0.2;
    unsigned volume_count = 6;
};

struct ExperimentConfig {
    Topology topology;
    PhysicalParams params;
    Scenario scenario = Scenario::noisy;
    std::vector<std::string> rules{"or", "and", "majority"};
    std::uint64_t seed = 1;
    unsigned candidates = 32;
    unsigned threads = 1;
    bool per_sequence = false;
    EvaluateSpec evaluate;
    SimulateSpec simulate;
    SweepSpec sweep;
};

inline FusionRule parse_rule(const std::string& spec, unsigned k) {
    if (spec == "or") return FusionRule::make_or(k);
    if (spec == "and") return FusionRule::make_and(k);
    if (spec == "majority") return FusionRule::make_majority(k);
    const std::string prefix = "n-of-k:";
    if (spec.rfind(prefix, 0) == 0) {
        const std::string digits = spec.substr(prefix.size());
        if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos)
            return FusionRule::make_n_of_k(static_cast<unsigned>(std::stoul(digits)), k);
    }
    throw std::invalid_argument("unknown rule '" + spec + "' (expected or, and, majority or n-of-k:N)");
}

inline Scenario parse_scenario(const std::string& s) {
    if (s == "perfect") return Scenario::perfect;
    if (s == "noisy") return Scenario::noisy;
    throw std::invalid_argument("unknown scenario '" + s + "' (expected perfect or noisy)");
}

inline const char* scenario_name(Scenario s) { return s == Scenario::perfect ? "perfect" : "noisy"; }

// "1..6" (inclusive integer range) or a comma separated list.
inline std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    const auto dots = text.find("..");
    try {
        if (dots != std::string::npos) {
            const long lo = std::stol(text.substr(0, dots));
            const long hi = std::stol(text.substr(dots + 2));
            for (long v = lo; v <= hi; ++v) out.push_back(static_cast<double>(v));
            if (out.empty()) throw std::invalid_argument("empty range");
            return out;
        }
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::stod(item));
    } catch (const std::logic_error&) {
        throw std::invalid_argument("cannot parse sweep values '" + text + "'");
    }
    return out;
}

inline ExperimentConfig default_config() {
    ExperimentConfig c;
    c.topology = presets::reference_topology(3);
    c.params = presets::reference_params(3);
    return c;
}

namespace detail {

inline json vec_um(const Vec3& v) { return json::array({v.x / presets::um, v.y / presets::um, v.z / presets::um}); }

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Typed, path-aware access to a JSON object with unknown-key detection.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known = known || it.key() == k;
            if (!known) throw ConfigError(join(path_, it.key()), "unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    const json& at(const char* key) const { return j_.at(key); }
    std::string path(const char* key) const { return join(path_, key); }

    double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_number()) throw ConfigError(path(key), "expected a number");
        return j_.at(key).get<double>();
    }

    double positive(const char* key, double fallback) const {
        const double v = number(key, fallback);
        if (!(v > 0.0)) throw ConfigError(path(key), "must be positive");
        return v;
    }

    long integer(const char* key, long fallback, long min_value) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
        const long x = v.get<long>();
        if (x < min_value) throw ConfigError(path(key), "must be >= " + std::to_string(min_value));
        return x;
    }

    std::string string(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_string()) throw ConfigError(path(key), "expected a string");
        return j_.at(key).get<std::string>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) throw ConfigError(path(key), "expected true or false");
        return j_.at(key).get<bool>();
    }

    Vec3 point_um(const char* key, const Vec3& fallback) const {
        if (!has(key)) return fallback;
        return to_point(j_.at(key), path(key));
    }

    static Vec3 to_point(const json& v, const std::string& where) {
        if (!v.is_array() || v.size() != 3) throw ConfigError(where, "expected [x, y, z]");
        for (const auto& c : v)
            if (!c.is_number()) throw ConfigError(where, "expected [x, y, z]");
        return {v[0].get<double>() * presets::um, v[1].get<double>() * presets::um, v[2].get<double>() * presets::um};
    }

    std::optional<std::pair<long, long>> range(const char* key) const {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
            throw ConfigError(path(key), "expected [lo, hi] integers");
        const long lo = v[0].get<long>(), hi = v[1].get<long>();
        if (lo < 0 || hi < lo) throw ConfigError(path(key), "expected 0 <= lo <= hi");
        return std::pair{lo, hi};
    }

private:
    const json& j_;
    std::string path_;
};

}  // namespace detail

inline ExperimentConfig config_from_json(const json& doc) {
    using detail::Reader;
    ExperimentConfig c = default_config();
    Reader root(doc, "");
    root.allow({"schema_version", "topology", "channel", "scenario", "rules", "seed", "candidates", "threads",
                "per_sequence", "evaluate", "simulate", "sweep"});
    if (root.integer("schema_version", schema_version, 1) != schema_version)
        throw ConfigError("schema_version", "unsupported version (expected " + std::to_string(schema_version) + ")");

    if (root.has("topology")) {
        Reader t(root.at("topology"), "topology");
        t.allow({"tx_um", "rx_um", "fc_um", "rx_radius_um", "fc_radius_um"});
        c.topology.tx = t.point_um("tx_um", c.topology.tx);
        c.topology.fc = t.point_um("fc_um", c.topology.fc);
        if (t.has("rx_um")) {
            const json& rx = t.at("rx_um");
            if (!rx.is_array() || rx.empty()) throw ConfigError("topology.rx_um", "expected a non-empty list of points");
            c.topology.rx.clear();
            for (std::size_t i = 0; i < rx.size(); ++i)
                c.topology.rx.push_back(Reader::to_point(rx[i], "topology.rx_um"));
        }
        c.topology.rx_radius = t.positive("rx_radius_um", c.topology.rx_radius / presets::um) * presets::um;
        c.topology.fc_radius = t.positive("fc_radius_um", c.topology.fc_radius / presets::um) * presets::um;
    }

    if (root.has("channel")) {
        Reader p(root.at("channel"), "channel");
        p.allow({"d0", "dk", "s0", "sk", "dt_rx", "dt_fc", "m_rx", "m_fc", "t_trans", "t_report", "length", "p1"});
        PhysicalParams& q = c.params;
        q.d0 = p.positive("d0", q.d0);
        q.dk = p.positive("dk", q.dk);
        q.s0 = p.positive("s0", q.s0);
        q.sk = p.positive("sk", q.sk);
        q.dt_rx = p.positive("dt_rx", q.dt_rx);
        q.dt_fc = p.positive("dt_fc", q.dt_fc);
        q.m_rx = static_cast<int>(p.integer("m_rx", q.m_rx, 1));
        q.m_fc = static_cast<int>(p.integer("m_fc", q.m_fc, 1));
        q.t_trans = p.positive("t_trans", q.t_trans);
        q.t_report = p.positive("t_report", q.t_report);
        q.length = static_cast<int>(p.integer("length", q.length, 1));
        if (q.length > 20) throw ConfigError("channel.length", "must be <= 20");
        q.p1 = p.number("p1", q.p1);
        if (!(q.p1 > 0.0 && q.p1 < 1.0)) throw ConfigError("channel.p1", "must lie in (0, 1)");
    }

    try {
        c.scenario = parse_scenario(root.string("scenario", scenario_name(c.scenario)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("scenario", e.what());
    }
    if (root.has("rules")) {
        const json& r = root.at("rules");
        if (!r.is_array() || r.empty()) throw ConfigError("rules", "expected a non-empty list of rule names");
        c.rules.clear();
        for (const auto& name : r) {
            if (!name.is_string()) throw ConfigError("rules", "expected rule names");
            c.rules.push_back(name.get<std::string>());
        }
    }
    c.seed = static_cast<std::uint64_t>(root.integer("seed", static_cast<long>(c.seed), 0));
    c.candidates = static_cast<unsigned>(root.integer("candidates", c.candidates, 1));
    c.threads = static_cast<unsigned>(root.integer("threads", c.threads, 0));
    c.per_sequence = root.boolean("per_sequence", c.per_sequence);

    if (root.has("evaluate")) {
        Reader e(root.at("evaluate"), "evaluate");
        e.allow({"xi_r", "xi_fc"});
        c.evaluate.xi_r = e.range("xi_r");
        c.evaluate.xi_fc = e.range("xi_fc");
    }
    if (root.has("simulate")) {
        Reader s(root.at("simulate"), "simulate");
        s.allow({"trials", "xi_r", "xi_fc", "sim_dt", "truncate"});
        c.simulate.trials = static_cast<std::size_t>(s.integer("trials", static_cast<long>(c.simulate.trials), 100));
        if (s.has("xi_r")) c.simulate.xi_r = s.integer("xi_r", 1, 1);
        if (s.has("xi_fc")) c.simulate.xi_fc = s.integer("xi_fc", 1, 1);
        c.simulate.sim_dt = s.positive("sim_dt", c.simulate.sim_dt);
        c.simulate.truncate = s.boolean("truncate", c.simulate.truncate);
    }
    if (root.has("sweep")) {
        Reader s(root.at("sweep"), "sweep");
        s.allow({"axis", "values", "rx_budget", "single_link_baseline", "single_link_s0", "volume_radius_um",
                 "volume_count"});
        c.sweep.axis = s.string("axis", c.sweep.axis);
        if (s.has("values")) {
            const json& v = s.at("values");
            if (!v.is_array()) throw ConfigError("sweep.values", "expected a list of numbers");
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError("sweep.values", "expected a list of numbers");
                c.sweep.values.push_back(x.get<double>());
            }
        }
        c.sweep.rx_budget = s.positive("rx_budget", c.sweep.rx_budget);
        c.sweep.single_link_baseline = s.boolean("single_link_baseline", c.sweep.single_link_baseline);
        c.sweep.single_link_s0 = s.positive("single_link_s0", c.sweep.single_link_s0);
        c.sweep.volume_radius_um = s.positive("volume_radius_um", c.sweep.volume_radius_um);
        c.sweep.volume_count = static_cast<unsigned>(s.integer("volume_count", c.sweep.volume_count, 1));
    }
    return c;
}

// Canonical form: every field, defaults filled in. Its hash tags output rows.
inline json config_to_json(const ExperimentConfig& c) {
    using detail::vec_um;
    json rx = json::array();
    for (const auto& p : c.topology.rx) rx.push_back(vec_um(p));
    auto range = [](const std::optional<std::pair<long, long>>& r) {
        return r ? json::array({r->first, r->second}) : json(nullptr);
    };
    auto opt = [](const std::optional<long>& v) { return v ? json(*v) : json(nullptr); };
    const PhysicalParams& q = c.params;
    return json{
        {"schema_version", schema_version},
        {"topology",
         {{"tx_um", vec_um(c.topology.tx)},
          {"rx_um", rx},
          {"fc_um", vec_um(c.topology.fc)},
          {"rx_radius_um", c.topology.rx_radius / presets::um},
          {"fc_radius_um", c.topology.fc_radius / presets::um}}},
        {"channel",
         {{"d0", q.d0}, {"dk", q.dk}, {"s0", q.s0}, {"sk", q.sk}, {"dt_rx", q.dt_rx}, {"dt_fc", q.dt_fc},
          {"m_rx", q.m_rx}, {"m_fc", q.m_fc}, {"t_trans", q.t_trans}, {"t_report", q.t_report},
          {"length", q.length}, {"p1", q.p1}}},
        {"scenario", scenario_name(c.scenario)},
        {"rules", c.rules},
        {"seed", c.seed},
        {"candidates", c.candidates},
        {"threads", c.threads},
        {"per_sequence", c.per_sequence},
        {"evaluate", {{"xi_r", range(c.evaluate.xi_r)}, {"xi_fc", range(c.evaluate.xi_fc)}}},
        {"simulate",
         {{"trials", c.simulate.trials}, {"xi_r", opt(c.simulate.xi_r)}, {"xi_fc", opt(c.simulate.xi_fc)},
          {"sim_dt", c.simulate.sim_dt}, {"truncate", c.simulate.truncate}}},
        {"sweep",
         {{"axis", c.sweep.axis}, {"values", c.sweep.values}, {"rx_budget", c.sweep.rx_budget},
          {"single_link_baseline", c.sweep.single_link_baseline}, {"single_link_s0", c.sweep.single_link_s0},
          {"volume_radius_um", c.sweep.volume_radius_um}, {"volume_count", c.sweep.volume_count}}},
    };
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    json doc = config_to_json(c);
    doc.erase("threads");  // results do not depend on it
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
    return buf;
}

// Checks everything a run needs before any work starts.
inline void validate(const ExperimentConfig& c) {
    try {
        c.topology.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("topology", e.what());
    }
    try {
        c.params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("channel", e.what());
    }
    if (!c.topology.symmetric())
        throw ConfigError("topology.rx_um", "receivers must be equidistant from the TX and from the FC");
    for (const auto& r : c.rules) {
        try {
            parse_rule(r, static_cast<unsigned>(c.topology.receiver_count()));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("rules", e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Output

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> columns) : out_(out), width_(columns.size()) {
        write(columns);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw std::logic_error("csv: row width differs from header");
        write(cells);
    }

private:
    void write(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ostream& out_;
    std::size_t width_;
};

// ---------------------------------------------------------------------------
// Runners

struct Setup {
    Topology topology;
    PhysicalParams params;
    FusionRule rule;
};

inline Setup make_setup(const ExperimentConfig& c, const std::string& rule) {
    return {c.topology, c.params, parse_rule(rule, static_cast<unsigned>(c.topology.receiver_count()))};
}

inline ExactEvaluator make_evaluator(const ExperimentConfig& c, const Setup& s) {
    EvaluatorOptions o;
    o.scenario = c.scenario;
    o.candidates = c.candidates;
    o.seed = c.seed;
    o.threads = c.threads;
    return ExactEvaluator(nonzero_sequences(s.params.length), Channel::build(s.topology, s.params), s.rule,
                          s.params.p1, o);
}

struct Optimum {
    Solution exhaustive;
    Solution convex;
    std::optional<Solution> per_sequence;
};

// Per-sequence surrogate optimum for every sequence, scored by the mean of the
// resulting instantaneous exact errors. Needs the transmitted history, so it is
// a reference bound rather than an implementable detector.
inline Solution per_sequence_optimum(const ExperimentConfig& c, const Setup& s, const ExactEvaluator& averaged) {
    const auto& ensemble = averaged.ensemble();
    std::vector<double> error(ensemble.size());
    std::vector<std::uint8_t> fallback(ensemble.size(), 0);
    parallel_for(ensemble.size(), c.threads, [&](std::size_t i) {
        EvaluatorOptions o = averaged.options();
        o.seed = derive_seed(c.seed, {i});
        o.threads = 1;
        const ExactEvaluator one({ensemble[i]}, averaged.channel(), s.rule, s.params.p1, o);
        const Problem p{std::span<const LinkStats>(one.stats()), s.rule, c.scenario, s.params.p1};
        const Solution sol = solve(p, one);
        error[i] = sol.rounded_error;
        fallback[i] = sol.infeasible ? 1 : 0;
    });
    Solution out;
    out.method = Method::convex;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        out.rounded_error += error[i] / static_cast<double>(ensemble.size());
        out.candidates_checked += fallback[i];  // sequences that needed the exhaustive fallback
    }
    out.objective = out.rounded_error;
    return out;
}

inline Optimum optimize(const ExperimentConfig& c, const Setup& s) {
    const ExactEvaluator ev = make_evaluator(c, s);
    const bool joint = c.scenario == Scenario::noisy;
    Optimum o;
    o.exhaustive = exhaustive_optimal(ev, default_grid(ev.stats(), c.scenario), joint);
    const Problem p{std::span<const LinkStats>(ev.stats()), s.rule, c.scenario, s.params.p1};
    o.convex = solve(p, ev);
    if (c.per_sequence) o.per_sequence = per_sequence_optimum(c, s, ev);
    return o;
}

inline std::vector<std::string> optimize_columns() {
    return {"config_hash", "seed",     "candidates", "scenario", "rule",     "K",          "axis",
            "value",       "method",   "xi_fc",      "xi_r",     "error",    "raw_xi_fc",  "raw_xi_r",
            "surrogate",   "infeasible", "box_r_lo", "box_r_hi", "box_fc_lo", "box_fc_hi"};
}

inline void optimize_rows(CsvWriter& csv, const ExperimentConfig& c, const Setup& s, const Optimum& o,
                          const std::string& axis, const std::string& value) {
    const std::string hash = config_hash(c);
    const bool joint = c.scenario == Scenario::noisy;
    auto base = [&](const char* method) {
        return std::vector<std::string>{hash, std::to_string(c.seed), std::to_string(c.candidates),
                                        scenario_name(c.scenario), s.rule.name(), std::to_string(s.rule.k), axis,
                                        value, method};
    };
    auto box = [&](const FeasibleBox& b, std::vector<std::string>& r) {
        r.push_back(fmt(b.xi_r_lo));
        r.push_back(fmt(b.xi_r_hi));
        r.push_back(b.has_fc ? fmt(b.xi_fc_lo) : "");
        r.push_back(b.has_fc ? fmt(b.xi_fc_hi) : "");
    };
    {
        auto r = base("exhaustive");
        r.insert(r.end(), {joint ? std::to_string(*o.exhaustive.rounded_xi_fc) : "",
                           std::to_string(o.exhaustive.rounded_xi_r), fmt(o.exhaustive.rounded_error), "", "", "",
                           "0", "", "", "", ""});
        csv.row(r);
    }
    {
        const Solution& v = o.convex;
        // An empty box falls back to the exhaustive search and is tagged so.
        auto r = base(method_name(v.method));
        r.insert(r.end(), {joint ? std::to_string(*v.rounded_xi_fc) : "", std::to_string(v.rounded_xi_r),
                           fmt(v.rounded_error), v.infeasible || !joint ? "" : fmt(*v.xi_fc),
                           v.infeasible ? "" : fmt(v.xi_r), v.infeasible ? "" : fmt(v.objective),
                           v.infeasible ? "1" : "0"});
        box(v.box, r);
        csv.row(r);
    }
    if (o.per_sequence) {
        auto r = base("per_sequence");
        r.insert(r.end(), {"", "", fmt(o.per_sequence->rounded_error), "", "", "",
                           std::to_string(o.per_sequence->candidates_checked), "", "", "", ""});
        csv.row(r);
    }
}

inline void run_optimize(const ExperimentConfig& c, std::ostream& out) {
    validate(c);
    CsvWriter csv(out, optimize_columns());
    for (const auto& rule : c.rules) {
        const Setup s = make_setup(c, rule);
        optimize_rows(csv, c, s, optimize(c, s), "", "");
    }
}

inline void run_evaluate(const ExperimentConfig& c, std::ostream& out) {
    validate(c);
    const bool joint = c.scenario == Scenario::noisy;
    CsvWriter csv(out, {"config_hash", "seed", "candidates", "scenario", "rule", "K", "method", "xi_fc", "xi_r",
                        "q_md", "q_fa", "q_fc", "surrogate"});
    const std::string hash = config_hash(c);
    for (const auto& rule : c.rules) {
        const Setup s = make_setup(c, rule);
        const ExactEvaluator ev = make_evaluator(c, s);
        const IntegerGrid g = default_grid(ev.stats(), c.scenario);
        const auto [r_lo, r_hi] = c.evaluate.xi_r.value_or(std::pair{g.r_lo, g.r_hi});
        const auto [f_lo, f_hi] = joint ? c.evaluate.xi_fc.value_or(std::pair{g.fc_lo, g.fc_hi}) : std::pair{0L, 0L};
        for (long r = r_lo; r <= r_hi; ++r)
            for (long f = f_lo; f <= f_hi; ++f) {
                const ErrorReport rep = ev.report(r, f);
                const double sur = averaged_surrogate(static_cast<double>(r), static_cast<double>(f), ev.stats(),
                                                      s.rule, c.scenario, s.params.p1);
                csv.row({hash, std::to_string(c.seed), std::to_string(c.candidates), scenario_name(c.scenario),
                         s.rule.name(), std::to_string(s.rule.k), "exact", joint ? std::to_string(f) : "",
                         std::to_string(r), fmt(rep.average.q_md), fmt(rep.average.q_fa), fmt(rep.average.q_fc),
                         fmt(sur)});
            }
    }
}

inline void run_simulate(const ExperimentConfig& c, std::ostream& out) {
    validate(c);
    SimOptions opts;
    opts.sim_dt = c.simulate.sim_dt;
    opts.truncate = c.simulate.truncate;
    try {
        validate_schedule(c.params, opts);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("simulate.sim_dt", e.what());
    }
    const bool joint = c.scenario == Scenario::noisy;
    CsvWriter csv(out, {"config_hash", "seed", "candidates", "scenario", "rule", "K", "method", "xi_fc", "xi_r",
                        "trials", "samples", "errors", "q_hat", "ci_halfwidth", "std_error", "analytic"});
    const std::string hash = config_hash(c);
    for (const auto& rule : c.rules) {
        const Setup s = make_setup(c, rule);
        const ExactEvaluator ev = make_evaluator(c, s);
        Thresholds th;
        if (c.simulate.xi_r && (!joint || c.simulate.xi_fc)) {
            th.xi_r = *c.simulate.xi_r;
            th.xi_fc = c.simulate.xi_fc.value_or(1);
        } else {
            const Solution best = exhaustive_optimal(ev, default_grid(ev.stats(), c.scenario), joint);
            th.xi_r = c.simulate.xi_r.value_or(best.rounded_xi_r);
            th.xi_fc = c.simulate.xi_fc.value_or(best.rounded_xi_fc.value_or(1));
        }
        SimulationConfig sc{s.topology, s.params, s.rule, th, c.scenario, opts, {}};
        const ErrorEstimate e = estimate_error(sc, c.simulate.trials, c.seed, c.threads);
        csv.row({hash, std::to_string(c.seed), std::to_string(c.candidates), scenario_name(c.scenario),
                 s.rule.name(), std::to_string(s.rule.k), "simulation", joint ? std::to_string(th.xi_fc) : "",
                 std::to_string(th.xi_r), std::to_string(e.trials), std::to_string(e.samples),
                 std::to_string(e.errors), fmt(e.q_hat), fmt(e.ci_halfwidth), fmt(e.std_error),
                 fmt(ev(th.xi_r, th.xi_fc))});
    }
}

// Topology and channel for one sweep point.
inline ExperimentConfig sweep_point(const ExperimentConfig& c, double value) {
    ExperimentConfig p = c;
    const SweepSpec& sw = c.sweep;
    if (sw.axis == "K" || sw.axis == "k_fixed_volume") {
        if (value != std::floor(value) || value < 1.0)
            throw ConfigError("sweep.values", "receiver counts must be positive integers");
        const auto k = static_cast<std::size_t>(value);
        std::vector<Vec3> pool = c.topology.rx;
        // Positions taken from the reference layout extend to its full six.
        const auto& ref = presets::reference_rx_positions();
        if (pool.size() <= ref.size() && std::equal(pool.begin(), pool.end(), ref.begin(), [](const Vec3& a, const Vec3& b) {
                return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z) < 1e-12;
            }))
            pool.assign(ref.begin(), ref.end());
        if (k > pool.size())
            throw ConfigError("topology.rx_um", "sweep needs " + std::to_string(k) + " receiver positions");
        p.topology.rx.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        p.params.sk = sw.rx_budget / static_cast<double>(k);
        if (k == 1 && sw.single_link_baseline) p.params.s0 = sw.single_link_s0;
        if (sw.axis == "k_fixed_volume")
            p.topology.rx_radius = sw.volume_radius_um * presets::um * std::cbrt(sw.volume_count / static_cast<double>(k));
        return p;
    }
    if (sw.axis == "r_fc") {
        if (!(value > 0.0)) throw ConfigError("sweep.values", "FC radii must be positive");
        p.topology.fc_radius = value * presets::um;
        return p;
    }
    throw ConfigError("sweep.axis", "unknown axis '" + sw.axis + "' (expected K, r_fc or k_fixed_volume)");
}

inline void run_sweep(const ExperimentConfig& c, std::ostream& out) {
    if (c.sweep.values.empty()) throw ConfigError("sweep.values", "no sweep values given");
    std::vector<ExperimentConfig> points;
    for (double v : c.sweep.values) {
        points.push_back(sweep_point(c, v));
        validate(points.back());
    }
    const std::size_t n_rules = c.rules.size();
    std::vector<Setup> setups;
    for (const auto& p : points)
        for (const auto& rule : c.rules) setups.push_back(make_setup(p, rule));
    std::vector<Optimum> results(setups.size());
    parallel_for(setups.size(), c.threads, [&](std::size_t i) {
        ExperimentConfig p = points[i / n_rules];
        p.threads = 1;
        results[i] = optimize(p, setups[i]);
    });
    CsvWriter csv(out, optimize_columns());
    for (std::size_t i = 0; i < setups.size(); ++i)
        optimize_rows(csv, c, setups[i], results[i], c.sweep.axis, fmt(c.sweep.values[i / n_rules]));
}

// Line (1-based) of the first occurrence of a dotted key path in the source.
inline int locate(const std::string& text, const std::string& path) {
    std::size_t pos = 0;
    std::stringstream ss(path);
    std::string key;
    bool found = false;
    while (std::getline(ss, key, '.')) {
        const std::size_t at = text.find("\"" + key + "\"", pos);
        if (at == std::string::npos) break;
        pos = at;
        found = true;
    }
    if (!found) return 0;
    int line = 1;
    for (std::size_t i = 0; i < pos; ++i) line += text[i] == '\n';
    return line;
}

}  // namespace mcfusion::cli
