// mcfusion: evaluate, optimize, simulate and sweep cooperative diffusive
// receivers with hard-decision fusion. Results are CSV on stdout or --out.
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "experiment.hpp"

namespace {

using namespace mcfusion;
using namespace mcfusion::cli;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string rule;
    std::string scenario;
    std::optional<std::size_t> trials;
    std::optional<unsigned> candidates;
    std::optional<unsigned> threads;
    std::string axis;
    std::string values;
    std::string preset;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "JSON experiment configuration");
    sub->add_option("--seed", f.seed, "master seed");
    sub->add_option("--out", f.out, "output CSV path (default: stdout)");
    sub->add_option("--rule", f.rule, "or | and | majority | n-of-k:N");
    sub->add_option("--scenario", f.scenario, "perfect | noisy");
    sub->add_option("--trials", f.trials, "Monte Carlo trials")->check(CLI::Range(std::size_t{100}, std::size_t{1} << 40));
    sub->add_option("--candidates", f.candidates, "candidate draws R for the noisy exact evaluator")
        ->check(CLI::PositiveNumber);
    sub->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Flags override the file; the file overrides built-in defaults.
ExperimentConfig load(const Flags& f, const std::string& text) {
    ExperimentConfig c = text.empty() ? default_config() : config_from_json(json::parse(text));
    if (f.seed) c.seed = *f.seed;
    if (!f.rule.empty()) c.rules = {f.rule};
    if (!f.scenario.empty()) {
        try {
            c.scenario = parse_scenario(f.scenario);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("scenario", e.what());
        }
    }
    if (f.trials) c.simulate.trials = *f.trials;
    if (f.candidates) c.candidates = *f.candidates;
    if (f.threads) c.threads = *f.threads;
    if (!f.axis.empty()) c.sweep.axis = f.axis;
    if (!f.values.empty()) {
        try {
            c.sweep.values = parse_values(f.values);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("sweep.values", e.what());
        }
    }
    return c;
}

ExperimentConfig table3(const Flags& f) {
    ExperimentConfig c = default_config();
    c.scenario = Scenario::noisy;
    if (f.seed) c.seed = *f.seed;
    if (f.candidates) c.candidates = *f.candidates;
    if (f.threads) c.threads = *f.threads;
    if (!f.rule.empty()) c.rules = {f.rule};
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Threshold analysis for cooperative diffusive receivers with hard-decision fusion"};
    app.require_subcommand(1);
    Flags f;

    auto* evaluate = app.add_subcommand("evaluate", "exact expected error over a threshold grid");
    auto* optimize = app.add_subcommand("optimize", "exhaustive and convex optimal thresholds");
    auto* simulate = app.add_subcommand("simulate", "particle-based Monte Carlo error estimate");
    auto* sweep = app.add_subcommand("sweep", "optimal thresholds along a parameter axis");
    auto* preset = app.add_subcommand("preset", "named experiments: table3, defaults");
    for (auto* sub : {evaluate, optimize, simulate, sweep, preset}) add_common(sub, f);
    sweep->add_option("--axis", f.axis, "K | r_fc | k_fixed_volume");
    sweep->add_option("--values", f.values, "comma list or inclusive integer range a..b");
    preset->add_option("name", f.preset, "preset name")->required()->check(CLI::IsMember({"table3", "defaults"}));

    CLI11_PARSE(app, argc, argv);

    std::string text;
    try {
        if (!f.config.empty()) text = read_file(f.config);
        std::ofstream file;
        if (!f.out.empty()) {
            file.open(f.out, std::ios::binary);
            if (!file) throw std::runtime_error("cannot write " + f.out);
        }
        std::ostream& out = f.out.empty() ? std::cout : file;

        if (preset->parsed()) {
            if (f.preset == "defaults") {
                out << config_to_json(default_config()).dump(2) << '\n';
            } else {
                run_optimize(table3(f), out);
            }
            return 0;
        }
        const ExperimentConfig c = load(f, text);
        if (evaluate->parsed()) run_evaluate(c, out);
        if (optimize->parsed()) run_optimize(c, out);
        if (simulate->parsed()) run_simulate(c, out);
        if (sweep->parsed()) run_sweep(c, out);
    } catch (const json::parse_error& e) {
        // byte is the 1-based offset of the offending character.
        int line = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) line += text[i] == '\n';
        std::cerr << f.config << ":" << line << ": invalid JSON: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        const int line = locate(text, e.path());
        std::cerr << (f.config.empty() ? "<command line>" : f.config);
        if (line > 0) std::cerr << ":" << line;
        std::cerr << ": " << e.path() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
