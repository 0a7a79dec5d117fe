#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lexigrad/evolution.hpp"

namespace lexigrad {

// Invalid or unknown configuration; the CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parsed run configuration plus experiment-protocol fields (replicates,
// output directory, compare/sweep lists). Echoed verbatim into the output
// directory; render_config(parse(...)) round-trips to an identical spec.
//
// hflip_prob starts at the auto sentinel (-1): validate_spec resolves it to
// 0.5 for photographic sources (cifar10) and 0 for digit-like and synthetic
// data, where mirroring changes the semantics.
struct ExperimentSpec {
    static RunConfig default_run() {
        RunConfig run;
        run.augment.hflip_prob = -1.0;  // auto
        return run;
    }

    RunConfig run = default_run();
    std::string out_dir = "runs/out";
    std::int64_t replicates = 3;
    std::vector<std::uint64_t> replicate_seeds;  // empty: seed, seed+1, ...
    std::vector<Strategy> compare_strategies{Strategy::SgdBaseline, Strategy::Lexicase};
    std::vector<std::int64_t> sweep_sizes{2, 4, 6, 8};
    std::int64_t profile_k = 100;
    int profile_bins = 50;
    std::int64_t epochs = 0;  // when > 0, generations = budget rule applied to epochs
    BudgetRule budget = BudgetRule::StepParity;

    bool operator==(const ExperimentSpec&) const = default;

    // generations after applying the epoch budget, and the seed list after
    // applying the replicate default
    std::int64_t resolved_generations(std::int64_t population) const;
    std::vector<std::uint64_t> resolved_seeds() const;
};

ExperimentSpec parse_config_text(const std::string& text, const std::string& source_name);
ExperimentSpec parse_config_file(const std::string& path);

// One "key = value" assignment (also used for command-line overrides).
// Throws ConfigError naming the key when unknown or malformed.
void apply_config_entry(ExperimentSpec& spec, const std::string& key, const std::string& value);

// Range checks; coerces population to 1 for sgd-baseline. Called by the
// parser and again after command-line overrides.
void validate_spec(ExperimentSpec& spec);

// Full echo of every key; parses back to an identical spec.
std::string render_config(const ExperimentSpec& spec);

Strategy parse_strategy(const std::string& s);
MomentumPolicy parse_momentum_policy(const std::string& s);
SelectionMode parse_selection_mode(const std::string& s);
DataSpec::Source parse_source(const std::string& s);
const char* source_name(DataSpec::Source s);

}  // namespace lexigrad
