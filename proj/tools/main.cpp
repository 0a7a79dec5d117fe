#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace lexigrad;

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;  // key=value overrides
    std::string out;
    std::string strategy;
    std::string momentum_policy;
    std::string selection_mode;
    std::int64_t seed = -1;
    std::int64_t population = -1;
    std::int64_t workers = -1;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "flat key = value config file");
    cmd->add_option("--set", flags.sets, "extra key=value overrides")->type_name("KEY=VALUE");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--seed", flags.seed, "run seed override");
    cmd->add_option("--workers", flags.workers, "worker threads (must not change results)");
    cmd->add_option("--strategy", flags.strategy, "sgd-baseline | random | tournament | lexicase");
    cmd->add_option("--population", flags.population, "population size");
    cmd->add_option("--momentum-policy", flags.momentum_policy, "none | reset | inherit");
    cmd->add_option("--selection-mode", flags.selection_mode, "modified | original");
}

ExperimentSpec build_spec(const CommonFlags& flags) {
    ExperimentSpec spec;
    if (!flags.config.empty()) spec = parse_config_file(flags.config);
    for (const auto& kv : flags.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
        apply_config_entry(spec, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!flags.out.empty()) spec.out_dir = flags.out;
    if (flags.seed >= 0) spec.run.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.workers > 0) spec.run.workers = static_cast<int>(flags.workers);
    if (!flags.strategy.empty()) spec.run.strategy = parse_strategy(flags.strategy);
    if (flags.population > 0) spec.run.population = flags.population;
    if (!flags.momentum_policy.empty())
        spec.run.momentum_policy = parse_momentum_policy(flags.momentum_policy);
    if (!flags.selection_mode.empty()) spec.run.selection_mode = parse_selection_mode(flags.selection_mode);
    validate_spec(spec);
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"population-based neural network training with lexicase parent selection"};
    app.require_subcommand(1);

    CommonFlags train_flags, eval_flags, compare_flags, sweep_flags, profile_flags;

    auto* train = app.add_subcommand("train", "train one model per the config");
    std::string resume;
    add_common(train, train_flags);
    train->add_option("--resume", resume, "checkpoint to resume from");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    std::string eval_ckpt, eval_split = "test";
    add_common(eval, eval_flags);
    eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--split", eval_split, "train | test");

    auto* compare = app.add_subcommand("compare", "strategies x replicate seeds, summary table");
    add_common(compare, compare_flags);

    auto* sweep = app.add_subcommand("sweep-pop", "population-size sweep");
    std::string sweep_sizes;
    add_common(sweep, sweep_flags);
    sweep->add_option("--sizes", sweep_sizes, "comma-separated population sizes");

    auto* profile = app.add_subcommand("profile", "channel-wise activation profile of a checkpoint");
    std::string profile_ckpt;
    std::int64_t profile_layer = -1, profile_k = -1;
    add_common(profile, profile_flags);
    profile->add_option("--ckpt", profile_ckpt, "checkpoint file")->required();
    profile->add_option("--layer", profile_layer, "layer index (default: last spatial layer)");
    profile->add_option("--k", profile_k, "number of leading test samples");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            cli::TrainArgs args;
            args.spec = build_spec(train_flags);
            args.resume = resume;
            return cli::cmd_train(args);
        }
        if (eval->parsed()) {
            cli::EvalArgs args;
            args.spec = build_spec(eval_flags);
            args.checkpoint = eval_ckpt;
            args.split = eval_split;
            return cli::cmd_eval(args);
        }
        if (compare->parsed()) return cli::cmd_compare(build_spec(compare_flags));
        if (sweep->parsed()) {
            ExperimentSpec spec = build_spec(sweep_flags);
            if (!sweep_sizes.empty()) {
                apply_config_entry(spec, "sweep_sizes", sweep_sizes);
                validate_spec(spec);
            }
            return cli::cmd_sweep_population(spec);
        }
        if (profile->parsed()) {
            cli::ProfileArgs args;
            args.spec = build_spec(profile_flags);
            if (profile_k > 0) args.spec.profile_k = profile_k;
            args.checkpoint = profile_ckpt;
            args.layer = static_cast<int>(profile_layer);
            return cli::cmd_profile(args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitRuntime;
    }
    return cli::kExitConfig;
}
