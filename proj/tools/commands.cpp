#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lexigrad/analysis.hpp"
#include "lexigrad/checkpoint.hpp"

namespace fs = std::filesystem;

namespace lexigrad::cli {

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// run + artifacts for one configuration; everything lands under dir
struct RunOutput {
    TrainingResult result;
    EvalReport test_report;
};

RunOutput execute_run(const RunConfig& cfg, const TrainTest& data, const fs::path& dir,
                      const Candidate* resume = nullptr, std::int64_t start_generation = 0) {
    fs::create_directories(dir);
    std::ofstream metrics(dir / "metrics.jsonl", std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write " + (dir / "metrics.jsonl").string());

    RunOutput out;
    out.result = run_training(
        cfg, data.train, [&](const GenerationRecord& rec) { metrics << generation_record_json(rec) << "\n"; },
        resume, start_generation);

    Checkpoint ckpt;
    ckpt.model = out.result.parent.model;
    ckpt.has_optimizer = true;
    ckpt.opt = out.result.parent.opt;
    ckpt.has_velocity = cfg.momentum_policy == MomentumPolicy::Inherit;
    ckpt.generation = start_generation + cfg.generations;
    save_checkpoint((dir / "model.lxgd").string(), ckpt);

    out.test_report = evaluate(out.result.parent.model, data.test);
    write_text(dir / "eval.json", eval_report_json(out.test_report) + "\n");
    return out;
}

struct SummaryRow {
    std::string label;
    std::vector<double> accuracies;

    double mean() const {
        double s = 0.0;
        for (double a : accuracies) s += a;
        return s / static_cast<double>(accuracies.size());
    }
    // sample standard deviation; 0 for a single replicate
    double stddev() const {
        if (accuracies.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double a : accuracies) s += (a - m) * (a - m);
        return std::sqrt(s / static_cast<double>(accuracies.size() - 1));
    }
};

void write_summary(const fs::path& dir, const std::string& key_column,
                   const std::vector<SummaryRow>& rows) {
    std::ostringstream csv;
    csv << key_column << ",replicates,acc_mean,acc_std\n";
    csv.precision(17);
    for (const auto& row : rows)
        csv << row.label << "," << row.accuracies.size() << "," << row.mean() << "," << row.stddev()
            << "\n";
    write_text(dir / "summary.csv", csv.str());

    std::cout << "\n" << key_column << "          acc.     std.     n\n";
    for (const auto& row : rows) {
        std::printf("%-16s %7.4f  %7.4f  %2zu\n", row.label.c_str(), row.mean(), row.stddev(),
                    row.accuracies.size());
    }
    std::cout.flush();
}

void warn_single_replicate(std::size_t n) {
    if (n < 2) std::cerr << "warning: single replicate, std reported as 0\n";
}

}  // namespace

int cmd_train(const TrainArgs& args) {
    const ExperimentSpec& spec = args.spec;
    RunConfig cfg = spec.run;
    cfg.generations = spec.resolved_generations(effective_population(cfg));

    const fs::path dir(spec.out_dir);
    fs::create_directories(dir);
    write_text(dir / "config.txt", render_config(spec));

    const TrainTest data = load_dataset(cfg.data);

    Candidate resume_parent;
    const Candidate* resume = nullptr;
    std::int64_t start_generation = 0;
    if (!args.resume.empty()) {
        Checkpoint ckpt = load_checkpoint(args.resume);
        validate_model(ckpt.model, data.train.sample_shape());
        resume_parent.model = std::move(ckpt.model);
        if (ckpt.has_velocity) {
            resume_parent.opt = std::move(ckpt.opt);
        } else {
            const double mu = cfg.momentum_policy == MomentumPolicy::NoMomentum ? 0.0 : cfg.momentum;
            resume_parent.opt = OptimizerState::zeros_like(resume_parent.model, mu);
            if (ckpt.has_optimizer) resume_parent.opt.step_counter = ckpt.opt.step_counter;
        }
        start_generation = ckpt.generation;
        resume = &resume_parent;
        std::cout << "resuming from " << args.resume << " at generation " << start_generation << "\n";
    }

    const RunOutput out = execute_run(cfg, data, dir, resume, start_generation);
    std::cout << "trained " << cfg.generations << " generations of " << strategy_name(cfg.strategy)
              << " on " << data.train.name << "; test accuracy " << out.test_report.accuracy << "\n";
    return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
    const TrainTest data = load_dataset(args.spec.run.data);
    const Dataset& split = args.split == "train" ? data.train : data.test;
    if (args.split != "train" && args.split != "test")
        throw ConfigError("unknown split \"" + args.split + "\" (want train or test)");

    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    const EvalReport rep = evaluate(ckpt.model, split);
    std::cout << eval_report_json(rep) << "\n";
    if (!args.spec.out_dir.empty()) {
        fs::create_directories(args.spec.out_dir);
        write_text(fs::path(args.spec.out_dir) / ("eval-" + args.split + ".json"),
                   eval_report_json(rep) + "\n");
    }
    return kExitOk;
}

int cmd_compare(const ExperimentSpec& spec) {
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir);
    write_text(dir / "config.txt", render_config(spec));

    const TrainTest data = load_dataset(spec.run.data);
    const auto seeds = spec.resolved_seeds();
    warn_single_replicate(seeds.size());

    std::vector<SummaryRow> rows;
    for (Strategy strategy : spec.compare_strategies) {
        SummaryRow row;
        row.label = strategy_name(strategy);
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = spec.run;
            cfg.strategy = strategy;
            if (strategy == Strategy::SgdBaseline) cfg.population = 1;
            cfg.seed = seed;
            cfg.generations = spec.resolved_generations(effective_population(cfg));
            const fs::path run_dir = dir / "runs" / (row.label + "-seed" + std::to_string(seed));
            const RunOutput out = execute_run(cfg, data, run_dir);
            row.accuracies.push_back(out.test_report.accuracy);
        }
        rows.push_back(std::move(row));
    }
    write_summary(dir, "strategy", rows);
    return kExitOk;
}

int cmd_sweep_population(const ExperimentSpec& spec) {
    const fs::path dir(spec.out_dir);
    fs::create_directories(dir);
    write_text(dir / "config.txt", render_config(spec));

    const TrainTest data = load_dataset(spec.run.data);
    const auto seeds = spec.resolved_seeds();
    warn_single_replicate(seeds.size());

    std::vector<SummaryRow> rows;
    for (std::int64_t p : spec.sweep_sizes) {
        SummaryRow row;
        row.label = "p=" + std::to_string(p);
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = spec.run;
            cfg.population = p;
            cfg.seed = seed;
            cfg.generations = spec.resolved_generations(p);
            const fs::path run_dir = dir / "runs" / ("p" + std::to_string(p) + "-seed" + std::to_string(seed));
            const RunOutput out = execute_run(cfg, data, run_dir);
            row.accuracies.push_back(out.test_report.accuracy);
        }
        rows.push_back(std::move(row));
    }
    write_summary(dir, "population", rows);
    return kExitOk;
}

int cmd_profile(const ProfileArgs& args) {
    const TrainTest data = load_dataset(args.spec.run.data);
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);

    int layer = args.layer;
    if (layer < 0) {
        layer = default_profile_layer(ckpt.model, data.test.sample_shape());
        if (layer < 0) throw std::runtime_error("model has no layer with spatial feature maps");
    }

    const auto profile =
        activation_profile(ckpt.model, data.test, layer, args.spec.profile_k, args.spec.profile_bins);

    const fs::path dir(args.spec.out_dir);
    fs::create_directories(dir);
    write_profile_csv((dir / "profile.csv").string(), profile);
    write_text(dir / "profile.json", profile_summary_json(profile) + "\n");
    std::cout << profile_summary_json(profile) << "\n";
    return kExitOk;
}

}  // namespace lexigrad::cli
