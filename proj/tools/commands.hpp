#pragma once

#include <string>
#include <vector>

#include "lexigrad/config.hpp"

namespace lexigrad::cli {

// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct TrainArgs {
    ExperimentSpec spec;
    std::string resume;  // checkpoint path, empty = fresh run
};

struct EvalArgs {
    ExperimentSpec spec;
    std::string checkpoint;
    std::string split = "test";  // train | test
};

struct ProfileArgs {
    ExperimentSpec spec;
    std::string checkpoint;
    int layer = -1;  // -1 = last layer with spatial output
};

// train: run, then write config.txt, metrics.jsonl, model.lxgd and eval.json
// under spec.out_dir.
int cmd_train(const TrainArgs& args);

// eval: accuracy report for a checkpoint on the configured dataset split.
int cmd_eval(const EvalArgs& args);

// compare: strategies x replicate seeds; per-run outputs under
// out/runs/<strategy>-seed<seed>/, plus summary.csv and a text table.
int cmd_compare(const ExperimentSpec& spec);

// sweep-pop: lexicase at each population size, same protocol as compare.
int cmd_sweep_population(const ExperimentSpec& spec);

// profile: channel-wise max-pooled activations -> profile.csv, profile.json.
int cmd_profile(const ProfileArgs& args);

}  // namespace lexigrad::cli
