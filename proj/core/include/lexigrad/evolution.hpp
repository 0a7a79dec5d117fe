#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lexigrad/data.hpp"
#include "lexigrad/nn.hpp"
#include "lexigrad/optim.hpp"
#include "lexigrad/selection.hpp"

namespace lexigrad {

enum class Strategy { SgdBaseline, Random, Tournament, Lexicase };

const char* strategy_name(Strategy s);

// Seed-stream tags. Every random stream is derived independently from
// (run seed, generation, tag), never drawn from shared generator state, so
// trajectories are reproducible and independent of scheduling. Public so
// external reimplementations of the training loop can match them.
namespace stream {
constexpr std::uint64_t kInit = 0x1A17;
constexpr std::uint64_t kPartition = 0x9A47;
constexpr std::uint64_t kSelection = 0x5E1E;
constexpr std::uint64_t kCandidate = 0xCA4D;

inline std::uint64_t init_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kInit); }
inline std::uint64_t partition_seed(std::uint64_t run_seed, std::int64_t generation) {
    return derive_seed(run_seed, kPartition, static_cast<std::uint64_t>(generation));
}
inline std::uint64_t selection_seed(std::uint64_t run_seed, std::int64_t generation) {
    return derive_seed(run_seed, kSelection, static_cast<std::uint64_t>(generation));
}
inline std::uint64_t candidate_seed(std::uint64_t run_seed, std::int64_t generation, std::int64_t i) {
    return derive_seed(derive_seed(run_seed, kCandidate, static_cast<std::uint64_t>(generation)),
                       static_cast<std::uint64_t>(i));
}
}  // namespace stream

// One population member; owns its optimizer state and private rng stream.
struct Candidate {
    int id = 0;
    ModelState model;
    OptimizerState opt;
    std::uint64_t rng_seed = 0;
};

struct RunConfig {
    std::int64_t population = 4;
    std::int64_t generations = 20;
    Strategy strategy = Strategy::Lexicase;
    MomentumPolicy momentum_policy = MomentumPolicy::ResetEachGeneration;
    double momentum = 0.9;
    double lr_max = 0.1;
    double lr_min = 0.0;
    double weight_decay = 0.0;  // off by default
    std::int64_t batch_size = 128;
    std::uint64_t seed = 1;
    SelectionMode selection_mode = SelectionMode::Modified;
    std::int64_t selection_case_cap = 0;  // 0 = full training set
    std::int64_t selection_window = 32;
    AugmentConfig augment;
    int workers = 1;
    std::size_t trace_cap = 64;
    bool record_consumed_indices = false;

    std::string model = "mlp-small";  // mlp-small | conv-small
    std::int64_t mlp_hidden = 32;

    DataSpec data;

    bool operator==(const RunConfig&) const = default;
};

struct GenerationRecord {
    std::int64_t generation = 0;
    int selected = 0;
    std::vector<double> train_accuracy;            // per candidate, over the selection eval set
    std::int64_t cases_consumed = 0;
    std::string termination;                       // "-" for non-lexicase strategies
    std::vector<std::int64_t> steps_per_candidate;
    double lr_last = 0.0;
    double wall_ms = 0.0;
    std::string selection_json;
    std::vector<std::vector<std::int64_t>> consumed_indices;  // filled only on request
};

std::string generation_record_json(const GenerationRecord& rec);

// Step-parity budget: G = epochs * p gives the selected lineage the same
// number of optimizer updates as an epochs-long single-model run. The
// plus-one rule G = epochs * (p + 1) is the alternative preset.
enum class BudgetRule { StepParity, PlusOne };
std::int64_t budget_generations(std::int64_t epochs, std::int64_t p, BudgetRule rule);

// Cosine horizon covering the whole run: generations * steps-per-generation
// of the largest subset.
LrSchedule make_schedule(const RunConfig& cfg, std::int64_t train_size, std::int64_t total_generations);

std::int64_t effective_population(const RunConfig& cfg);
std::int64_t eval_case_count(const RunConfig& cfg, std::int64_t train_size);

// Builds and initializes the configured reference model for this dataset.
ModelState build_model(const RunConfig& cfg, const Dataset& ds);

// p copies of the parent with derived private seeds; optimizer state per the
// momentum policy.
std::vector<Candidate> clone_parent(const Candidate& parent, std::int64_t p, MomentumPolicy policy,
                                    double momentum, std::uint64_t run_seed, std::int64_t generation);

struct GenerationResult {
    Candidate parent;
    GenerationRecord record;
};

// One generation: clone -> one training pass per candidate over its own
// partition subset -> parent selection on the un-augmented normalized
// training set.
GenerationResult run_generation(const Candidate& parent, const RunConfig& cfg, const Dataset& train,
                                const LrSchedule& sched, std::int64_t generation);

struct TrainingResult {
    Candidate parent;
    std::vector<GenerationRecord> records;
    LrSchedule schedule;
};

using MetricsSink = std::function<void(const GenerationRecord&)>;

// Full run: initialize (or resume), iterate generations, return the final
// parent. Checkpoint writing is the caller's responsibility.
TrainingResult run_training(const RunConfig& cfg, const Dataset& train, const MetricsSink& sink = {},
                            const Candidate* resume_from = nullptr, std::int64_t start_generation = 0);

}  // namespace lexigrad
