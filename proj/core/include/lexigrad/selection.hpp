#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lexigrad/data.hpp"
#include "lexigrad/nn.hpp"
#include "lexigrad/rng.hpp"

namespace lexigrad {

// modified: all survivors failing a case ends the event with a uniform pick;
// original: they all survive and the walk continues.
enum class SelectionMode { Modified, Original };

enum class Termination { SingleSurvivor, AllFailRandom, ExhaustedRandom };

const char* selection_mode_name(SelectionMode mode);
const char* termination_name(Termination t);

struct SelectionOutcome {
    int selected = -1;
    std::int64_t cases_consumed = 0;
    Termination termination = Termination::SingleSurvivor;
    std::vector<int> survivor_trace;  // survivor count after each consumed case
};

// Correctness of candidate models on dataset cases (argmax prediction equals
// label), evaluated on normalized, never-augmented samples. Row-major
// [candidate][case]; 1 = correct. Candidate rows are independent, so the
// evaluation may fan out across workers without affecting results.
std::vector<std::uint8_t> batched_correctness(const std::vector<const ModelState*>& candidates,
                                              std::span<const std::int64_t> cases, const Dataset& ds,
                                              int workers = 1);

// Lazily evaluated, cached (candidate, case) correctness: each pair is
// evaluated at most once per selection event.
class CorrectnessCache {
public:
    using BlockFn = std::function<std::vector<std::uint8_t>(std::span<const int> candidates,
                                                            std::span<const std::int64_t> cases)>;

    CorrectnessCache(int num_candidates, std::int64_t num_cases, BlockFn fn);

    // batch-evaluate any still-unknown pairs in candidates x cases
    void ensure(std::span<const int> candidates, std::span<const std::int64_t> cases);
    bool correct(int candidate, std::int64_t case_index);

    std::int64_t evaluation_count() const { return evaluations_; }
    int num_candidates() const { return num_candidates_; }
    std::int64_t num_cases() const { return num_cases_; }

    // per-candidate mean correctness over every case (fills the cache)
    std::vector<double> full_accuracies();

private:
    int num_candidates_;
    std::int64_t num_cases_;
    BlockFn fn_;
    std::vector<std::uint8_t> state_;  // 0 unknown, 1 correct, 2 incorrect
    std::int64_t evaluations_ = 0;

    std::uint8_t& at(int candidate, std::int64_t case_index) {
        return state_[static_cast<std::size_t>(candidate) * static_cast<std::size_t>(num_cases_) +
                      static_cast<std::size_t>(case_index)];
    }
};

CorrectnessCache make_model_correctness(const std::vector<const ModelState*>& candidates,
                                        const Dataset& ds, std::int64_t num_cases, int workers = 1);

// Walks the shuffled case sequence, keeping only survivors correct on each
// case; window_size controls evaluation batching only and never changes the
// outcome. rng is consumed solely for the terminal uniform pick.
SelectionOutcome lexicase_select(CorrectnessCache& cache, std::span<const int> pool,
                                 const CaseSequence& seq, Rng& rng, SelectionMode mode,
                                 std::int64_t window_size = 32);

// Full-population argmax of training accuracy; exact ties uniform at random.
int tournament_select(std::span<const double> accuracies, Rng& rng);

// Uniform pick.
int random_select(std::size_t pool_size, Rng& rng);

// Structured per-event log line; survivor trace capped at trace_cap entries.
std::string selection_event_json(const std::string& strategy, SelectionMode mode,
                                 const SelectionOutcome& outcome, std::size_t trace_cap);

}  // namespace lexigrad
