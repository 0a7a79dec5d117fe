#include "lexigrad/selection.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "lexigrad/parallel.hpp"

namespace lexigrad {

const char* selection_mode_name(SelectionMode mode) {
    return mode == SelectionMode::Modified ? "modified" : "original";
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::SingleSurvivor: return "single-survivor";
        case Termination::AllFailRandom: return "all-fail-random";
        case Termination::ExhaustedRandom: return "exhausted-random";
    }
    return "?";
}

std::vector<std::uint8_t> batched_correctness(const std::vector<const ModelState*>& candidates,
                                              std::span<const std::int64_t> cases, const Dataset& ds,
                                              int workers) {
    if (cases.empty()) return {};
    const Tensor batch = gather_eval_batch(ds, cases);
    const std::vector<int> labels = gather_labels(ds, cases);
    std::vector<std::uint8_t> block(candidates.size() * cases.size(), 0);
    parallel_for(static_cast<std::int64_t>(candidates.size()), workers, [&](std::int64_t c) {
        const auto preds = predict(*candidates[static_cast<std::size_t>(c)], batch);
        std::uint8_t* row = block.data() + static_cast<std::size_t>(c) * cases.size();
        for (std::size_t j = 0; j < cases.size(); ++j) row[j] = preds[j] == labels[j] ? 1 : 0;
    });
    return block;
}

CorrectnessCache::CorrectnessCache(int num_candidates, std::int64_t num_cases, BlockFn fn)
    : num_candidates_(num_candidates),
      num_cases_(num_cases),
      fn_(std::move(fn)),
      state_(static_cast<std::size_t>(num_candidates) * static_cast<std::size_t>(num_cases), 0) {
    if (num_candidates < 1 || num_cases < 1)
        throw std::invalid_argument("correctness cache needs >= 1 candidate and case");
}

void CorrectnessCache::ensure(std::span<const int> candidates, std::span<const std::int64_t> cases) {
    bool all_unknown = true;
    for (int c : candidates) {
        for (auto k : cases) {
            if (at(c, k) != 0) {
                all_unknown = false;
                break;
            }
        }
        if (!all_unknown) break;
    }
    if (all_unknown) {
        const auto block = fn_(candidates, cases);
        for (std::size_t ci = 0; ci < candidates.size(); ++ci)
            for (std::size_t ki = 0; ki < cases.size(); ++ki)
                at(candidates[ci], cases[ki]) = block[ci * cases.size() + ki] ? 1 : 2;
        evaluations_ += static_cast<std::int64_t>(candidates.size() * cases.size());
        return;
    }
    // partially known: evaluate per candidate on its unknown cases only
    std::vector<std::int64_t> missing;
    for (int c : candidates) {
        missing.clear();
        for (auto k : cases)
            if (at(c, k) == 0) missing.push_back(k);
        if (missing.empty()) continue;
        const int one[1] = {c};
        const auto block = fn_(std::span<const int>(one, 1), missing);
        for (std::size_t ki = 0; ki < missing.size(); ++ki) at(c, missing[ki]) = block[ki] ? 1 : 2;
        evaluations_ += static_cast<std::int64_t>(missing.size());
    }
}

bool CorrectnessCache::correct(int candidate, std::int64_t case_index) {
    auto& cell = at(candidate, case_index);
    if (cell == 0) {
        const int one[1] = {candidate};
        const std::int64_t k[1] = {case_index};
        const auto block = fn_(std::span<const int>(one, 1), std::span<const std::int64_t>(k, 1));
        cell = block[0] ? 1 : 2;
        ++evaluations_;
    }
    return cell == 1;
}

std::vector<double> CorrectnessCache::full_accuracies() {
    std::vector<int> cands(static_cast<std::size_t>(num_candidates_));
    std::iota(cands.begin(), cands.end(), 0);
    std::vector<std::int64_t> cases(static_cast<std::size_t>(num_cases_));
    std::iota(cases.begin(), cases.end(), 0);
    ensure(cands, cases);
    std::vector<double> acc(static_cast<std::size_t>(num_candidates_), 0.0);
    for (int c = 0; c < num_candidates_; ++c) {
        std::int64_t hits = 0;
        for (std::int64_t k = 0; k < num_cases_; ++k)
            if (at(c, k) == 1) ++hits;
        acc[static_cast<std::size_t>(c)] = static_cast<double>(hits) / static_cast<double>(num_cases_);
    }
    return acc;
}

CorrectnessCache make_model_correctness(const std::vector<const ModelState*>& candidates,
                                        const Dataset& ds, std::int64_t num_cases, int workers) {
    return CorrectnessCache(
        static_cast<int>(candidates.size()), num_cases,
        [&candidates, &ds, workers](std::span<const int> cand_ids, std::span<const std::int64_t> cases) {
            std::vector<const ModelState*> models;
            models.reserve(cand_ids.size());
            for (int c : cand_ids) models.push_back(candidates[static_cast<std::size_t>(c)]);
            return batched_correctness(models, cases, ds, workers);
        });
}

SelectionOutcome lexicase_select(CorrectnessCache& cache, std::span<const int> pool,
                                 const CaseSequence& seq, Rng& rng, SelectionMode mode,
                                 std::int64_t window_size) {
    if (pool.empty()) throw std::invalid_argument("selection pool must be nonempty");
    if (seq.order.empty()) throw std::invalid_argument("case sequence must be nonempty");
    if (window_size < 1) throw std::invalid_argument("window size must be >= 1");

    SelectionOutcome out;
    std::vector<int> survivors(pool.begin(), pool.end());
    if (survivors.size() == 1) {
        out.selected = survivors[0];
        out.cases_consumed = 0;
        out.termination = Termination::SingleSurvivor;
        return out;
    }

    const std::int64_t n = static_cast<std::int64_t>(seq.order.size());
    std::vector<int> keep;
    for (std::int64_t pos = 0; pos < n; pos += window_size) {
        const std::int64_t end = std::min(n, pos + window_size);
        const std::span<const std::int64_t> window(seq.order.data() + pos,
                                                   static_cast<std::size_t>(end - pos));
        cache.ensure(survivors, window);
        for (std::int64_t k = pos; k < end; ++k) {
            const std::int64_t case_index = seq.order[static_cast<std::size_t>(k)];
            keep.clear();
            for (int c : survivors)
                if (cache.correct(c, case_index)) keep.push_back(c);
            ++out.cases_consumed;
            if (keep.empty()) {
                if (mode == SelectionMode::Modified) {
                    out.survivor_trace.push_back(static_cast<int>(survivors.size()));
                    out.termination = Termination::AllFailRandom;
                    out.selected = survivors[rng.bounded(survivors.size())];
                    return out;
                }
                // original semantics: equal-best (all failing) survivors all stay
            } else {
                survivors = keep;
            }
            out.survivor_trace.push_back(static_cast<int>(survivors.size()));
            if (survivors.size() == 1) {
                out.termination = Termination::SingleSurvivor;
                out.selected = survivors[0];
                return out;
            }
        }
    }
    out.termination = Termination::ExhaustedRandom;
    out.selected = survivors[rng.bounded(survivors.size())];
    return out;
}

int tournament_select(std::span<const double> accuracies, Rng& rng) {
    if (accuracies.empty()) throw std::invalid_argument("accuracy list must be nonempty");
    double best = accuracies[0];
    for (double a : accuracies) best = std::max(best, a);
    std::vector<int> ties;
    for (std::size_t i = 0; i < accuracies.size(); ++i)
        if (accuracies[i] == best) ties.push_back(static_cast<int>(i));
    return ties[rng.bounded(ties.size())];
}

int random_select(std::size_t pool_size, Rng& rng) {
    if (pool_size == 0) throw std::invalid_argument("pool must be nonempty");
    return static_cast<int>(rng.bounded(pool_size));
}

std::string selection_event_json(const std::string& strategy, SelectionMode mode,
                                 const SelectionOutcome& outcome, std::size_t trace_cap) {
    nlohmann::json j;
    j["strategy"] = strategy;
    j["mode"] = selection_mode_name(mode);
    j["selected"] = outcome.selected;
    j["cases_consumed"] = outcome.cases_consumed;
    j["termination"] = termination_name(outcome.termination);
    std::vector<int> trace = outcome.survivor_trace;
    const bool truncated = trace.size() > trace_cap;
    if (truncated) trace.resize(trace_cap);
    j["survivor_trace"] = trace;
    j["trace_truncated"] = truncated;
    return j.dump();
}

}  // namespace lexigrad
