#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "fsleval/learners.hpp"
#include "fsleval/task_model.hpp"

namespace fsleval {

// Anything whose accuracy can be measured on a task. Two families: real
// adapted learners (need sampled episodes) and analytic per-class-accuracy
// tables (task accuracy = mean of the table over the tuple's classes, which
// also admits exact task-free subset accuracies for brute-force oracles).
class Evaluatable {
public:
    virtual ~Evaluatable() = default;

    // True when subset_accuracy() returns the exact expected accuracy over
    // uniform tuples from the subset, with no task sampling.
    virtual bool exact() const { return false; }
    virtual double subset_accuracy(const std::vector<int>& subset) const;

    virtual bool needs_episodes() const = 0;
    // episode is null when neither evaluatable in an experiment needs one.
    virtual double task_accuracy(const ClassTuple& tuple,
                                 const Episode* episode) const = 0;
};

class AnalyticEvaluatable : public Evaluatable {
public:
    explicit AnalyticEvaluatable(std::map<int, double> class_acc);
    bool exact() const override { return true; }
    double subset_accuracy(const std::vector<int>& subset) const override;
    bool needs_episodes() const override { return false; }
    double task_accuracy(const ClassTuple& tuple, const Episode*) const override;

private:
    std::map<int, double> acc_;
};

class LearnerEvaluatable : public Evaluatable {
public:
    LearnerEvaluatable(LearnerKind kind, EmbeddingParams params);
    bool needs_episodes() const override { return true; }
    double task_accuracy(const ClassTuple& tuple,
                         const Episode* episode) const override;

private:
    LearnerKind kind_;
    EmbeddingParams params_;
};

struct FlipConfig {
    std::vector<int> large_set;  // C_L
    int subset_size = 1;         // m = |C_N|
    int repeats = 1;             // R (ignored when exhaustive_subsets)
    int tasks_per_eval = 1;      // T (ignored when both evaluatables are exact)
    double epsilon = 0.0;        // caller-asserted true gap
    double delta = 0.0;          // exaggeration margin
    EpisodeSpec spec;
    bool exhaustive_subsets = false;  // enumerate all C(L,m) subsets instead of sampling
    std::uint64_t seed = 0;
};

struct FlipReport {
    double flip_freq = 0.0;          // fraction of subsets with gap < 0
    double exaggeration_freq = 0.0;  // fraction with gap > epsilon + delta
    std::vector<double> gap_samples;
    double true_gap = 0.0;
};

// Mean accuracy over t_large uniform tasks from large_set (the full-scale
// protocol uses t_large = 20000). universe may be null for analytic
// evaluatables.
double true_performance(const Evaluatable& evaluatable,
                        const std::vector<int>& large_set, const EpisodeSpec& spec,
                        int t_large, const ClassUniverse* universe,
                        std::uint64_t seed);

// Per repeat: draw an m-subset of C_L uniformly without replacement, measure
// both evaluatables on the same tasks (paired), record the accuracy gap.
// Exact evaluatable pairs skip task sampling entirely. With
// exhaustive_subsets, every m-subset is visited once in lexicographic order.
FlipReport flip_experiment(const Evaluatable& eval_1, const Evaluatable& eval_2,
                           const FlipConfig& config, const ClassUniverse* universe);

// Empirical CDF of the gap samples: one (value, cumulative fraction) step per
// distinct gap value, ascending; the last fraction is 1.
std::vector<std::pair<double, double>> gap_cdf(const FlipReport& report);

}  // namespace fsleval
