#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fsleval/learners.hpp"
#include "fsleval/task_model.hpp"

namespace fsleval {

// Mean per-task query accuracy over n_tasks freshly sampled tasks and (S,Q)
// pairs. Tasks use independent RNG streams derived from (seed, task index),
// so the estimate is bit-reproducible and worker-count independent.
GenEstimate estimate_gen(const EmbeddingParams& params, const LearnerKind& kind,
                         const EpisodeSource& source, int n_tasks,
                         std::uint64_t seed);

// Fills trajectory.estimates[name][i] for every snapshot i and every named
// source. Each (name, snapshot) cell gets its own task-seed stream.
void evaluate_trajectory(SnapshotTrajectory& trajectory, const LearnerKind& kind,
                         const std::map<std::string, EpisodeSource>& sources,
                         int n_tasks, std::uint64_t seed);

// Kendall tau-b (tie-corrected). Throws std::domain_error when either list is
// entirely tied (the denominator vanishes and the coefficient is undefined).
double kendall_tau(const std::vector<double>& scores_a,
                   const std::vector<double>& scores_b);

// Rank correlation between two distributions' mean accuracies over the last
// tail_window snapshots.
double rank_similarity_report(const SnapshotTrajectory& trajectory,
                              const std::string& dist_a_name,
                              const std::string& dist_b_name, int tail_window);

enum class SelectionStrategy { LastSnapshot, BestTrainLoss, BestBaseGen, BestValGen };

// BestBaseGen/BestValGen read trajectory.estimates["base"] / ["val"]; ties
// resolve to the earliest epoch.
const Snapshot& select_snapshot(const SnapshotTrajectory& trajectory,
                                SelectionStrategy strategy);

}  // namespace fsleval
