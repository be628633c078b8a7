#include "fsleval/ranking.hpp"

#include <cmath>
#include <stdexcept>

#include "fsleval/parallel.hpp"

namespace fsleval {

GenEstimate estimate_gen(const EmbeddingParams& params, const LearnerKind& kind,
                         const EpisodeSource& source, int n_tasks,
                         std::uint64_t seed) {
    if (n_tasks < 2) throw std::invalid_argument("estimate_gen needs n_tasks >= 2");

    std::vector<double> acc(n_tasks);
    parallel_for(static_cast<std::size_t>(n_tasks), [&](std::size_t i) {
        Rng rng(derive_seed(seed, "task", i));
        const Episode ep = source.sample(rng);
        const AdaptedClassifier clf = adapt(kind, params, ep.support_x, ep.support_y,
                                            source.spec.n_way, AdaptPhase::Eval);
        acc[i] = classify(clf, ep.query_x, ep.query_y, params.scale).accuracy;
    });

    double sum = 0.0;
    for (double a : acc) sum += a;
    const double mean = sum / n_tasks;
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    const double stddev = std::sqrt(ss / (n_tasks - 1));

    GenEstimate est;
    est.mean_acc = mean;
    est.ci95_halfwidth = 1.96 * stddev / std::sqrt(static_cast<double>(n_tasks));
    est.n_tasks = n_tasks;
    return est;
}

void evaluate_trajectory(SnapshotTrajectory& trajectory, const LearnerKind& kind,
                         const std::map<std::string, EpisodeSource>& sources,
                         int n_tasks, std::uint64_t seed) {
    for (const auto& [name, source] : sources) {
        auto& column = trajectory.estimates[name];
        column.resize(trajectory.snapshots.size());
        for (std::size_t i = 0; i < trajectory.snapshots.size(); ++i)
            column[i] = estimate_gen(trajectory.snapshots[i].params, kind, source,
                                     n_tasks, derive_seed(seed, name, i));
    }
}

double kendall_tau(const std::vector<double>& scores_a,
                   const std::vector<double>& scores_b) {
    const std::size_t n = scores_a.size();
    if (n != scores_b.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    if (n < 2) throw std::invalid_argument("kendall_tau needs at least 2 entries");

    // tau-b: (C - D) / sqrt((n0 - ties_a) * (n0 - ties_b)) over all pairs.
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double da = scores_a[i] - scores_a[j];
            const double db = scores_b[i] - scores_b[j];
            if (da == 0.0 && db == 0.0) {
                ++ties_a, ++ties_b;
            } else if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if ((da > 0.0) == (db > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double denom_a = n0 - static_cast<double>(ties_a);
    const double denom_b = n0 - static_cast<double>(ties_b);
    if (denom_a == 0.0 || denom_b == 0.0)
        throw std::domain_error("kendall_tau undefined: a score list is entirely tied");
    return static_cast<double>(concordant - discordant) / std::sqrt(denom_a * denom_b);
}

double rank_similarity_report(const SnapshotTrajectory& trajectory,
                              const std::string& dist_a_name,
                              const std::string& dist_b_name, int tail_window) {
    const auto it_a = trajectory.estimates.find(dist_a_name);
    const auto it_b = trajectory.estimates.find(dist_b_name);
    if (it_a == trajectory.estimates.end() || it_b == trajectory.estimates.end())
        throw std::invalid_argument("trajectory not evaluated on a requested distribution");
    const auto& ea = it_a->second;
    const auto& eb = it_b->second;
    if (tail_window < 2) throw std::invalid_argument("tail_window must be >= 2");
    if (static_cast<std::size_t>(tail_window) > ea.size())
        throw std::invalid_argument("tail_window exceeds trajectory length");

    std::vector<double> a, b;
    for (std::size_t i = ea.size() - tail_window; i < ea.size(); ++i) {
        a.push_back(ea[i].mean_acc);
        b.push_back(eb[i].mean_acc);
    }
    return kendall_tau(a, b);
}

const Snapshot& select_snapshot(const SnapshotTrajectory& trajectory,
                                SelectionStrategy strategy) {
    if (trajectory.snapshots.empty())
        throw std::invalid_argument("empty trajectory");

    if (strategy == SelectionStrategy::LastSnapshot)
        return trajectory.snapshots.back();

    if (strategy == SelectionStrategy::BestTrainLoss) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < trajectory.snapshots.size(); ++i)
            if (trajectory.snapshots[i].train_loss <
                trajectory.snapshots[best].train_loss)
                best = i;  // strict improvement keeps the earliest epoch on ties
        return trajectory.snapshots[best];
    }

    const std::string name =
        strategy == SelectionStrategy::BestBaseGen ? "base" : "val";
    const auto it = trajectory.estimates.find(name);
    if (it == trajectory.estimates.end() ||
        it->second.size() != trajectory.snapshots.size())
        throw std::invalid_argument("trajectory lacks '" + name + "' estimates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < it->second.size(); ++i)
        if (it->second[i].mean_acc > it->second[best].mean_acc) best = i;
    return trajectory.snapshots[best];
}

}  // namespace fsleval
