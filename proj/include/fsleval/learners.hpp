#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fsleval/task_model.hpp"

namespace fsleval {

// Shared linear embedding g(x) = W*x plus a fixed logit multiplier. The scale
// multiplies every learner's raw scores, so scale=0 collapses all logits to
// zero (useful as a degenerate test case).
struct EmbeddingParams {
    Eigen::MatrixXd w;  // d_out x d_in
    double scale = 1.0;
};

struct ProtoKind {};

struct RidgeKind {
    double lambda_reg = 1.0;
};

struct SvmKind {
    double c_reg = 0.1;
    int iters = 200;
};

struct FomamlKind {
    double inner_lr = 0.01;
    int inner_steps_train = 5;
    int inner_steps_eval = 20;
    bool adapt_embedding = true;  // inner loop also updates the embedding copy
};

using LearnerKind = std::variant<ProtoKind, RidgeKind, SvmKind, FomamlKind>;

// FOMAML runs a shorter inner loop during meta-training than at evaluation
// time; the other learners ignore the phase.
enum class AdaptPhase { Train, Eval };

// Episode-level classifier produced by adapt(). `embed` is the embedding the
// classifier expects on queries (for FOMAML the inner-loop-adapted copy;
// `embed_delta` = embed - meta W, zero for the other kinds, kept so the
// first-order surrogate loss can be evaluated at perturbed meta-parameters).
struct AdaptedClassifier {
    enum class Rule { Prototype, Linear };
    Rule rule = Rule::Prototype;
    int n_way = 0;
    Eigen::MatrixXd embed;
    Eigen::MatrixXd embed_delta;
    Eigen::MatrixXd prototypes;  // Prototype: n_way x d_out
    Eigen::MatrixXd head_w;      // Linear: n_way x d_out
    Eigen::VectorXd head_b;      // Linear: n_way
};

AdaptedClassifier adapt(const LearnerKind& kind, const EmbeddingParams& params,
                        const Eigen::MatrixXd& support_x,
                        const std::vector<int>& support_y, int n_way,
                        AdaptPhase phase = AdaptPhase::Eval);

// Query logits (rows = queries, cols = labels 1..n_way):
//   Prototype rule: -scale * squared euclidean distance to each prototype
//   Linear rule:     scale * (head_w * g(x) + head_b)
Eigen::MatrixXd query_logits(const AdaptedClassifier& clf,
                             const Eigen::MatrixXd& query_x, double scale);

struct ClassifyResult {
    std::vector<int> predictions;  // labels 1..n_way; ties -> lowest label
    double accuracy = 0.0;
};

ClassifyResult classify(const AdaptedClassifier& clf, const Eigen::MatrixXd& query_x,
                        const std::vector<int>& query_y, double scale);

// Mean softmax cross-entropy of the episode's queries under a classifier that
// was adapted earlier, re-embedding queries with params.w + clf.embed_delta.
// Called with the same params that produced clf this is the episode loss; for
// SVM/FOMAML it is also the frozen-adaptation surrogate whose W-gradient
// episode_loss_grad reports, so finite differences of this function are the
// matching oracle.
double frozen_adaptation_loss(const EmbeddingParams& params,
                              const AdaptedClassifier& clf, const Episode& episode);

struct LossGrad {
    double loss = 0.0;
    Eigen::MatrixXd grad;  // same shape as params.w
};

// loss: mean query cross-entropy under the classifier adapted on the episode's
// support (FOMAML adapts with its train-phase step count). grad: exact
// derivative through the closed-form adaptation for Proto/Ridge; first-order
// (adaptation held constant) for SVM/FOMAML.
LossGrad episode_loss_grad(const LearnerKind& kind, const EmbeddingParams& params,
                           const Episode& episode);

LossGrad batch_loss_grad(const LearnerKind& kind, const EmbeddingParams& params,
                         const std::vector<Episode>& episodes);

struct Snapshot {
    int epoch = 0;  // 1-based, strictly increasing within a trajectory
    EmbeddingParams params;
    double train_loss = 0.0;
};

// Generalization estimate over one task distribution: mean per-task query
// accuracy with a normal-approximation 95% interval (1.96 * s / sqrt(n)).
struct GenEstimate {
    double mean_acc = 0.0;
    double ci95_halfwidth = 0.0;
    int n_tasks = 0;
};

struct SnapshotTrajectory {
    std::vector<Snapshot> snapshots;
    bool diverged = false;  // set when a non-finite loss aborted training
    // distribution name -> one estimate per snapshot (filled by the ranking
    // module's evaluate_trajectory; every evaluated name covers all snapshots)
    std::map<std::string, std::vector<GenEstimate>> estimates;
};

struct TrainingConfig {
    int epochs = 1;
    int episodes_per_epoch = 1;  // must be divisible by task_batch
    int task_batch = 1;
    // (start_epoch, rate) staircase; first start_epoch must be 0, start
    // epochs strictly increasing, rates positive.
    std::vector<std::pair<int, double>> lr_schedule{{0, 0.01}};
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

// Episodic SGD (momentum 0.9, weight decay added to the gradient) from the
// given initial embedding; one snapshot per epoch. Per-episode RNG streams are
// derived from (seed, episode index), so the trajectory is reproducible and
// independent of scheduling.
SnapshotTrajectory meta_train(const LearnerKind& kind,
                              const TaskDistribution& train_dist,
                              const ClassUniverse& universe,
                              const EpisodeSpec& spec,
                              const SupportSampler& sampler,
                              const EmbeddingParams& init,
                              const TrainingConfig& config);

double lr_at_epoch(const std::vector<std::pair<int, double>>& schedule, int epoch);

}  // namespace fsleval
