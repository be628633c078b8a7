#include "fsleval/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsleval {

namespace {

void check_labels(const std::vector<int>& y, int n_way, const char* what) {
    if (y.empty()) throw std::invalid_argument(std::string(what) + " set is empty");
    for (int lbl : y)
        if (lbl < 1 || lbl > n_way)
            throw std::invalid_argument(std::string(what) + " label out of range");
}

// Row-wise softmax probabilities and mean cross-entropy against labels 1..n.
// Returns loss; fills delta = (softmax - onehot) / rows, the logit gradient.
double softmax_ce(const Eigen::MatrixXd& logits, const std::vector<int>& y,
                  Eigen::MatrixXd* delta) {
    const Eigen::Index rows = logits.rows(), cols = logits.cols();
    if (delta) delta->resize(rows, cols);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mx = logits.row(r).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
        const double z = e.sum();
        loss += std::log(z) - (logits(r, y[r] - 1) - mx);
        if (delta) {
            delta->row(r) = e / z;
            (*delta)(r, y[r] - 1) -= 1.0;
        }
    }
    loss /= static_cast<double>(rows);
    if (delta) *delta /= static_cast<double>(rows);
    return loss;
}

Eigen::MatrixXd embed(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    return x * w.transpose();
}

// [G, 1] augmentation for the bias-carrying heads.
Eigen::MatrixXd augment(const Eigen::MatrixXd& g) {
    Eigen::MatrixXd z(g.rows(), g.cols() + 1);
    z.leftCols(g.cols()) = g;
    z.col(g.cols()).setOnes();
    return z;
}

Eigen::MatrixXd class_means(const Eigen::MatrixXd& x, const std::vector<int>& y,
                            int n_way) {
    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n_way, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_way);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        means.row(y[r] - 1) += x.row(r);
        counts[y[r] - 1] += 1.0;
    }
    for (int j = 0; j < n_way; ++j) {
        if (counts[j] == 0.0)
            throw std::invalid_argument("support is missing label " + std::to_string(j + 1));
        means.row(j) /= counts[j];
    }
    return means;
}

Eigen::MatrixXd one_vs_all_targets(const std::vector<int>& y, int n_way) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Constant(y.size(), n_way, -1.0);
    for (std::size_t r = 0; r < y.size(); ++r) t(r, y[r] - 1) = 1.0;
    return t;
}

Eigen::MatrixXd onehot(const std::vector<int>& y, int n_way) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(y.size(), n_way);
    for (std::size_t r = 0; r < y.size(); ++r) t(r, y[r] - 1) = 1.0;
    return t;
}

// Crammer-Singer primal value for head v (n x p) on augmented supports z.
double svm_objective(const Eigen::MatrixXd& v, const Eigen::MatrixXd& z,
                     const std::vector<int>& y, double c_reg) {
    const Eigen::MatrixXd scores = z * v.transpose();  // m x n
    double hinge = 0.0;
    for (Eigen::Index s = 0; s < z.rows(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < scores.cols(); ++j) {
            const double margin = scores(s, j) + (j == y[s] - 1 ? 0.0 : 1.0);
            if (margin > best) best = margin;
        }
        hinge += best - scores(s, y[s] - 1);
    }
    return 0.5 * c_reg * v.squaredNorm() + hinge / static_cast<double>(z.rows());
}

// Subgradient descent with step 1/(c_reg*t); subgradient steps are not
// descent steps, so the best-objective iterate (including the zero start) is
// what gets returned.
Eigen::MatrixXd svm_solve(const Eigen::MatrixXd& z, const std::vector<int>& y,
                          int n_way, double c_reg, int iters) {
    const Eigen::Index m = z.rows(), p = z.cols();
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n_way, p);
    Eigen::MatrixXd best = v;
    double best_obj = svm_objective(v, z, y, c_reg);
    for (int t = 1; t <= iters; ++t) {
        const Eigen::MatrixXd scores = z * v.transpose();
        Eigen::MatrixXd sub = c_reg * v;
        for (Eigen::Index s = 0; s < m; ++s) {
            int arg = 0;
            double bestm = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n_way; ++j) {
                const double margin = scores(s, j) + (j == y[s] - 1 ? 0.0 : 1.0);
                if (margin > bestm) bestm = margin, arg = j;
            }
            if (arg != y[s] - 1) {
                sub.row(arg) += z.row(s) / static_cast<double>(m);
                sub.row(y[s] - 1) -= z.row(s) / static_cast<double>(m);
            }
        }
        v -= sub / (c_reg * static_cast<double>(t));
        const double obj = svm_objective(v, z, y, c_reg);
        if (obj < best_obj) best_obj = obj, best = v;
    }
    return best;
}

struct RidgeSolution {
    Eigen::MatrixXd h;        // p x n head (augmented-feature coefficients)
    Eigen::LLT<Eigen::MatrixXd> llt;  // factorization of A, reused by the gradient
};

RidgeSolution ridge_solve(const Eigen::MatrixXd& z, const std::vector<int>& y,
                          int n_way, double lambda_reg) {
    const Eigen::Index p = z.cols();
    Eigen::MatrixXd a = z.transpose() * z;
    a.diagonal().array() += lambda_reg;
    RidgeSolution sol;
    sol.llt.compute(a);
    if (sol.llt.info() != Eigen::Success)
        throw std::runtime_error("ridge normal equations are not positive definite");
    sol.h = sol.llt.solve(z.transpose() * one_vs_all_targets(y, n_way));
    (void)p;
    return sol;
}

void fomaml_inner(const FomamlKind& kind, const EmbeddingParams& params,
                  const Eigen::MatrixXd& support_x, const std::vector<int>& support_y,
                  int n_way, int steps, Eigen::MatrixXd* w_out,
                  Eigen::MatrixXd* head_out) {
    const Eigen::Index d_out = params.w.rows();
    Eigen::MatrixXd w = params.w;
    Eigen::MatrixXd head = Eigen::MatrixXd::Zero(n_way, d_out + 1);
    for (int step = 0; step < steps; ++step) {
        const Eigen::MatrixXd z = augment(embed(support_x, w));
        const Eigen::MatrixXd logits = params.scale * (z * head.transpose());
        Eigen::MatrixXd delta;
        softmax_ce(logits, support_y, &delta);
        const Eigen::MatrixXd head_grad = params.scale * delta.transpose() * z;
        if (kind.adapt_embedding) {
            // d loss / d embedded supports, bias column excluded
            const Eigen::MatrixXd g_grad =
                params.scale * delta * head.leftCols(d_out);
            w -= kind.inner_lr * (g_grad.transpose() * support_x);
        }
        head -= kind.inner_lr * head_grad;
    }
    *w_out = w;
    *head_out = head;
}

}  // namespace

AdaptedClassifier adapt(const LearnerKind& kind, const EmbeddingParams& params,
                        const Eigen::MatrixXd& support_x,
                        const std::vector<int>& support_y, int n_way,
                        AdaptPhase phase) {
    if (n_way < 1) throw std::invalid_argument("n_way must be >= 1");
    if (support_x.rows() != static_cast<Eigen::Index>(support_y.size()))
        throw std::invalid_argument("support rows/labels mismatch");
    check_labels(support_y, n_way, "support");

    AdaptedClassifier clf;
    clf.n_way = n_way;
    clf.embed = params.w;
    clf.embed_delta = Eigen::MatrixXd::Zero(params.w.rows(), params.w.cols());

    if (std::holds_alternative<ProtoKind>(kind)) {
        clf.rule = AdaptedClassifier::Rule::Prototype;
        clf.prototypes = class_means(embed(support_x, params.w), support_y, n_way);
        return clf;
    }
    if (const auto* ridge = std::get_if<RidgeKind>(&kind)) {
        if (ridge->lambda_reg <= 0.0) throw std::invalid_argument("lambda_reg must be > 0");
        const Eigen::MatrixXd z = augment(embed(support_x, params.w));
        const RidgeSolution sol = ridge_solve(z, support_y, n_way, ridge->lambda_reg);
        clf.rule = AdaptedClassifier::Rule::Linear;
        clf.head_w = sol.h.topRows(z.cols() - 1).transpose();
        clf.head_b = sol.h.row(z.cols() - 1).transpose();
        return clf;
    }
    if (const auto* svm = std::get_if<SvmKind>(&kind)) {
        if (svm->c_reg <= 0.0) throw std::invalid_argument("c_reg must be > 0");
        if (svm->iters < 0) throw std::invalid_argument("iters must be >= 0");
        const Eigen::MatrixXd z = augment(embed(support_x, params.w));
        const Eigen::MatrixXd v = svm_solve(z, support_y, n_way, svm->c_reg, svm->iters);
        clf.rule = AdaptedClassifier::Rule::Linear;
        clf.head_w = v.leftCols(z.cols() - 1);
        clf.head_b = v.col(z.cols() - 1);
        return clf;
    }
    const auto& fomaml = std::get<FomamlKind>(kind);
    if (fomaml.inner_lr <= 0.0) throw std::invalid_argument("inner_lr must be > 0");
    const int steps = phase == AdaptPhase::Train ? fomaml.inner_steps_train
                                                 : fomaml.inner_steps_eval;
    if (steps < 0) throw std::invalid_argument("inner steps must be >= 0");
    Eigen::MatrixXd w_adapted, head;
    fomaml_inner(fomaml, params, support_x, support_y, n_way, steps, &w_adapted, &head);
    clf.rule = AdaptedClassifier::Rule::Linear;
    clf.embed = w_adapted;
    clf.embed_delta = w_adapted - params.w;
    clf.head_w = head.leftCols(head.cols() - 1);
    clf.head_b = head.col(head.cols() - 1);
    return clf;
}

Eigen::MatrixXd query_logits(const AdaptedClassifier& clf,
                             const Eigen::MatrixXd& query_x, double scale) {
    const Eigen::MatrixXd g = embed(query_x, clf.embed);
    if (clf.rule == AdaptedClassifier::Rule::Prototype) {
        Eigen::MatrixXd logits(g.rows(), clf.n_way);
        for (Eigen::Index r = 0; r < g.rows(); ++r)
            for (int j = 0; j < clf.n_way; ++j)
                logits(r, j) =
                    -scale * (g.row(r) - clf.prototypes.row(j)).squaredNorm();
        return logits;
    }
    return scale *
           ((g * clf.head_w.transpose()).rowwise() + clf.head_b.transpose());
}

ClassifyResult classify(const AdaptedClassifier& clf, const Eigen::MatrixXd& query_x,
                        const std::vector<int>& query_y, double scale) {
    if (query_x.rows() == 0) throw std::invalid_argument("query set is empty");
    if (query_x.rows() != static_cast<Eigen::Index>(query_y.size()))
        throw std::invalid_argument("query rows/labels mismatch");
    const Eigen::MatrixXd logits = query_logits(clf, query_x, scale);

    ClassifyResult result;
    result.predictions.reserve(query_y.size());
    int correct = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        int arg = 0;
        for (int j = 1; j < clf.n_way; ++j)
            if (logits(r, j) > logits(r, arg)) arg = j;  // ties keep the lowest label
        result.predictions.push_back(arg + 1);
        if (arg + 1 == query_y[r]) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows());
    return result;
}

double frozen_adaptation_loss(const EmbeddingParams& params,
                              const AdaptedClassifier& clf, const Episode& episode) {
    AdaptedClassifier shifted = clf;
    shifted.embed = params.w + clf.embed_delta;
    const Eigen::MatrixXd logits =
        query_logits(shifted, episode.query_x, params.scale);
    return softmax_ce(logits, episode.query_y, nullptr);
}

namespace {

LossGrad proto_loss_grad(const EmbeddingParams& params, const Episode& ep, int n_way) {
    const Eigen::MatrixXd xbar = class_means(ep.support_x, ep.support_y, n_way);
    const Eigen::Index m = ep.query_x.rows();

    // logits(q,j) = -scale * || W (x_q - xbar_j) ||^2
    Eigen::MatrixXd logits(m, n_way);
    std::vector<Eigen::MatrixXd> wdiff(n_way);  // W * (x_q - xbar_j), per class
    for (int j = 0; j < n_way; ++j) {
        const Eigen::MatrixXd diff = ep.query_x.rowwise() - xbar.row(j);
        wdiff[j] = diff * params.w.transpose();
        logits.col(j) = -params.scale * wdiff[j].rowwise().squaredNorm();
    }
    Eigen::MatrixXd delta;
    LossGrad out;
    out.loss = softmax_ce(logits, ep.query_y, &delta);

    // d logits(q,j) / dW = -2 * scale * W v_qj v_qj^T with v_qj = x_q - xbar_j
    out.grad = Eigen::MatrixXd::Zero(params.w.rows(), params.w.cols());
    for (int j = 0; j < n_way; ++j) {
        const Eigen::MatrixXd diff = ep.query_x.rowwise() - xbar.row(j);
        out.grad += (wdiff[j].transpose() * delta.col(j).asDiagonal() * diff);
    }
    out.grad *= -2.0 * params.scale;
    return out;
}

LossGrad ridge_loss_grad(const RidgeKind& kind, const EmbeddingParams& params,
                         const Episode& ep, int n_way) {
    const Eigen::Index d_out = params.w.rows();
    const Eigen::MatrixXd zs = augment(embed(ep.support_x, params.w));
    const Eigen::MatrixXd zq = augment(embed(ep.query_x, params.w));
    const RidgeSolution sol = ridge_solve(zs, ep.support_y, n_way, kind.lambda_reg);

    const Eigen::MatrixXd logits = params.scale * (zq * sol.h);
    Eigen::MatrixXd delta;
    LossGrad out;
    out.loss = softmax_ce(logits, ep.query_y, &delta);

    // Backprop through H = A^-1 B, A = Zs^T Zs + lambda I, B = Zs^T Y.
    const Eigen::MatrixXd dh = params.scale * zq.transpose() * delta;   // p x n
    const Eigen::MatrixXd c = sol.llt.solve(dh);                        // A^-1 dh
    const Eigen::MatrixXd da = -c * sol.h.transpose();                  // p x p
    Eigen::MatrixXd dzs = zs * (da + da.transpose()) +
                          one_vs_all_targets(ep.support_y, n_way) * c.transpose();
    Eigen::MatrixXd dzq = params.scale * delta * sol.h.transpose();

    out.grad = dzs.leftCols(d_out).transpose() * ep.support_x +
               dzq.leftCols(d_out).transpose() * ep.query_x;
    return out;
}

LossGrad first_order_loss_grad(const LearnerKind& kind, const EmbeddingParams& params,
                               const Episode& ep, int n_way) {
    const AdaptedClassifier clf = adapt(kind, params, ep.support_x, ep.support_y,
                                        n_way, AdaptPhase::Train);
    const Eigen::MatrixXd logits = query_logits(clf, ep.query_x, params.scale);
    Eigen::MatrixXd delta;
    LossGrad out;
    out.loss = softmax_ce(logits, ep.query_y, &delta);

    // Adaptation (head and embed_delta) held constant: gradient flows only
    // through the query embedding path.
    const Eigen::MatrixXd g_grad = params.scale * delta * clf.head_w;
    out.grad = g_grad.transpose() * ep.query_x;
    return out;
}

}  // namespace

LossGrad episode_loss_grad(const LearnerKind& kind, const EmbeddingParams& params,
                           const Episode& episode) {
    if (episode.support_y.empty() || episode.query_y.empty())
        throw std::invalid_argument("episode has no labels");
    const int n_way =
        *std::max_element(episode.support_y.begin(), episode.support_y.end());
    if (std::holds_alternative<ProtoKind>(kind))
        return proto_loss_grad(params, episode, n_way);
    if (const auto* ridge = std::get_if<RidgeKind>(&kind))
        return ridge_loss_grad(*ridge, params, episode, n_way);
    return first_order_loss_grad(kind, params, episode, n_way);
}

LossGrad batch_loss_grad(const LearnerKind& kind, const EmbeddingParams& params,
                         const std::vector<Episode>& episodes) {
    if (episodes.empty()) throw std::invalid_argument("empty episode batch");
    LossGrad total;
    total.grad = Eigen::MatrixXd::Zero(params.w.rows(), params.w.cols());
    for (const Episode& ep : episodes) {
        LossGrad one = episode_loss_grad(kind, params, ep);
        total.loss += one.loss;
        total.grad += one.grad;
    }
    total.loss /= static_cast<double>(episodes.size());
    total.grad /= static_cast<double>(episodes.size());
    return total;
}

double lr_at_epoch(const std::vector<std::pair<int, double>>& schedule, int epoch) {
    if (schedule.empty() || schedule.front().first != 0)
        throw std::invalid_argument("lr schedule must start at epoch 0");
    double rate = schedule.front().second;
    int prev = -1;
    for (const auto& [start, r] : schedule) {
        if (start <= prev)
            throw std::invalid_argument("lr schedule epochs must be strictly increasing");
        if (r <= 0.0) throw std::invalid_argument("lr schedule rates must be positive");
        prev = start;
        if (start <= epoch) rate = r;
    }
    return rate;
}

SnapshotTrajectory meta_train(const LearnerKind& kind,
                              const TaskDistribution& train_dist,
                              const ClassUniverse& universe,
                              const EpisodeSpec& spec,
                              const SupportSampler& sampler,
                              const EmbeddingParams& init,
                              const TrainingConfig& config) {
    if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (config.task_batch < 1) throw std::invalid_argument("task_batch must be >= 1");
    if (config.episodes_per_epoch < 1 ||
        config.episodes_per_epoch % config.task_batch != 0)
        throw std::invalid_argument(
            "episodes_per_epoch must be a positive multiple of task_batch");
    lr_at_epoch(config.lr_schedule, 0);  // validates the schedule
    if (config.weight_decay < 0.0)
        throw std::invalid_argument("weight_decay must be >= 0");

    EpisodeSource source;
    source.universe = &universe;
    source.dist = train_dist;
    source.spec = spec;
    source.sampler = sampler;

    const int steps_per_epoch = config.episodes_per_epoch / config.task_batch;

    SnapshotTrajectory traj;
    EmbeddingParams params = init;
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(init.w.rows(), init.w.cols());
    std::uint64_t episode_index = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at_epoch(config.lr_schedule, epoch);
        double loss_sum = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            std::vector<Episode> batch;
            batch.reserve(config.task_batch);
            for (int b = 0; b < config.task_batch; ++b) {
                Rng ep_rng(derive_seed(config.seed, "episode", episode_index++));
                batch.push_back(source.sample(ep_rng));
            }
            const LossGrad lg = batch_loss_grad(kind, params, batch);
            if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
                traj.diverged = true;
                return traj;
            }
            velocity = 0.9 * velocity + (lg.grad + config.weight_decay * params.w);
            params.w -= lr * velocity;
            loss_sum += lg.loss;
        }
        Snapshot snap;
        snap.epoch = epoch + 1;
        snap.params = params;
        snap.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
        traj.snapshots.push_back(std::move(snap));
    }
    return traj;
}

}  // namespace fsleval
