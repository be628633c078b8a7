#include "fsleval/flip.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsleval/parallel.hpp"

namespace fsleval {

double Evaluatable::subset_accuracy(const std::vector<int>&) const {
    throw std::logic_error("subset_accuracy requires an exact evaluatable");
}

AnalyticEvaluatable::AnalyticEvaluatable(std::map<int, double> class_acc)
    : acc_(std::move(class_acc)) {
    if (acc_.empty()) throw std::invalid_argument("empty accuracy table");
    for (const auto& [c, a] : acc_)
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("class accuracy outside [0,1]");
}

double AnalyticEvaluatable::subset_accuracy(const std::vector<int>& subset) const {
    if (subset.empty()) throw std::invalid_argument("empty subset");
    double sum = 0.0;
    for (int c : subset) {
        const auto it = acc_.find(c);
        if (it == acc_.end())
            throw std::invalid_argument("class " + std::to_string(c) +
                                        " missing from accuracy table");
        sum += it->second;
    }
    return sum / static_cast<double>(subset.size());
}

double AnalyticEvaluatable::task_accuracy(const ClassTuple& tuple,
                                          const Episode*) const {
    return subset_accuracy(tuple);
}

LearnerEvaluatable::LearnerEvaluatable(LearnerKind kind, EmbeddingParams params)
    : kind_(std::move(kind)), params_(std::move(params)) {}

double LearnerEvaluatable::task_accuracy(const ClassTuple&,
                                         const Episode* episode) const {
    if (!episode) throw std::invalid_argument("learner evaluation needs an episode");
    const int n_way = static_cast<int>(
        *std::max_element(episode->support_y.begin(), episode->support_y.end()));
    const AdaptedClassifier clf =
        adapt(kind_, params_, episode->support_x, episode->support_y, n_way,
              AdaptPhase::Eval);
    return classify(clf, episode->query_x, episode->query_y, params_.scale).accuracy;
}

namespace {

ClassTuple uniform_subset(const std::vector<int>& set, int m, Rng& rng) {
    std::vector<int> pool = set;
    for (int i = 0; i < m; ++i) {
        const std::size_t j = i + rng.uniform_int(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
}

// Paired accuracy gap on one subset. Exact pairs are task-free; otherwise T
// shared tasks (and episodes, when needed) are drawn from task_seed.
double subset_gap(const Evaluatable& e1, const Evaluatable& e2,
                  const std::vector<int>& subset, const FlipConfig& config,
                  const ClassUniverse* universe, std::uint64_t task_seed) {
    if (e1.exact() && e2.exact())
        return e1.subset_accuracy(subset) - e2.subset_accuracy(subset);

    const bool episodes_needed = e1.needs_episodes() || e2.needs_episodes();
    if (episodes_needed && !universe)
        throw std::invalid_argument("learner evaluatables require a universe");

    double acc1 = 0.0, acc2 = 0.0;
    for (int t = 0; t < config.tasks_per_eval; ++t) {
        Rng rng(derive_seed(task_seed, "task", static_cast<std::uint64_t>(t)));
        const ClassTuple tuple = uniform_subset(subset, config.spec.n_way, rng);
        if (episodes_needed) {
            const Episode ep =
                sample_episode(*universe, tuple, config.spec, SupportSampler{}, rng);
            acc1 += e1.task_accuracy(tuple, &ep);
            acc2 += e2.task_accuracy(tuple, &ep);
        } else {
            acc1 += e1.task_accuracy(tuple, nullptr);
            acc2 += e2.task_accuracy(tuple, nullptr);
        }
    }
    return (acc1 - acc2) / static_cast<double>(config.tasks_per_eval);
}

long long binomial_or_throw(int l, int m) {
    long long result = 1;
    for (int i = 1; i <= m; ++i) {
        result = result * (l - m + i) / i;  // exact: product of i consecutive ints divisible by i!
        if (result > 2000000)
            throw std::invalid_argument("exhaustive subset enumeration too large");
    }
    return result;
}

}  // namespace

double true_performance(const Evaluatable& evaluatable,
                        const std::vector<int>& large_set, const EpisodeSpec& spec,
                        int t_large, const ClassUniverse* universe,
                        std::uint64_t seed) {
    if (static_cast<int>(large_set.size()) < spec.n_way)
        throw std::invalid_argument("large set smaller than n_way");
    if (t_large < 1) throw std::invalid_argument("t_large must be >= 1");
    if (evaluatable.needs_episodes() && !universe)
        throw std::invalid_argument("learner evaluatables require a universe");

    std::vector<double> acc(t_large);
    parallel_for(static_cast<std::size_t>(t_large), [&](std::size_t i) {
        Rng rng(derive_seed(seed, "task", i));
        const ClassTuple tuple = uniform_subset(large_set, spec.n_way, rng);
        if (evaluatable.needs_episodes()) {
            const Episode ep =
                sample_episode(*universe, tuple, spec, SupportSampler{}, rng);
            acc[i] = evaluatable.task_accuracy(tuple, &ep);
        } else {
            acc[i] = evaluatable.task_accuracy(tuple, nullptr);
        }
    });
    double sum = 0.0;
    for (double a : acc) sum += a;
    return sum / static_cast<double>(t_large);
}

FlipReport flip_experiment(const Evaluatable& eval_1, const Evaluatable& eval_2,
                           const FlipConfig& config, const ClassUniverse* universe) {
    const int l = static_cast<int>(config.large_set.size());
    const int m = config.subset_size;
    if (m < 1 || m > l) throw std::invalid_argument("subset_size out of range");
    if (m < config.spec.n_way)
        throw std::invalid_argument("subset_size smaller than n_way");
    if (config.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    if (config.tasks_per_eval < 1)
        throw std::invalid_argument("tasks_per_eval must be >= 1");
    if (config.delta < 0.0) throw std::invalid_argument("delta must be >= 0");

    FlipReport report;
    report.true_gap = config.epsilon;

    if (config.exhaustive_subsets) {
        const long long total = binomial_or_throw(l, m);
        report.gap_samples.reserve(static_cast<std::size_t>(total));
        // Lexicographic index combinations over large_set as given.
        std::vector<int> idx(m);
        for (int i = 0; i < m; ++i) idx[i] = i;
        std::uint64_t subset_no = 0;
        for (;;) {
            std::vector<int> subset(m);
            for (int i = 0; i < m; ++i) subset[i] = config.large_set[idx[i]];
            report.gap_samples.push_back(
                subset_gap(eval_1, eval_2, subset, config, universe,
                           derive_seed(config.seed, "subset", subset_no++)));
            int pos = m - 1;
            while (pos >= 0 && idx[pos] == l - m + pos) --pos;
            if (pos < 0) break;
            ++idx[pos];
            for (int i = pos + 1; i < m; ++i) idx[i] = idx[i - 1] + 1;
        }
    } else {
        report.gap_samples.resize(config.repeats);
        parallel_for(static_cast<std::size_t>(config.repeats), [&](std::size_t r) {
            Rng rng(derive_seed(config.seed, "subset-draw", r));
            const std::vector<int> subset = uniform_subset(config.large_set, m, rng);
            report.gap_samples[r] =
                subset_gap(eval_1, eval_2, subset, config, universe,
                           derive_seed(config.seed, "subset-tasks", r));
        });
    }

    long long flips = 0, exaggerations = 0;
    for (double gap : report.gap_samples) {
        if (gap < 0.0) ++flips;
        if (gap > config.epsilon + config.delta) ++exaggerations;
    }
    const double count = static_cast<double>(report.gap_samples.size());
    report.flip_freq = static_cast<double>(flips) / count;
    report.exaggeration_freq = static_cast<double>(exaggerations) / count;
    return report;
}

std::vector<std::pair<double, double>> gap_cdf(const FlipReport& report) {
    if (report.gap_samples.empty())
        throw std::invalid_argument("gap_cdf: empty report");
    std::vector<double> sorted = report.gap_samples;
    std::sort(sorted.begin(), sorted.end());

    std::vector<std::pair<double, double>> cdf;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        cdf.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
    }
    return cdf;
}

}  // namespace fsleval
