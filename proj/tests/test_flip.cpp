#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "fsleval/class_universe.hpp"
#include "fsleval/flip.hpp"
#include "fsleval/rng.hpp"

using namespace fsleval;

namespace {

std::map<int, double> table_from(const std::vector<double>& accs) {
    std::map<int, double> t;
    for (std::size_t i = 0; i < accs.size(); ++i)
        t[static_cast<int>(i)] = accs[i];
    return t;
}

ClassUniverse separable_universe() {
    UniverseConfig cfg;
    cfg.d = 4;
    cfg.n_base = 8;
    cfg.separation = 12.0;
    cfg.stddev = 0.01;
    cfg.seed = 15;
    return generate_universe(cfg);
}

}  // namespace

TEST_CASE("analytic tables average class accuracies and validate input") {
    const AnalyticEvaluatable e(table_from({0.2, 0.4, 0.9}));
    CHECK(e.exact());
    CHECK(!e.needs_episodes());
    CHECK(e.subset_accuracy({0, 1, 2}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(e.subset_accuracy({2}) == 0.9);
    CHECK(e.task_accuracy({1, 0}, nullptr) ==
          doctest::Approx(0.3).epsilon(1e-15));

    CHECK_THROWS_AS(e.subset_accuracy({0, 7}), std::invalid_argument);
    CHECK_THROWS_AS(e.subset_accuracy({}), std::invalid_argument);
    CHECK_THROWS_AS(AnalyticEvaluatable(std::map<int, double>{}),
                    std::invalid_argument);
    CHECK_THROWS_AS(AnalyticEvaluatable(table_from({0.2, 1.4})),
                    std::invalid_argument);
}

TEST_CASE("exhaustive analytic flip run equals the brute-force enumeration") {
    // six classes with distinct accuracies vs a nearly-flat competitor
    const std::vector<double> acc_a{0.9, 0.8, 0.7, 0.6, 0.5, 0.4};
    const std::vector<double> acc_b{0.65, 0.65, 0.65, 0.65, 0.65, 0.64};
    const AnalyticEvaluatable ea(table_from(acc_a)), eb(table_from(acc_b));

    FlipConfig cfg;
    cfg.large_set = {0, 1, 2, 3, 4, 5};
    cfg.subset_size = 3;
    cfg.spec = EpisodeSpec{2, 1, 1};
    cfg.exhaustive_subsets = true;
    cfg.epsilon = 0.01;
    cfg.delta = 0.02;
    const FlipReport report = flip_experiment(ea, eb, cfg, nullptr);

    // oracle: walk every 3-subset in the same lexicographic index order
    std::vector<double> expected;
    int flips = 0, exaggerations = 0;
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j)
            for (int k = j + 1; k < 6; ++k) {
                const double gap = (acc_a[i] + acc_a[j] + acc_a[k]) / 3.0 -
                                   (acc_b[i] + acc_b[j] + acc_b[k]) / 3.0;
                expected.push_back(gap);
                if (gap < 0.0) ++flips;
                if (gap > cfg.epsilon + cfg.delta) ++exaggerations;
            }
    REQUIRE(report.gap_samples.size() == 20);
    for (std::size_t i = 0; i < 20; ++i)
        CHECK(report.gap_samples[i] == doctest::Approx(expected[i]).epsilon(1e-13));
    CHECK(report.flip_freq == doctest::Approx(flips / 20.0).epsilon(1e-15));
    CHECK(report.exaggeration_freq ==
          doctest::Approx(exaggerations / 20.0).epsilon(1e-15));
    CHECK(report.true_gap == cfg.epsilon);

    // subset-mean of gaps equals the full-set gap (every class appears in the
    // same number of subsets)
    double mean = 0.0;
    for (double g : report.gap_samples) mean += g;
    mean /= 20.0;
    const double full_gap =
        ea.subset_accuracy(cfg.large_set) - eb.subset_accuracy(cfg.large_set);
    CHECK(mean == doctest::Approx(full_gap).epsilon(1e-12));
}

TEST_CASE("identical evaluatables produce exactly zero gaps") {
    const AnalyticEvaluatable e(table_from({0.3, 0.5, 0.7, 0.9}));
    FlipConfig cfg;
    cfg.large_set = {0, 1, 2, 3};
    cfg.subset_size = 2;
    cfg.repeats = 50;
    cfg.spec = EpisodeSpec{2, 1, 1};
    cfg.seed = 5;
    const FlipReport report = flip_experiment(e, e, cfg, nullptr);
    REQUIRE(report.gap_samples.size() == 50);
    for (double g : report.gap_samples) CHECK(g == 0.0);
    CHECK(report.flip_freq == 0.0);
    CHECK(report.exaggeration_freq == 0.0);
}

TEST_CASE("a constant per-class advantage never flips and always exaggerates zero") {
    std::map<int, double> a, b;
    for (int c = 0; c < 8; ++c) {
        b[c] = 0.4 + 0.05 * c;
        a[c] = b[c] + 0.1;  // constant +0.1 advantage
    }
    const AnalyticEvaluatable ea(a), eb(b);
    FlipConfig cfg;
    cfg.large_set = {0, 1, 2, 3, 4, 5, 6, 7};
    cfg.subset_size = 4;
    cfg.spec = EpisodeSpec{2, 1, 1};
    cfg.exhaustive_subsets = true;

    cfg.epsilon = 0.1;
    cfg.delta = 1e-9;
    const FlipReport honest = flip_experiment(ea, eb, cfg, nullptr);
    CHECK(honest.flip_freq == 0.0);
    CHECK(honest.exaggeration_freq == 0.0);
    for (double g : honest.gap_samples)
        CHECK(g == doctest::Approx(0.1).epsilon(1e-12));

    cfg.epsilon = 0.0;  // now every subset overstates the claimed gap
    cfg.delta = 0.05;
    const FlipReport overstated = flip_experiment(ea, eb, cfg, nullptr);
    CHECK(overstated.exaggeration_freq == 1.0);
}

TEST_CASE("gap_cdf collapses duplicates and ends at 1") {
    FlipReport report;
    report.gap_samples = {1.0, -1.0, 0.0, 1.0};
    const auto cdf = gap_cdf(report);
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair<double, double>{-1.0, 0.25});
    CHECK(cdf[1] == std::pair<double, double>{0.0, 0.5});
    CHECK(cdf[2] == std::pair<double, double>{1.0, 1.0});

    FlipReport flat;
    flat.gap_samples = {2.0, 2.0, 2.0};
    const auto one = gap_cdf(flat);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == std::pair<double, double>{2.0, 1.0});

    FlipReport empty;
    CHECK_THROWS_AS(gap_cdf(empty), std::invalid_argument);

    Rng rng(6);
    FlipReport random_report;
    for (int i = 0; i < 200; ++i)
        random_report.gap_samples.push_back(rng.uniform_int(20) / 10.0 - 1.0);
    const auto steps = gap_cdf(random_report);
    for (std::size_t i = 1; i < steps.size(); ++i) {
        CHECK(steps[i].first > steps[i - 1].first);
        CHECK(steps[i].second > steps[i - 1].second);
    }
    CHECK(steps.back().second == 1.0);
}

TEST_CASE("true_performance of an analytic table converges to its class mean") {
    const std::vector<double> accs{0.9, 0.3, 0.6, 0.5, 0.8, 0.2, 0.45, 0.75};
    const AnalyticEvaluatable e(table_from(accs));
    const std::vector<int> large{0, 1, 2, 3, 4, 5, 6, 7};
    const EpisodeSpec spec{3, 1, 1};
    const double tp = true_performance(e, large, spec, 4000, nullptr, 31);
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    CHECK(std::abs(tp - mean) < 0.02);
    CHECK_THROWS_AS(true_performance(e, {0, 1}, spec, 0, nullptr, 31),
                    std::invalid_argument);
    CHECK_THROWS_AS(true_performance(e, {0, 1}, spec, 10, nullptr, 31),
                    std::invalid_argument);  // |large| < n_way
}

TEST_CASE("paired learner evaluation of the same model gives zero gaps") {
    const ClassUniverse u = separable_universe();
    EmbeddingParams params;
    params.w = Eigen::MatrixXd::Identity(4, 4);
    const LearnerEvaluatable ea(ProtoKind{}, params), eb(ProtoKind{}, params);

    FlipConfig cfg;
    cfg.large_set = u.roles.base;
    cfg.subset_size = 4;
    cfg.repeats = 10;
    cfg.tasks_per_eval = 5;
    cfg.spec = EpisodeSpec{3, 1, 2};
    cfg.seed = 9;
    const FlipReport report = flip_experiment(ea, eb, cfg, &u);
    REQUIRE(report.gap_samples.size() == 10);
    for (double g : report.gap_samples) CHECK(g == 0.0);

    // trivially separable tasks also saturate true performance
    CHECK(true_performance(ea, u.roles.base, cfg.spec, 200, &u, 3) == 1.0);
}

TEST_CASE("learner evaluatables insist on a universe and refuse subset_accuracy") {
    EmbeddingParams params;
    params.w = Eigen::MatrixXd::Identity(4, 4);
    const LearnerEvaluatable e(ProtoKind{}, params);
    CHECK(e.needs_episodes());
    CHECK(!e.exact());
    CHECK_THROWS_AS(e.subset_accuracy({0, 1}), std::logic_error);

    FlipConfig cfg;
    cfg.large_set = {0, 1, 2, 3};
    cfg.subset_size = 3;
    cfg.spec = EpisodeSpec{2, 1, 1};
    CHECK_THROWS_AS(flip_experiment(e, e, cfg, nullptr), std::invalid_argument);
    CHECK_THROWS_AS(true_performance(e, cfg.large_set, cfg.spec, 10, nullptr, 0),
                    std::invalid_argument);
}

TEST_CASE("a learner can be compared against an analytic baseline") {
    const ClassUniverse u = separable_universe();
    EmbeddingParams params;
    params.w = Eigen::MatrixXd::Identity(4, 4);
    const LearnerEvaluatable learner(ProtoKind{}, params);
    std::map<int, double> table;
    for (int id : u.roles.base) table[id] = 0.75;
    const AnalyticEvaluatable baseline(table);

    FlipConfig cfg;
    cfg.large_set = u.roles.base;
    cfg.subset_size = 4;
    cfg.repeats = 8;
    cfg.tasks_per_eval = 6;
    cfg.spec = EpisodeSpec{3, 1, 2};
    cfg.seed = 21;
    const FlipReport report = flip_experiment(learner, baseline, cfg, &u);
    REQUIRE(report.gap_samples.size() == 8);
    // the learner is perfect on this universe, the baseline fixed at 0.75
    for (double g : report.gap_samples)
        CHECK(g == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("flip experiments are reproducible and validate their config") {
    const AnalyticEvaluatable ea(table_from({0.9, 0.2, 0.6, 0.4, 0.7}));
    const AnalyticEvaluatable eb(table_from({0.5, 0.5, 0.5, 0.5, 0.5}));
    FlipConfig cfg;
    cfg.large_set = {0, 1, 2, 3, 4};
    cfg.subset_size = 2;
    cfg.repeats = 30;
    cfg.spec = EpisodeSpec{2, 1, 1};
    cfg.seed = 77;
    const FlipReport a = flip_experiment(ea, eb, cfg, nullptr);
    const FlipReport b = flip_experiment(ea, eb, cfg, nullptr);
    CHECK(a.gap_samples == b.gap_samples);

    FlipConfig bad = cfg;
    bad.subset_size = 6;
    CHECK_THROWS_AS(flip_experiment(ea, eb, bad, nullptr), std::invalid_argument);
    bad = cfg;
    bad.subset_size = 1;  // below n_way
    CHECK_THROWS_AS(flip_experiment(ea, eb, bad, nullptr), std::invalid_argument);
    bad = cfg;
    bad.repeats = 0;
    CHECK_THROWS_AS(flip_experiment(ea, eb, bad, nullptr), std::invalid_argument);
    bad = cfg;
    bad.delta = -0.1;
    CHECK_THROWS_AS(flip_experiment(ea, eb, bad, nullptr), std::invalid_argument);
}

TEST_CASE("exhaustive enumeration refuses astronomically many subsets") {
    std::map<int, double> table;
    std::vector<int> large;
    for (int c = 0; c < 40; ++c) {
        table[c] = 0.5;
        large.push_back(c);
    }
    const AnalyticEvaluatable e(table);
    FlipConfig cfg;
    cfg.large_set = large;
    cfg.subset_size = 20;  // C(40,20) is ~1.4e11
    cfg.spec = EpisodeSpec{2, 1, 1};
    cfg.exhaustive_subsets = true;
    CHECK_THROWS_AS(flip_experiment(e, e, cfg, nullptr), std::invalid_argument);
}
