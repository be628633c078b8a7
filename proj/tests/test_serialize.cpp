#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "fsleval/class_universe.hpp"
#include "fsleval/serialize.hpp"

using namespace fsleval;

TEST_CASE("format_double round-trips exactly") {
    const std::vector<double> values{0.0,           -0.0,       1.0 / 3.0,
                                     6.02214076e23, 5e-324,     -17.25,
                                     0.1,           3.14159265358979312};
    for (double v : values) {
        const std::string s = format_double(v);
        // strtod instead of std::stod: stod raises out_of_range on subnormals
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("matrices survive a json round trip bit-for-bit") {
    Eigen::MatrixXd m(2, 3);
    m << 1.0, 1.0 / 3.0, -2.5e-8, 4.0, 0.0, 1e300;
    const Eigen::MatrixXd back = matrix_from_json(matrix_to_json(m));
    REQUIRE(back.rows() == 2);
    REQUIRE(back.cols() == 3);
    CHECK(back == m);

    CHECK_THROWS(matrix_from_json(nlohmann::json{{"rows", 2}, {"cols", 2}}));
}

TEST_CASE("universe json round trip preserves classes, roles and shift") {
    UniverseConfig cfg;
    cfg.d = 3;
    cfg.n_base = 3;
    cfg.n_val = 2;
    cfg.n_novel = 2;
    cfg.n_extra = 1;
    cfg.separation = 1.5;
    cfg.shift_strength = 0.75;
    cfg.stddev = 0.4;
    cfg.seed = 19;
    const ClassUniverse u = generate_universe(cfg);
    const ClassUniverse back = universe_from_json(universe_to_json(u));

    CHECK(back.dim == u.dim);
    CHECK(back.shift_strength == u.shift_strength);
    REQUIRE(back.classes.size() == u.classes.size());
    for (std::size_t i = 0; i < u.classes.size(); ++i) {
        CHECK(back.classes[i].class_id == u.classes[i].class_id);
        CHECK(back.classes[i].mean == u.classes[i].mean);
        CHECK(back.classes[i].stddev == u.classes[i].stddev);
    }
    CHECK(back.roles.base == u.roles.base);
    CHECK(back.roles.val == u.roles.val);
    CHECK(back.roles.novel == u.roles.novel);
    CHECK(back.roles.large == u.roles.large);
}

TEST_CASE("distribution json: tagged variants and the bare-array shorthand") {
    const TaskDistribution uniform = UniformTuple{{3, 1, 4}};
    const TaskDistribution interp = Interpolated{{1, 2}, {8, 9}, 0.25};
    const TaskDistribution attrs = AttributePairDist{{0, 2, 5}, {}};
    const TaskDistribution finite =
        FiniteTaskList{{ClassTuple{1, 2}, AttrPair{4, 7}}};

    {
        const auto back = distribution_from_json(distribution_to_json(uniform));
        CHECK(std::get<UniformTuple>(back).class_set == std::vector<int>{3, 1, 4});
    }
    {
        const auto back = distribution_from_json(distribution_to_json(interp));
        const auto& ip = std::get<Interpolated>(back);
        CHECK(ip.base_set == std::vector<int>{1, 2});
        CHECK(ip.novel_set == std::vector<int>{8, 9});
        CHECK(ip.lambda == 0.25);
    }
    {
        const auto back = distribution_from_json(distribution_to_json(attrs));
        CHECK(std::get<AttributePairDist>(back).attr_set == std::vector<int>{0, 2, 5});
    }
    {
        const auto back = distribution_from_json(distribution_to_json(finite));
        const auto& list = std::get<FiniteTaskList>(back);
        REQUIRE(list.tasks.size() == 2);
        CHECK(std::get<ClassTuple>(list.tasks[0]) == ClassTuple{1, 2});
        CHECK(std::get<AttrPair>(list.tasks[1]) == AttrPair{4, 7});
    }
    {
        // a bare array with a reversed attr pair loads canonically
        const nlohmann::json bare = nlohmann::json::parse(
            R"([[5, 6, 7], {"attr_pair": [9, 3]}])");
        const auto back = distribution_from_json(bare);
        const auto& list = std::get<FiniteTaskList>(back);
        REQUIRE(list.tasks.size() == 2);
        CHECK(std::get<ClassTuple>(list.tasks[0]) == ClassTuple{5, 6, 7});
        CHECK(std::get<AttrPair>(list.tasks[1]) == AttrPair{3, 9});
    }
    CHECK_THROWS(distribution_from_json(nlohmann::json{{"kind", "nope"}}));
}

TEST_CASE("trajectory jsonl round trip keeps snapshots and estimates") {
    SnapshotTrajectory traj;
    for (int e = 1; e <= 3; ++e) {
        Snapshot s;
        s.epoch = e;
        s.params.w = Eigen::MatrixXd::Random(2, 4);
        s.params.scale = 1.0 + 0.1 * e;
        s.train_loss = 1.0 / e;
        traj.snapshots.push_back(s);
    }
    traj.diverged = false;
    traj.estimates["base"] = {GenEstimate{0.5, 0.01, 100}, GenEstimate{0.6, 0.02, 100},
                              GenEstimate{0.7, 0.03, 100}};
    traj.estimates["novel"] = {GenEstimate{0.4, 0.01, 100}, GenEstimate{0.5, 0.02, 100},
                               GenEstimate{0.55, 0.03, 100}};

    std::stringstream buffer;
    trajectory_to_jsonl(traj, buffer);
    const SnapshotTrajectory back = trajectory_from_jsonl(buffer);

    CHECK(back.diverged == traj.diverged);
    REQUIRE(back.snapshots.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.snapshots[i].epoch == traj.snapshots[i].epoch);
        CHECK(back.snapshots[i].params.w == traj.snapshots[i].params.w);
        CHECK(back.snapshots[i].params.scale == traj.snapshots[i].params.scale);
        CHECK(back.snapshots[i].train_loss == traj.snapshots[i].train_loss);
    }
    REQUIRE(back.estimates.size() == 2);
    for (const auto& [name, col] : traj.estimates)
        for (std::size_t i = 0; i < col.size(); ++i) {
            CHECK(back.estimates.at(name)[i].mean_acc == col[i].mean_acc);
            CHECK(back.estimates.at(name)[i].ci95_halfwidth == col[i].ci95_halfwidth);
            CHECK(back.estimates.at(name)[i].n_tasks == col[i].n_tasks);
        }

    // count mismatch between the meta line and the body must be rejected
    std::stringstream corrupted;
    trajectory_to_jsonl(traj, corrupted);
    std::string text = corrupted.str();
    text.erase(text.rfind('\n', text.size() - 2));  // drop the last snapshot line
    std::stringstream truncated(text);
    CHECK_THROWS(trajectory_from_jsonl(truncated));
}

TEST_CASE("sampler json keeps fixml exemplars keyed by class") {
    SupportSampler fixml;
    fixml.mode = SupportSampler::Mode::FixML;
    fixml.k_shot = 2;
    fixml.exemplars[4] = Eigen::MatrixXd::Random(2, 3);
    fixml.exemplars[9] = Eigen::MatrixXd::Random(2, 3);
    const SupportSampler back = sampler_from_json(sampler_to_json(fixml));
    CHECK(back.mode == SupportSampler::Mode::FixML);
    CHECK(back.k_shot == 2);
    REQUIRE(back.exemplars.size() == 2);
    CHECK(back.exemplars.at(4) == fixml.exemplars.at(4));
    CHECK(back.exemplars.at(9) == fixml.exemplars.at(9));

    const SupportSampler standard = sampler_from_json(sampler_to_json(SupportSampler{}));
    CHECK(standard.mode == SupportSampler::Mode::Standard);
}

TEST_CASE("csv writer emits comments, header, rows and checks widths") {
    std::stringstream out;
    write_csv(out, {{"config_hash", "abc123"}}, {"lambda", "acc"},
              {{"0", "0.5"}, {"1", format_double(2.0 / 3.0)}});
    const std::string expected = "# config_hash=abc123\n"
                                 "lambda,acc\n"
                                 "0,0.5\n"
                                 "1,0.66666666666666663\n";
    CHECK(out.str() == expected);

    std::stringstream bad;
    CHECK_THROWS(write_csv(bad, {}, {"a", "b"}, {{"only-one"}}));
}
