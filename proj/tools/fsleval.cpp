#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fsleval/parallel.hpp"
#include "fsleval/scenario.hpp"

using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fsleval::ConfigError("cannot open file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw fsleval::ConfigError("malformed JSON in " + path + ": " + e.what());
    }
}

json error_json(const char* kind, const std::string& message) {
    return json{{"error", json{{"kind", kind}, {"message", message}}}};
}

int execute(const json& config, const std::string& out_dir) {
    const fsleval::ScenarioResult result = fsleval::run_scenario(
        config, out_dir.empty() ? std::filesystem::path{}
                                : std::filesystem::path(out_dir));
    std::cout << json{{"out_dir", result.out_dir.string()},
                      {"config_hash", result.manifest.config_hash},
                      {"outputs", result.manifest.outputs}}
                     .dump(2)
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot evaluation methodology toolkit"};
    app.require_subcommand(1);
    int workers = 0;
    app.add_option("--workers", workers,
                   "cap on worker threads (0 = hardware default); never "
                   "affects output bytes");

    // Common per-subcommand state.
    std::string config_path, out_dir;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        sub->fallthrough();
        auto* opt = sub->add_option("--config", config_path,
                                    "scenario config JSON file");
        if (config_required) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "master seed (overrides config)");
        return sub;
    };

    std::string run_config;
    CLI::App* run = app.add_subcommand("run", "execute a scenario config file");
    run->fallthrough();
    run->add_option("config", run_config, "scenario config JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "master seed (overrides config)");

    CLI::App* coverage =
        add_common(app.add_subcommand(
                       "coverage", "simulate class coverage and verify bounds"),
                   false);
    int cov_l = 0, cov_n = 0, cov_n_train = 0, cov_n_test = 0;
    long long cov_trials = 0;
    double cov_gamma = 1.0, cov_eta = 0.5;
    coverage->add_option("--l", cov_l, "number of classes");
    coverage->add_option("--n", cov_n, "tuple size (way)");
    coverage->add_option("--gamma", cov_gamma, "appearance floor coefficient");
    coverage->add_option("--n-train", cov_n_train, "train tuples per trial");
    coverage->add_option("--n-test", cov_n_test, "test tuples per trial");
    coverage->add_option("--trials", cov_trials, "simulation trials");
    coverage->add_option("--eta", cov_eta, "small-coverage threshold factor");

    CLI::App* flip = add_common(
        app.add_subcommand("flip",
                           "subset-sampling flip/exaggeration experiment"),
        true);
    int flip_subset = 0, flip_repeats = 0;
    bool flip_exhaustive = false;
    flip->add_option("--subset-size", flip_subset, "sampled subset size");
    flip->add_option("--repeats", flip_repeats, "sampled subsets");
    flip->add_flag("--exhaustive", flip_exhaustive, "enumerate every subset");

    CLI::App* rank = add_common(
        app.add_subcommand("rank-corr",
                           "rank correlation between two evaluated "
                           "distributions of a trajectory"),
        false);
    std::string rank_traj, rank_a, rank_b;
    int rank_window = 0;
    rank->add_option("--trajectory", rank_traj, "trajectory JSONL path");
    rank->add_option("--dist-a", rank_a, "first distribution name");
    rank->add_option("--dist-b", rank_b, "second distribution name");
    rank->add_option("--window", rank_window, "tail snapshots to compare");

    CLI::App* train = add_common(
        app.add_subcommand("train", "meta-train and evaluate a trajectory"),
        true);
    int train_epochs = 0;
    train->add_option("--epochs", train_epochs, "training epochs (override)");

    CLI::App* sweep = add_common(
        app.add_subcommand("sweep", "interpolated base->novel evaluation sweep"),
        true);
    int sweep_tasks = 0;
    std::vector<double> sweep_lambdas;
    sweep->add_option("--n-tasks", sweep_tasks, "tasks per estimate (override)");
    sweep->add_option("--lambdas", sweep_lambdas, "lambda grid (override)");

    CLI::App* split = add_common(
        app.add_subcommand("split", "class partitions and attribute bipartition"),
        false);
    int sp_classes = 0, sp_base = 0, sp_val = 0, sp_novel = 0;
    split->add_option("--n-classes", sp_classes, "classes to partition");
    split->add_option("--n-base", sp_base, "base classes");
    split->add_option("--n-val", sp_val, "validation classes");
    split->add_option("--n-novel", sp_novel, "novel classes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << error_json("config", e.what()).dump() << "\n";
        return 2;
    }

    try {
        fsleval::set_worker_cap(workers);

        json config = config_path.empty() ? json::object()
                                          : load_config(config_path);
        auto override_if = [&](CLI::App* sub, const char* flag, auto&& apply) {
            if (sub->count(flag)) apply();
        };

        if (app.got_subcommand(run)) {
            config = load_config(run_config);
        } else if (app.got_subcommand(coverage)) {
            config["scenario"] = "coverage";
            override_if(coverage, "--l", [&] { config["model"]["l"] = cov_l; });
            override_if(coverage, "--n", [&] { config["model"]["n"] = cov_n; });
            override_if(coverage, "--gamma",
                        [&] { config["model"]["gamma"] = cov_gamma; });
            override_if(coverage, "--n-train",
                        [&] { config["n_train"] = cov_n_train; });
            override_if(coverage, "--n-test",
                        [&] { config["n_test"] = cov_n_test; });
            override_if(coverage, "--trials",
                        [&] { config["trials"] = cov_trials; });
            override_if(coverage, "--eta", [&] { config["eta"] = cov_eta; });
        } else if (app.got_subcommand(flip)) {
            config["scenario"] = "flip";
            override_if(flip, "--subset-size",
                        [&] { config["subset_size"] = flip_subset; });
            override_if(flip, "--repeats",
                        [&] { config["repeats"] = flip_repeats; });
            override_if(flip, "--exhaustive",
                        [&] { config["exhaustive"] = flip_exhaustive; });
        } else if (app.got_subcommand(rank)) {
            config["scenario"] = "rank-corr";
            override_if(rank, "--trajectory",
                        [&] { config["trajectory_path"] = rank_traj; });
            override_if(rank, "--dist-a", [&] { config["dist_a"] = rank_a; });
            override_if(rank, "--dist-b", [&] { config["dist_b"] = rank_b; });
            override_if(rank, "--window",
                        [&] { config["tail_window"] = rank_window; });
        } else if (app.got_subcommand(train)) {
            config["scenario"] = "train";
            override_if(train, "--epochs",
                        [&] { config["training"]["epochs"] = train_epochs; });
        } else if (app.got_subcommand(sweep)) {
            config["scenario"] = "sweep";
            override_if(sweep, "--n-tasks",
                        [&] { config["n_tasks"] = sweep_tasks; });
            override_if(sweep, "--lambdas",
                        [&] { config["lambdas"] = sweep_lambdas; });
        } else if (app.got_subcommand(split)) {
            config["scenario"] = "split";
            override_if(split, "--n-classes", [&] {
                config["class_partition"]["n_classes"] = sp_classes;
            });
            override_if(split, "--n-base", [&] {
                config["class_partition"]["n_base"] = sp_base;
            });
            override_if(split, "--n-val", [&] {
                config["class_partition"]["n_val"] = sp_val;
            });
            override_if(split, "--n-novel", [&] {
                config["class_partition"]["n_novel"] = sp_novel;
            });
        }

        for (CLI::App* sub : {run, coverage, flip, rank, train, sweep, split})
            if (app.got_subcommand(sub) && sub->count("--seed"))
                config["seed"] = seed;

        return execute(config, out_dir);
    } catch (const fsleval::ConfigError& e) {
        std::cout << error_json("config", e.what()).dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cout << error_json("runtime", e.what()).dump() << "\n";
        return 1;
    }
}
