#include "fsleval/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "fsleval/coverage.hpp"
#include "fsleval/flip.hpp"
#include "fsleval/serialize.hpp"
#include "fsleval/splits.hpp"

namespace fsleval {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string now_iso8601() {
    const std::time_t tt =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

const json& field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ConfigError(std::string("missing config field: ") + name);
    return *it;
}

UniverseConfig parse_universe_config(const json& j, std::uint64_t default_seed) {
    UniverseConfig c;
    c.d = field(j, "d").get<int>();
    c.n_base = j.value("n_base", 0);
    c.n_val = j.value("n_val", 0);
    c.n_novel = j.value("n_novel", 0);
    c.n_extra = j.value("n_extra", 0);
    c.separation = j.value("separation", 1.0);
    c.shift_strength = j.value("shift_strength", 0.0);
    c.stddev = j.value("stddev", 1.0);
    c.seed = j.value("seed", default_seed);
    return c;
}

CatalogConfig parse_catalog_config(const json& j, std::uint64_t default_seed) {
    CatalogConfig c;
    c.n_items = field(j, "n_items").get<int>();
    c.n_attributes = field(j, "n_attributes").get<int>();
    c.attrs_per_item = field(j, "attrs_per_item").get<int>();
    c.d = j.value("d", 2);
    c.block_bias = j.value("block_bias", 0.9);
    c.seed = j.value("seed", default_seed);
    return c;
}

LearnerKind parse_learner(const json& j) {
    const auto kind = field(j, "kind").get<std::string>();
    if (kind == "proto") return ProtoKind{};
    if (kind == "ridge") {
        RidgeKind k;
        k.lambda_reg = j.value("lambda_reg", k.lambda_reg);
        return k;
    }
    if (kind == "svm") {
        SvmKind k;
        k.c_reg = j.value("c_reg", k.c_reg);
        k.iters = j.value("iters", k.iters);
        return k;
    }
    if (kind == "fomaml") {
        FomamlKind k;
        k.inner_lr = j.value("inner_lr", k.inner_lr);
        k.inner_steps_train = j.value("inner_steps_train", k.inner_steps_train);
        k.inner_steps_eval = j.value("inner_steps_eval", k.inner_steps_eval);
        k.adapt_embedding = j.value("adapt_embedding", k.adapt_embedding);
        return k;
    }
    throw ConfigError("unknown learner kind: " + kind);
}

std::string learner_name(const LearnerKind& kind) {
    if (std::holds_alternative<ProtoKind>(kind)) return "proto";
    if (std::holds_alternative<RidgeKind>(kind)) return "ridge";
    if (std::holds_alternative<SvmKind>(kind)) return "svm";
    return "fomaml";
}

EpisodeSpec parse_episode(const json& j) {
    EpisodeSpec s;
    s.n_way = field(j, "n_way").get<int>();
    s.k_shot = field(j, "k_shot").get<int>();
    s.q_query = field(j, "q_query").get<int>();
    return s;
}

TrainingConfig parse_training(const json& j, std::uint64_t seed) {
    TrainingConfig c;
    c.epochs = field(j, "epochs").get<int>();
    c.episodes_per_epoch = field(j, "episodes_per_epoch").get<int>();
    c.task_batch = j.value("task_batch", 1);
    if (j.contains("lr_schedule")) {
        c.lr_schedule.clear();
        for (const json& row : j.at("lr_schedule")) {
            if (!row.is_array() || row.size() != 2)
                throw ConfigError("lr_schedule entries must be [start_epoch, rate]");
            c.lr_schedule.emplace_back(row[0].get<int>(), row[1].get<double>());
        }
    }
    c.weight_decay = j.value("weight_decay", 0.0);
    c.seed = seed;
    return c;
}

TupleDistributionModel parse_model(const json& j) {
    TupleDistributionModel m;
    m.l = field(j, "l").get<int>();
    m.n = field(j, "n").get<int>();
    m.gamma = j.value("gamma", 1.0);
    if (j.contains("probs")) m.probs = j.at("probs").get<std::vector<double>>();
    return m;
}

EmbeddingParams parse_embedding_init(const json& j, int d_in,
                                     std::uint64_t seed) {
    EmbeddingParams p;
    const int d_out = field(j, "d_out").get<int>();
    p.scale = j.value("scale", 1.0);
    const auto init = j.value("init", std::string("gaussian"));
    if (init == "identity") {
        if (d_out > d_in)
            throw ConfigError("identity init needs d_out <= universe dim");
        p.w = Eigen::MatrixXd::Identity(d_out, d_in);
    } else if (init == "gaussian") {
        Rng rng(seed);
        p.w.resize(d_out, d_in);
        const double s = 1.0 / std::sqrt(static_cast<double>(d_in));
        for (int r = 0; r < d_out; ++r)
            for (int c = 0; c < d_in; ++c) p.w(r, c) = s * rng.normal();
    } else {
        throw ConfigError("unknown embedding init: " + init);
    }
    return p;
}

const std::vector<int>& role_set(const ClassUniverse& universe,
                                 const std::string& name) {
    if (name == "base") return universe.roles.base;
    if (name == "val") return universe.roles.val;
    if (name == "novel") return universe.roles.novel;
    if (name == "large") return universe.roles.large;
    throw ConfigError("unknown role set: " + name);
}

// Named evaluation sources: plain role names, or {"name": ..., "dist": {...}}.
std::map<std::string, EpisodeSource> parse_eval_sources(
    const json& j, const ClassUniverse& universe, const EpisodeSpec& spec) {
    std::map<std::string, EpisodeSource> sources;
    for (const json& entry : j) {
        std::string name;
        TaskDistribution dist;
        if (entry.is_string()) {
            name = entry.get<std::string>();
            dist = UniformTuple{role_set(universe, name)};
        } else {
            name = field(entry, "name").get<std::string>();
            dist = distribution_from_json(field(entry, "dist"));
        }
        EpisodeSource src;
        src.universe = &universe;
        src.dist = std::move(dist);
        src.spec = spec;
        sources.emplace(std::move(name), std::move(src));
    }
    if (sources.empty()) throw ConfigError("no evaluation distributions given");
    return sources;
}

std::filesystem::path resolve_out_dir(const json& config,
                                      const std::filesystem::path& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (config.contains("output_dir"))
        return config.at("output_dir").get<std::string>();
    if (const char* env = std::getenv("FSLEVAL_OUT")) return env;
    return "fsleval-out";
}

// ---------------------------------------------------------------------------

struct ScenarioContext {
    const json& config;
    std::filesystem::path out_dir;
    std::uint64_t seed;
    std::string hash;
    std::vector<std::string> outputs;

    void write_json(const std::string& name, const json& j) {
        write_text_file(out_dir / name, j.dump(2) + "\n");
        outputs.push_back(name);
    }

    void write_csv_file(const std::string& name,
                        const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
        std::ostringstream out;
        write_csv(out, {{"config_hash", hash}}, header, rows);
        write_text_file(out_dir / name, out.str());
        outputs.push_back(name);
    }
};

void run_coverage_scenario(ScenarioContext& ctx) {
    const TupleDistributionModel model = parse_model(field(ctx.config, "model"));
    const int n_train = field(ctx.config, "n_train").get<int>();
    const int n_test = ctx.config.value("n_test", n_train);
    const auto trials = field(ctx.config, "trials").get<long long>();
    const double eta = ctx.config.value("eta", 0.5);

    const BoundReport report = verify_bounds(
        model, n_train, n_test, trials, derive_seed(ctx.seed, "coverage"), eta);
    ctx.write_json("bound_report.json", bound_report_to_json(model, report));

    std::map<int, long long> hist;
    for (int z : report.sim.z_samples) ++hist[z];
    std::vector<std::vector<std::string>> rows;
    for (const auto& [z, count] : hist)
        rows.push_back({std::to_string(z), std::to_string(count)});
    ctx.write_csv_file("coverage_z.csv", {"z", "count"}, rows);
}

void run_split_scenario(ScenarioContext& ctx) {
    bool did_anything = false;
    if (ctx.config.contains("class_partition")) {
        const json& pj = ctx.config.at("class_partition");
        std::vector<int> ids;
        if (pj.contains("class_ids"))
            ids = pj.at("class_ids").get<std::vector<int>>();
        else {
            const int n = field(pj, "n_classes").get<int>();
            ids.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
        }
        Rng rng(derive_seed(ctx.seed, "partition"));
        const SplitSpec split = random_class_partition(
            ids, field(pj, "n_base").get<int>(), field(pj, "n_val").get<int>(),
            field(pj, "n_novel").get<int>(), rng);
        ctx.write_json("split.json", split_to_json(split));
        did_anything = true;
    }
    if (ctx.config.contains("catalog")) {
        const ItemCatalog catalog = generate_item_catalog(parse_catalog_config(
            ctx.config.at("catalog"), derive_seed(ctx.seed, "catalog")));
        const AttributeGraph graph = build_attribute_graph(catalog);
        const Bipartition cut = spectral_bipartition(graph);
        ctx.write_json("bipartition.json",
                       bipartition_to_json(cut, catalog.attribute_names));
        if (ctx.config.value("emit_catalog", false))
            ctx.write_json("catalog.json", catalog_to_json(catalog));
        did_anything = true;
    }
    if (!did_anything)
        throw ConfigError("split scenario needs class_partition and/or catalog");
}

std::vector<std::vector<std::string>> trajectory_report_rows(
    const SnapshotTrajectory& trajectory) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < trajectory.snapshots.size(); ++i) {
        std::vector<std::string> row{
            std::to_string(trajectory.snapshots[i].epoch),
            format_double(trajectory.snapshots[i].train_loss)};
        for (const auto& [name, list] : trajectory.estimates) {
            row.push_back(format_double(list[i].mean_acc));
            row.push_back(format_double(list[i].ci95_halfwidth));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<std::string> trajectory_report_header(
    const SnapshotTrajectory& trajectory) {
    std::vector<std::string> header{"epoch", "train_loss"};
    for (const auto& [name, list] : trajectory.estimates) {
        header.push_back(name + "_mean");
        header.push_back(name + "_ci95");
    }
    return header;
}

void run_train_scenario(ScenarioContext& ctx) {
    const UniverseConfig uc = parse_universe_config(
        field(ctx.config, "universe"), derive_seed(ctx.seed, "universe"));
    const ClassUniverse universe = generate_universe(uc);
    const LearnerKind kind = parse_learner(field(ctx.config, "learner"));
    const EpisodeSpec spec = parse_episode(field(ctx.config, "episode"));
    const EmbeddingParams init = parse_embedding_init(
        field(ctx.config, "embedding"), universe.dim, derive_seed(ctx.seed, "init"));
    const TrainingConfig training = parse_training(field(ctx.config, "training"),
                                                   derive_seed(ctx.seed, "train"));

    TaskDistribution train_dist = UniformTuple{universe.roles.base};
    if (ctx.config.contains("train_dist"))
        train_dist = distribution_from_json(ctx.config.at("train_dist"));

    SupportSampler sampler;
    const int fixml_k = ctx.config.value("fixml_k", 0);
    if (fixml_k > 0)
        sampler = make_fixml_sampler(universe, universe.roles.base, fixml_k,
                                     derive_seed(ctx.seed, "exemplars"));

    SnapshotTrajectory trajectory =
        meta_train(kind, train_dist, universe, spec, sampler, init, training);

    if (ctx.config.contains("eval")) {
        const json& ej = ctx.config.at("eval");
        const auto sources = parse_eval_sources(field(ej, "distributions"),
                                                universe, spec);
        evaluate_trajectory(trajectory, kind, sources,
                            field(ej, "n_tasks").get<int>(),
                            derive_seed(ctx.seed, "eval"));
    }

    ctx.write_json("universe.json", universe_to_json(universe));
    std::ostringstream traj;
    trajectory_to_jsonl(trajectory, traj);
    write_text_file(ctx.out_dir / "trajectory.jsonl", traj.str());
    ctx.outputs.push_back("trajectory.jsonl");
    if (!trajectory.estimates.empty())
        ctx.write_csv_file("trajectory_report.csv",
                           trajectory_report_header(trajectory),
                           trajectory_report_rows(trajectory));
}

SnapshotTrajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    try {
        return trajectory_from_jsonl(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed trajectory in " + path.string() + ": " +
                          e.what());
    }
}

void run_trajectory_report_scenario(ScenarioContext& ctx) {
    const ClassUniverse universe = universe_from_json(load_json_file(
        field(ctx.config, "universe_path").get<std::string>()));
    SnapshotTrajectory trajectory = load_trajectory(
        field(ctx.config, "trajectory_path").get<std::string>());
    const LearnerKind kind = parse_learner(field(ctx.config, "learner"));
    const EpisodeSpec spec = parse_episode(field(ctx.config, "episode"));
    const json& ej = field(ctx.config, "eval");
    const auto sources =
        parse_eval_sources(field(ej, "distributions"), universe, spec);
    evaluate_trajectory(trajectory, kind, sources, field(ej, "n_tasks").get<int>(),
                        derive_seed(ctx.seed, "eval"));
    std::ostringstream traj;
    trajectory_to_jsonl(trajectory, traj);
    write_text_file(ctx.out_dir / "trajectory_eval.jsonl", traj.str());
    ctx.outputs.push_back("trajectory_eval.jsonl");
    ctx.write_csv_file("trajectory_report.csv", trajectory_report_header(trajectory),
                       trajectory_report_rows(trajectory));
}

void run_rank_corr_scenario(ScenarioContext& ctx) {
    const SnapshotTrajectory trajectory = load_trajectory(
        field(ctx.config, "trajectory_path").get<std::string>());
    const auto dist_a = field(ctx.config, "dist_a").get<std::string>();
    const auto dist_b = field(ctx.config, "dist_b").get<std::string>();
    const int window = field(ctx.config, "tail_window").get<int>();
    const double tau = rank_similarity_report(trajectory, dist_a, dist_b, window);
    ctx.write_json("rank_corr.json", json{{"dist_a", dist_a},
                                          {"dist_b", dist_b},
                                          {"tail_window", window},
                                          {"kendall_tau", tau}});
}

void run_flip_scenario(ScenarioContext& ctx) {
    FlipConfig fc;
    fc.subset_size = field(ctx.config, "subset_size").get<int>();
    fc.repeats = ctx.config.value("repeats", 1000);
    fc.tasks_per_eval = ctx.config.value("tasks_per_eval", 1);
    fc.delta = ctx.config.value("delta", 0.01);
    fc.exhaustive_subsets = ctx.config.value("exhaustive", false);
    fc.seed = derive_seed(ctx.seed, "flip");
    if (ctx.config.contains("episode"))
        fc.spec = parse_episode(ctx.config.at("episode"));

    const auto mode = ctx.config.value("mode", std::string("analytic"));
    std::unique_ptr<Evaluatable> e1, e2;
    std::unique_ptr<ClassUniverse> universe;

    if (mode == "analytic") {
        if (ctx.config.contains("large_set"))
            fc.large_set = ctx.config.at("large_set").get<std::vector<int>>();
        else {
            const int n = field(ctx.config, "n_classes").get<int>();
            for (int i = 0; i < n; ++i) fc.large_set.push_back(i);
        }
        auto table = [&](const char* key) {
            const auto acc = field(ctx.config, key).get<std::vector<double>>();
            if (acc.size() != fc.large_set.size())
                throw ConfigError(std::string(key) +
                                  " length must match the large set");
            std::map<int, double> by_class;
            for (std::size_t i = 0; i < acc.size(); ++i)
                by_class[fc.large_set[i]] = acc[i];
            return by_class;
        };
        e1 = std::make_unique<AnalyticEvaluatable>(table("acc_a"));
        e2 = std::make_unique<AnalyticEvaluatable>(table("acc_b"));
    } else if (mode == "learner") {
        universe = std::make_unique<ClassUniverse>(universe_from_json(
            load_json_file(field(ctx.config, "universe_path").get<std::string>())));
        if (ctx.config.contains("large_set"))
            fc.large_set = ctx.config.at("large_set").get<std::vector<int>>();
        else
            fc.large_set = universe->roles.large;
        auto load_side = [&](const char* learner_key, const char* snapshot_key) {
            const LearnerKind kind = parse_learner(field(ctx.config, learner_key));
            const Snapshot snap = snapshot_from_json(load_json_file(
                field(ctx.config, snapshot_key).get<std::string>()));
            return std::make_unique<LearnerEvaluatable>(kind, snap.params);
        };
        e1 = load_side("learner_a", "snapshot_a_path");
        e2 = load_side("learner_b", "snapshot_b_path");
    } else {
        throw ConfigError("unknown flip mode: " + mode);
    }

    if (ctx.config.contains("epsilon")) {
        fc.epsilon = ctx.config.at("epsilon").get<double>();
    } else if (e1->exact() && e2->exact()) {
        fc.epsilon = e1->subset_accuracy(fc.large_set) -
                     e2->subset_accuracy(fc.large_set);
    } else {
        const int t_large = ctx.config.value("t_large", 1000);
        fc.epsilon = true_performance(*e1, fc.large_set, fc.spec, t_large,
                                      universe.get(),
                                      derive_seed(ctx.seed, "true-perf", 0)) -
                     true_performance(*e2, fc.large_set, fc.spec, t_large,
                                      universe.get(),
                                      derive_seed(ctx.seed, "true-perf", 1));
    }

    const FlipReport report = flip_experiment(*e1, *e2, fc, universe.get());
    ctx.write_json("flip_report.json", flip_report_to_json(report));

    std::vector<std::vector<std::string>> rows;
    for (const auto& [gap, cum] : gap_cdf(report))
        rows.push_back({format_double(gap), format_double(cum)});
    ctx.write_csv_file("gap_cdf.csv", {"gap", "cdf"}, rows);
}

SelectionStrategy parse_selection(const std::string& name) {
    if (name == "last") return SelectionStrategy::LastSnapshot;
    if (name == "best_train_loss") return SelectionStrategy::BestTrainLoss;
    if (name == "best_base") return SelectionStrategy::BestBaseGen;
    if (name == "best_val") return SelectionStrategy::BestValGen;
    throw ConfigError("unknown selection strategy: " + name);
}

void run_sweep_scenario(ScenarioContext& ctx) {
    const ClassUniverse universe = universe_from_json(load_json_file(
        field(ctx.config, "universe_path").get<std::string>()));
    const SnapshotTrajectory trajectory = load_trajectory(
        field(ctx.config, "trajectory_path").get<std::string>());
    const LearnerKind kind = parse_learner(field(ctx.config, "learner"));
    const EpisodeSpec spec = parse_episode(field(ctx.config, "episode"));
    const auto lambdas = field(ctx.config, "lambdas").get<std::vector<double>>();
    const int n_tasks = field(ctx.config, "n_tasks").get<int>();
    const SelectionStrategy strategy =
        parse_selection(ctx.config.value("selection", std::string("best_val")));

    const Snapshot& snap = select_snapshot(trajectory, strategy);
    const auto rows = interpolate_sweep(universe, kind, snap.params, spec,
                                        lambdas, n_tasks,
                                        derive_seed(ctx.seed, "sweep"));

    const std::string lname = learner_name(kind);
    std::vector<std::vector<std::string>> csv;
    for (const SweepRow& row : rows)
        csv.push_back({format_double(row.lambda), lname,
                       format_double(row.estimate.mean_acc),
                       format_double(row.estimate.ci95_halfwidth)});
    ctx.write_csv_file("sweep.csv", {"lambda", "learner", "mean_acc", "ci95"},
                       csv);
    ctx.write_json("sweep_snapshot.json",
                   json{{"selected_epoch", snap.epoch},
                        {"selection", ctx.config.value("selection",
                                                       std::string("best_val"))}});
}

}  // namespace

std::string config_hash(const json& config) {
    const std::uint64_t h = fnv1a64(config.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

std::vector<SweepRow> interpolate_sweep(const ClassUniverse& universe,
                                        const LearnerKind& kind,
                                        const EmbeddingParams& params,
                                        const EpisodeSpec& spec,
                                        const std::vector<double>& lambdas,
                                        int n_tasks, std::uint64_t sweep_seed) {
    if (lambdas.empty()) throw std::invalid_argument("empty lambda grid");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        EpisodeSource src;
        src.universe = &universe;
        src.dist = Interpolated{universe.roles.base, universe.roles.novel,
                                lambdas[i]};
        src.spec = spec;
        rows.push_back({lambdas[i],
                        estimate_gen(params, kind, src, n_tasks,
                                     derive_seed(sweep_seed, "lambda", i))});
    }
    return rows;
}

ScenarioResult run_scenario(const json& config,
                            const std::filesystem::path& out_dir_override) {
    ScenarioContext ctx{config, resolve_out_dir(config, out_dir_override), 0, {}, {}};
    if (!config.contains("scenario"))
        throw ConfigError("missing config field: scenario");
    if (!config.contains("seed"))
        throw ConfigError("missing config field: seed (runs never self-seed)");

    RunManifest manifest;
    manifest.version = kVersion;
    manifest.config_hash = config_hash(config);
    manifest.started_at = now_iso8601();

    try {
        ctx.seed = config.at("seed").get<std::uint64_t>();
        ctx.hash = manifest.config_hash;
        manifest.seed = ctx.seed;
        std::filesystem::create_directories(ctx.out_dir);

        const auto scenario = config.at("scenario").get<std::string>();
        if (scenario == "coverage")
            run_coverage_scenario(ctx);
        else if (scenario == "split")
            run_split_scenario(ctx);
        else if (scenario == "train")
            run_train_scenario(ctx);
        else if (scenario == "trajectory-report")
            run_trajectory_report_scenario(ctx);
        else if (scenario == "rank-corr")
            run_rank_corr_scenario(ctx);
        else if (scenario == "flip")
            run_flip_scenario(ctx);
        else if (scenario == "sweep")
            run_sweep_scenario(ctx);
        else
            throw ConfigError("unknown scenario: " + scenario);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }

    manifest.finished_at = now_iso8601();
    manifest.outputs = ctx.outputs;
    write_text_file(ctx.out_dir / "manifest.json",
                    json{{"version", manifest.version},
                         {"config_hash", manifest.config_hash},
                         {"seed", manifest.seed},
                         {"started_at", manifest.started_at},
                         {"finished_at", manifest.finished_at},
                         {"outputs", manifest.outputs}}
                            .dump(2) +
                        "\n");
    return ScenarioResult{std::move(manifest), std::move(ctx.out_dir)};
}

ScenarioResult run_scenario_file(const std::filesystem::path& config_path,
                                 const std::filesystem::path& out_dir_override) {
    return run_scenario(load_json_file(config_path), out_dir_override);
}

}  // namespace fsleval
