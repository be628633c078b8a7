#include "fsleval/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fsleval {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

std::vector<int> int_list(const json& j) {
    return j.get<std::vector<int>>();
}

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    require(rows >= 0 && cols >= 0, "negative matrix shape");
    require(static_cast<Eigen::Index>(data.size()) == rows * cols,
            "matrix data length does not match shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
    return m;
}

json split_to_json(const SplitSpec& split) {
    return json{{"base", split.base},
                {"val", split.val},
                {"novel", split.novel},
                {"large", split.large}};
}

SplitSpec split_from_json(const json& j) {
    SplitSpec s;
    s.base = int_list(j.at("base"));
    s.val = int_list(j.at("val"));
    s.novel = int_list(j.at("novel"));
    if (j.contains("large")) s.large = int_list(j.at("large"));
    return s;
}

json universe_to_json(const ClassUniverse& universe) {
    json classes = json::array();
    for (const ClassSpec& c : universe.classes) {
        std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
        classes.push_back(json{{"class_id", c.class_id},
                               {"mean", mean},
                               {"stddev", c.stddev}});
    }
    return json{{"version", kSchemaVersion},
                {"dim", universe.dim},
                {"classes", classes},
                {"roles", split_to_json(universe.roles)},
                {"shift_strength", universe.shift_strength}};
}

ClassUniverse universe_from_json(const json& j) {
    ClassUniverse u;
    u.dim = j.at("dim").get<int>();
    u.roles = split_from_json(j.at("roles"));
    u.shift_strength = j.value("shift_strength", 0.0);
    for (const json& cj : j.at("classes")) {
        ClassSpec c;
        c.class_id = cj.at("class_id").get<int>();
        const auto mean = cj.at("mean").get<std::vector<double>>();
        require(static_cast<int>(mean.size()) == u.dim,
                "class mean dimension does not match universe dim");
        c.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                   static_cast<Eigen::Index>(mean.size()));
        c.stddev = cj.at("stddev").get<double>();
        u.classes.push_back(std::move(c));
    }
    return u;
}

json catalog_to_json(const ItemCatalog& catalog) {
    json items = json::array();
    for (const ItemCatalog::Item& item : catalog.items) {
        std::vector<int> attrs;
        for (int a = 0; a < static_cast<int>(item.attrs.size()); ++a)
            if (item.attrs[a]) attrs.push_back(a);
        std::vector<double> feature(item.feature.data(),
                                    item.feature.data() + item.feature.size());
        items.push_back(json{{"item_id", item.item_id},
                             {"attrs", attrs},
                             {"feature", feature}});
    }
    return json{{"version", kSchemaVersion},
                {"dim", catalog.dim},
                {"attribute_names", catalog.attribute_names},
                {"items", items}};
}

ItemCatalog catalog_from_json(const json& j) {
    ItemCatalog c;
    c.dim = j.at("dim").get<int>();
    c.attribute_names = j.at("attribute_names").get<std::vector<std::string>>();
    const int n_attr = c.n_attributes();
    for (const json& ij : j.at("items")) {
        ItemCatalog::Item item;
        item.item_id = ij.at("item_id").get<int>();
        item.attrs.assign(static_cast<std::size_t>(n_attr), false);
        for (int a : int_list(ij.at("attrs"))) {
            require(a >= 0 && a < n_attr, "attribute index out of range");
            item.attrs[static_cast<std::size_t>(a)] = true;
        }
        const auto feature = ij.at("feature").get<std::vector<double>>();
        require(static_cast<int>(feature.size()) == c.dim,
                "item feature dimension does not match catalog dim");
        item.feature = Eigen::Map<const Eigen::VectorXd>(
            feature.data(), static_cast<Eigen::Index>(feature.size()));
        c.items.push_back(std::move(item));
    }
    return c;
}

json bipartition_to_json(const Bipartition& partition,
                         const std::vector<std::string>& names) {
    json out{{"set_a", partition.set_a},
             {"set_b", partition.set_b},
             {"size_a", partition.set_a.size()},
             {"size_b", partition.set_b.size()},
             {"cut_weight", partition.cut_weight},
             {"fiedler_value", partition.fiedler_value}};
    if (!names.empty()) {
        auto resolve = [&](const std::vector<int>& side) {
            std::vector<std::string> labels;
            for (int i : side) labels.push_back(names.at(static_cast<std::size_t>(i)));
            return labels;
        };
        out["names_a"] = resolve(partition.set_a);
        out["names_b"] = resolve(partition.set_b);
    }
    return out;
}

namespace {

json task_to_json(const Task& task) {
    if (std::holds_alternative<ClassTuple>(task))
        return json(std::get<ClassTuple>(task));
    const AttrPair& p = std::get<AttrPair>(task);
    return json{{"attr_pair", {p.first, p.second}}};
}

Task task_from_json(const json& j) {
    if (j.is_array()) return ClassTuple(int_list(j));
    const auto pair = j.at("attr_pair").get<std::vector<int>>();
    require(pair.size() == 2, "attr_pair needs exactly two attribute ids");
    return AttrPair{std::min(pair[0], pair[1]), std::max(pair[0], pair[1])};
}

}  // namespace

json distribution_to_json(const TaskDistribution& dist) {
    if (const auto* u = std::get_if<UniformTuple>(&dist))
        return json{{"kind", "uniform_tuple"}, {"class_set", u->class_set}};
    if (const auto* i = std::get_if<Interpolated>(&dist))
        return json{{"kind", "interpolated"},
                    {"base_set", i->base_set},
                    {"novel_set", i->novel_set},
                    {"lambda", i->lambda}};
    if (const auto* a = std::get_if<AttributePairDist>(&dist)) {
        json out{{"kind", "attribute_pairs"}};
        if (!a->attr_set.empty()) out["attr_set"] = a->attr_set;
        if (!a->pairs.empty()) {
            json pairs = json::array();
            for (const AttrPair& p : a->pairs)
                pairs.push_back({p.first, p.second});
            out["pairs"] = pairs;
        }
        return out;
    }
    const auto& f = std::get<FiniteTaskList>(dist);
    json tasks = json::array();
    for (const Task& t : f.tasks) tasks.push_back(task_to_json(t));
    return json{{"kind", "finite"}, {"tasks", tasks}};
}

TaskDistribution distribution_from_json(const json& j) {
    if (j.is_array()) {  // bare task list
        FiniteTaskList f;
        for (const json& tj : j) f.tasks.push_back(task_from_json(tj));
        return f;
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "uniform_tuple") {
        UniformTuple u;
        u.class_set = int_list(j.at("class_set"));
        return u;
    }
    if (kind == "interpolated") {
        Interpolated i;
        i.base_set = int_list(j.at("base_set"));
        i.novel_set = int_list(j.at("novel_set"));
        i.lambda = j.at("lambda").get<double>();
        return i;
    }
    if (kind == "attribute_pairs") {
        AttributePairDist a;
        if (j.contains("attr_set")) a.attr_set = int_list(j.at("attr_set"));
        if (j.contains("pairs"))
            for (const json& pj : j.at("pairs")) {
                const auto p = pj.get<std::vector<int>>();
                require(p.size() == 2, "pair needs exactly two attribute ids");
                a.pairs.emplace_back(std::min(p[0], p[1]), std::max(p[0], p[1]));
            }
        return a;
    }
    if (kind == "finite") {
        FiniteTaskList f;
        for (const json& tj : j.at("tasks")) f.tasks.push_back(task_from_json(tj));
        return f;
    }
    throw std::invalid_argument("unknown task distribution kind: " + kind);
}

json sampler_to_json(const SupportSampler& sampler) {
    if (sampler.mode == SupportSampler::Mode::Standard)
        return json{{"mode", "standard"}};
    json exemplars = json::object();
    for (const auto& [class_id, rows] : sampler.exemplars)
        exemplars[std::to_string(class_id)] = matrix_to_json(rows);
    return json{{"mode", "fixml"},
                {"k_shot", sampler.k_shot},
                {"exemplars", exemplars}};
}

SupportSampler sampler_from_json(const json& j) {
    SupportSampler s;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "standard") return s;
    require(mode == "fixml", "unknown sampler mode");
    s.mode = SupportSampler::Mode::FixML;
    s.k_shot = j.at("k_shot").get<int>();
    for (const auto& [key, value] : j.at("exemplars").items())
        s.exemplars[std::stoi(key)] = matrix_from_json(value);
    return s;
}

json snapshot_to_json(const Snapshot& snapshot) {
    return json{{"epoch", snapshot.epoch},
                {"w", matrix_to_json(snapshot.params.w)},
                {"scale", snapshot.params.scale},
                {"train_loss", snapshot.train_loss}};
}

Snapshot snapshot_from_json(const json& j) {
    Snapshot s;
    s.epoch = j.at("epoch").get<int>();
    s.params.w = matrix_from_json(j.at("w"));
    s.params.scale = j.at("scale").get<double>();
    s.train_loss = j.at("train_loss").get<double>();
    return s;
}

namespace {

json estimate_to_json(const GenEstimate& e) {
    return json{{"mean_acc", e.mean_acc},
                {"ci95_halfwidth", e.ci95_halfwidth},
                {"n_tasks", e.n_tasks}};
}

GenEstimate estimate_from_json(const json& j) {
    GenEstimate e;
    e.mean_acc = j.at("mean_acc").get<double>();
    e.ci95_halfwidth = j.at("ci95_halfwidth").get<double>();
    e.n_tasks = j.at("n_tasks").get<int>();
    return e;
}

}  // namespace

void trajectory_to_jsonl(const SnapshotTrajectory& trajectory, std::ostream& out) {
    json estimates = json::object();
    for (const auto& [name, list] : trajectory.estimates) {
        json arr = json::array();
        for (const GenEstimate& e : list) arr.push_back(estimate_to_json(e));
        estimates[name] = arr;
    }
    out << json{{"version", kSchemaVersion},
                {"diverged", trajectory.diverged},
                {"n_snapshots", trajectory.snapshots.size()},
                {"estimates", estimates}}
        << '\n';
    for (const Snapshot& s : trajectory.snapshots) out << snapshot_to_json(s) << '\n';
}

SnapshotTrajectory trajectory_from_jsonl(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty trajectory file");
    const json meta = json::parse(line);
    SnapshotTrajectory t;
    t.diverged = meta.at("diverged").get<bool>();
    for (const auto& [name, arr] : meta.at("estimates").items()) {
        std::vector<GenEstimate> list;
        for (const json& ej : arr) list.push_back(estimate_from_json(ej));
        t.estimates[name] = std::move(list);
    }
    const auto n = meta.at("n_snapshots").get<std::size_t>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.snapshots.push_back(snapshot_from_json(json::parse(line)));
    }
    require(t.snapshots.size() == n, "snapshot count does not match meta line");
    for (const auto& [name, list] : t.estimates)
        require(list.size() == n, "estimate list length does not match snapshots");
    return t;
}

json flip_report_to_json(const FlipReport& report) {
    return json{{"flip_freq", report.flip_freq},
                {"exaggeration_freq", report.exaggeration_freq},
                {"true_gap", report.true_gap},
                {"n_samples", report.gap_samples.size()},
                {"gap_samples", report.gap_samples}};
}

json bound_report_to_json(const TupleDistributionModel& model,
                          const BoundReport& report) {
    json checks = json::array();
    for (const BoundCheck& c : report.checks)
        checks.push_back(json{{"name", c.name},
                              {"formula_value", c.formula_value},
                              {"empirical_value", c.empirical_value},
                              {"margin", c.margin},
                              {"pass", c.pass}});
    json out{{"model",
              json{{"l", model.l},
                   {"n", model.n},
                   {"gamma", model.gamma},
                   {"uniform", model.uniform()}}},
             {"params",
              json{{"n_train", report.sim.n_train},
                   {"n_test", report.sim.n_test},
                   {"trials", report.sim.trials},
                   {"eta", report.eta}}},
             {"mean_z", report.mean_z},
             {"var_z", report.var_z},
             {"checks", checks},
             {"all_pass", report.all_pass()},
             {"realized_gamma", report.realized_gamma},
             {"assumption1_ok", report.assumption1_ok},
             {"insufficient_samples", report.insufficient_samples}};
    if (std::isfinite(report.exact_ez)) out["exact_ez"] = report.exact_ez;
    return out;
}

void write_csv(std::ostream& out,
               const std::vector<std::pair<std::string, std::string>>& comments,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    for (const auto& [key, value] : comments)
        out << "# " << key << "=" << value << '\n';
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("csv row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << row[i];
        out << '\n';
    }
}

}  // namespace fsleval
