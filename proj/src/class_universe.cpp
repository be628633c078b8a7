#include "fsleval/class_universe.hpp"

#include <algorithm>
#include <stdexcept>

namespace fsleval {

const ClassSpec& ClassUniverse::class_by_id(int id) const {
    for (const auto& c : classes)
        if (c.class_id == id) return c;
    throw std::invalid_argument("unknown class id " + std::to_string(id));
}

namespace {

Eigen::VectorXd gaussian_vector(int d, double scale, Rng& rng) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = scale * rng.normal();
    return v;
}

}  // namespace

ClassUniverse generate_universe(const UniverseConfig& config) {
    if (config.d < 1) throw std::invalid_argument("universe dimension must be >= 1");
    if (config.n_base < 0 || config.n_val < 0 || config.n_novel < 0 || config.n_extra < 0)
        throw std::invalid_argument("role counts must be >= 0");
    if (config.separation <= 0.0) throw std::invalid_argument("separation must be > 0");
    if (config.shift_strength < 0.0) throw std::invalid_argument("shift_strength must be >= 0");
    if (config.stddev <= 0.0) throw std::invalid_argument("stddev must be > 0");

    Rng master(config.seed);
    Rng base_rng = master.child("base-means");
    Rng val_rng = master.child("val-means");
    Rng novel_rng = master.child("novel-means");
    Rng extra_rng = master.child("extra-means");
    Rng dir_rng = master.child("shift-dir");

    Eigen::VectorXd dir = gaussian_vector(config.d, 1.0, dir_rng);
    double norm = dir.norm();
    if (norm > 0.0) dir /= norm;

    // Shifted roles keep the meta-distribution's shape but contract toward the
    // displaced center; contraction is what makes the mismatch visible to
    // translation-invariant learners.
    const double kappa = config.separation / (config.separation + config.shift_strength);
    const Eigen::VectorXd offset = config.shift_strength * dir;

    ClassUniverse u;
    u.dim = config.d;
    u.shift_strength = config.shift_strength;

    int next_id = 0;
    auto add_plain = [&](int count, Rng& rng, std::vector<int>& role) {
        for (int i = 0; i < count; ++i) {
            ClassSpec c;
            c.class_id = next_id++;
            c.mean = gaussian_vector(config.d, config.separation, rng);
            c.stddev = config.stddev;
            role.push_back(c.class_id);
            u.classes.push_back(std::move(c));
        }
    };
    auto add_shifted = [&](int count, Rng& rng, std::vector<int>* role) {
        for (int i = 0; i < count; ++i) {
            ClassSpec c;
            c.class_id = next_id++;
            c.mean = kappa * gaussian_vector(config.d, config.separation, rng) + offset;
            c.stddev = config.stddev;
            if (role) role->push_back(c.class_id);
            u.classes.push_back(std::move(c));
        }
    };

    add_plain(config.n_base, base_rng, u.roles.base);
    add_plain(config.n_val, val_rng, u.roles.val);
    add_shifted(config.n_novel, novel_rng, &u.roles.novel);
    add_shifted(config.n_extra, extra_rng, nullptr);

    u.roles.large.resize(u.classes.size());
    for (std::size_t i = 0; i < u.classes.size(); ++i)
        u.roles.large[i] = u.classes[i].class_id;

    return u;
}

ExampleBatch sample_examples(const ClassUniverse& universe, int class_id,
                             int count, Rng& rng) {
    if (count < 1) throw std::invalid_argument("sample_examples: count must be >= 1");
    const ClassSpec& spec = universe.class_by_id(class_id);

    ExampleBatch batch;
    batch.source_class = class_id;
    batch.features.resize(count, universe.dim);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < universe.dim; ++j)
            batch.features(i, j) = spec.mean[j] + spec.stddev * rng.normal();
    return batch;
}

ItemCatalog generate_item_catalog(const CatalogConfig& config) {
    if (config.n_items < 0) throw std::invalid_argument("n_items must be >= 0");
    if (config.n_attributes < 1) throw std::invalid_argument("n_attributes must be >= 1");
    if (config.attrs_per_item < 1 || config.attrs_per_item > config.n_attributes)
        throw std::invalid_argument("attrs_per_item must be in [1, n_attributes]");
    if (config.d < 1) throw std::invalid_argument("catalog dimension must be >= 1");

    Rng master(config.seed);

    // Two seeded attribute blocks of (near) equal size.
    std::vector<int> block(config.n_attributes);
    {
        std::vector<int> order(config.n_attributes);
        for (int i = 0; i < config.n_attributes; ++i) order[i] = i;
        Rng shuffle_rng = master.child("attr-blocks");
        for (int i = config.n_attributes - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.uniform_int(i + 1));
            std::swap(order[i], order[j]);
        }
        for (int i = 0; i < config.n_attributes; ++i)
            block[order[i]] = (i < config.n_attributes / 2) ? 0 : 1;
    }

    // Per-attribute feature directions; item feature mean = sum over its attrs.
    Rng attr_dir_rng = master.child("attr-dirs");
    std::vector<Eigen::VectorXd> attr_dir(config.n_attributes);
    for (int a = 0; a < config.n_attributes; ++a)
        attr_dir[a] = gaussian_vector(config.d, 1.0, attr_dir_rng);

    ItemCatalog catalog;
    catalog.dim = config.d;
    catalog.attribute_names.reserve(config.n_attributes);
    for (int a = 0; a < config.n_attributes; ++a)
        catalog.attribute_names.push_back("attr_" + std::to_string(a));

    Rng item_rng = master.child("items");
    catalog.items.reserve(config.n_items);
    for (int it = 0; it < config.n_items; ++it) {
        ItemCatalog::Item item;
        item.item_id = it;
        item.attrs.assign(config.n_attributes, false);

        const int home = item_rng.bernoulli(0.5) ? 1 : 0;
        std::vector<int> pool[2];
        for (int a = 0; a < config.n_attributes; ++a) pool[block[a]].push_back(a);

        for (int k = 0; k < config.attrs_per_item; ++k) {
            int side = item_rng.bernoulli(config.block_bias) ? home : 1 - home;
            if (pool[side].empty()) side = 1 - side;
            auto& p = pool[side];
            const std::size_t pick = item_rng.uniform_int(p.size());
            item.attrs[p[pick]] = true;
            p[pick] = p.back();
            p.pop_back();
        }

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(config.d);
        for (int a = 0; a < config.n_attributes; ++a)
            if (item.attrs[a]) mean += attr_dir[a];
        item.feature.resize(config.d);
        for (int j = 0; j < config.d; ++j)
            item.feature[j] = mean[j] + item_rng.normal();

        catalog.items.push_back(std::move(item));
    }
    return catalog;
}

std::vector<std::pair<int, int>> feasible_attribute_pairs(
    const ItemCatalog& catalog, int min_items) {
    if (min_items < 1) throw std::invalid_argument("min_items must be >= 1");
    const int A = catalog.n_attributes();

    // Joint counts in one pass over items.
    std::vector<std::vector<int>> joint(A, std::vector<int>(A, 0));
    for (const auto& item : catalog.items) {
        std::vector<int> present;
        for (int a = 0; a < A; ++a)
            if (item.attrs[a]) present.push_back(a);
        for (std::size_t i = 0; i < present.size(); ++i)
            for (std::size_t j = i + 1; j < present.size(); ++j)
                ++joint[present[i]][present[j]];
    }

    std::vector<std::pair<int, int>> result;
    for (int a = 0; a < A; ++a)
        for (int b = a + 1; b < A; ++b)
            if (joint[a][b] >= min_items) result.emplace_back(a, b);
    return result;
}

}  // namespace fsleval
