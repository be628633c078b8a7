#include "fsleval/task_model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fsleval {

namespace {

void check_spec(const EpisodeSpec& spec) {
    if (spec.n_way < 2) throw std::invalid_argument("n_way must be >= 2");
    if (spec.k_shot < 1) throw std::invalid_argument("k_shot must be >= 1");
    if (spec.q_query < 1) throw std::invalid_argument("q_query must be >= 1");
}

// Partial Fisher-Yates: exact uniform over ordered non-repeating n-tuples.
ClassTuple uniform_tuple_from(const std::vector<int>& class_set, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("tuple length must be >= 1");
    if (static_cast<std::size_t>(n) > class_set.size())
        throw std::invalid_argument("tuple length exceeds class set size");
    std::vector<int> pool = class_set;
    for (int i = 0; i < n; ++i) {
        const std::size_t j = i + rng.uniform_int(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> sa = a;
    std::sort(sa.begin(), sa.end());
    for (int x : b)
        if (std::binary_search(sa.begin(), sa.end(), x))
            throw std::invalid_argument("base and novel sets must be disjoint");
}

}  // namespace

ClassTuple sample_interpolated_tuple(const std::vector<int>& base_set,
                                     const std::vector<int>& novel_set,
                                     double lambda, int n, Rng& rng) {
    if (base_set.empty() || novel_set.empty())
        throw std::invalid_argument("interpolated sampling needs two non-empty sets");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("lambda must be in [0, 1]");
    if (static_cast<std::size_t>(n) > base_set.size() + novel_set.size())
        throw std::invalid_argument("tuple length exceeds the union of the sets");
    check_disjoint(base_set, novel_set);

    // Endpoints delegate to the plain uniform sampler (identical RNG
    // consumption, so lambda-sweep endpoints reproduce direct evaluations).
    if (lambda == 0.0 && static_cast<std::size_t>(n) <= base_set.size())
        return uniform_tuple_from(base_set, n, rng);
    if (lambda == 1.0 && static_cast<std::size_t>(n) <= novel_set.size())
        return uniform_tuple_from(novel_set, n, rng);

    std::vector<int> base = base_set;
    std::vector<int> novel = novel_set;
    ClassTuple tuple;
    tuple.reserve(n);
    for (int i = 0; i < n; ++i) {
        bool use_novel = rng.bernoulli(lambda);
        if (use_novel && novel.empty()) use_novel = false;
        if (!use_novel && base.empty()) use_novel = true;
        auto& pool = use_novel ? novel : base;
        if (pool.empty()) throw std::runtime_error("both class sets exhausted");
        const std::size_t j = rng.uniform_int(pool.size());
        tuple.push_back(pool[j]);
        pool[j] = pool.back();
        pool.pop_back();
    }
    return tuple;
}

ClassTuple sample_class_tuple(const TaskDistribution& dist, int n, Rng& rng) {
    Task t = sample_task(dist, n, rng);
    if (auto* tuple = std::get_if<ClassTuple>(&t)) return *tuple;
    throw std::invalid_argument("distribution does not produce class tuples");
}

Task sample_task(const TaskDistribution& dist, int n, Rng& rng) {
    if (const auto* u = std::get_if<UniformTuple>(&dist))
        return uniform_tuple_from(u->class_set, n, rng);

    if (const auto* ip = std::get_if<Interpolated>(&dist))
        return sample_interpolated_tuple(ip->base_set, ip->novel_set, ip->lambda, n, rng);

    if (const auto* ap = std::get_if<AttributePairDist>(&dist)) {
        if (!ap->pairs.empty()) {
            const AttrPair& p = ap->pairs[rng.uniform_int(ap->pairs.size())];
            return AttrPair{std::min(p.first, p.second), std::max(p.first, p.second)};
        }
        if (ap->attr_set.size() < 2)
            throw std::invalid_argument("attribute set must hold at least 2 attributes");
        ClassTuple two = uniform_tuple_from(ap->attr_set, 2, rng);
        return AttrPair{std::min(two[0], two[1]), std::max(two[0], two[1])};
    }

    const auto& list = std::get<FiniteTaskList>(dist);
    if (list.tasks.empty()) throw std::invalid_argument("finite task list is empty");
    Task t = list.tasks[rng.uniform_int(list.tasks.size())];
    if (const auto* tuple = std::get_if<ClassTuple>(&t)) {
        if (static_cast<int>(tuple->size()) != n)
            throw std::invalid_argument("finite task list tuple length mismatch");
    }
    return t;
}

Episode sample_episode(const ClassUniverse& universe, const ClassTuple& tuple,
                       const EpisodeSpec& spec, const SupportSampler& sampler,
                       Rng& rng) {
    check_spec(spec);
    if (static_cast<int>(tuple.size()) != spec.n_way)
        throw std::invalid_argument("tuple length must equal n_way");
    for (std::size_t i = 0; i < tuple.size(); ++i)
        for (std::size_t j = i + 1; j < tuple.size(); ++j)
            if (tuple[i] == tuple[j])
                throw std::invalid_argument("class tuple entries must be distinct");

    const int n = spec.n_way, k = spec.k_shot, q = spec.q_query;
    Episode ep;
    ep.provenance = tuple;
    ep.support_x.resize(n * k, universe.dim);
    ep.query_x.resize(n * q, universe.dim);
    ep.support_y.reserve(n * k);
    ep.query_y.reserve(n * q);
    ep.support_src.reserve(n * k);
    ep.query_src.reserve(n * q);

    for (int i = 0; i < n; ++i) {
        const int c = tuple[i];
        if (sampler.mode == SupportSampler::Mode::FixML) {
            auto it = sampler.exemplars.find(c);
            if (it == sampler.exemplars.end())
                throw std::invalid_argument("FixML table missing class " + std::to_string(c));
            if (it->second.rows() != k)
                throw std::invalid_argument("FixML table shot count mismatch");
            ep.support_x.middleRows(i * k, k) = it->second;
        } else {
            ep.support_x.middleRows(i * k, k) =
                sample_examples(universe, c, k, rng).features;
        }
        for (int s = 0; s < k; ++s) {
            ep.support_y.push_back(i + 1);
            ep.support_src.push_back(c);
        }
    }
    for (int i = 0; i < n; ++i) {
        const int c = tuple[i];
        ep.query_x.middleRows(i * q, q) = sample_examples(universe, c, q, rng).features;
        for (int s = 0; s < q; ++s) {
            ep.query_y.push_back(i + 1);
            ep.query_src.push_back(c);
        }
    }
    return ep;
}

Episode sample_attribute_episode(const ItemCatalog& catalog, const AttrPair& pair,
                                 const EpisodeSpec& spec, Rng& rng) {
    check_spec(spec);
    if (spec.n_way != 2)
        throw std::invalid_argument("attribute episodes are 2-way");
    const int A = catalog.n_attributes();
    if (pair.first < 0 || pair.second < 0 || pair.first >= A || pair.second >= A ||
        pair.first == pair.second)
        throw std::invalid_argument("invalid attribute pair");

    std::vector<int> positive, negative;  // item indices
    for (std::size_t i = 0; i < catalog.items.size(); ++i) {
        const auto& item = catalog.items[i];
        if (item.attrs[pair.first] && item.attrs[pair.second])
            positive.push_back(static_cast<int>(i));
        else
            negative.push_back(static_cast<int>(i));
    }
    const int need = spec.k_shot + spec.q_query;
    if (static_cast<int>(positive.size()) < need ||
        static_cast<int>(negative.size()) < need)
        throw std::invalid_argument("attribute pair infeasible for requested episode size");

    const int k = spec.k_shot, q = spec.q_query;
    Episode ep;
    ep.provenance = AttrPair{std::min(pair.first, pair.second),
                             std::max(pair.first, pair.second)};
    ep.support_x.resize(2 * k, catalog.dim);
    ep.query_x.resize(2 * q, catalog.dim);

    // label 1 = carries both attributes, label 2 = does not
    std::vector<int>* pools[2] = {&positive, &negative};
    for (int lbl = 0; lbl < 2; ++lbl) {
        std::vector<int>& pool = *pools[lbl];
        for (int i = 0; i < need; ++i) {
            const std::size_t j = i + rng.uniform_int(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        for (int i = 0; i < k; ++i) {
            const auto& item = catalog.items[pool[i]];
            ep.support_x.row(lbl * k + i) = item.feature.transpose();
            ep.support_y.push_back(lbl + 1);
            ep.support_src.push_back(item.item_id);
        }
        for (int i = 0; i < q; ++i) {
            const auto& item = catalog.items[pool[k + i]];
            ep.query_x.row(lbl * q + i) = item.feature.transpose();
            ep.query_y.push_back(lbl + 1);
            ep.query_src.push_back(item.item_id);
        }
    }
    return ep;
}

SupportSampler make_fixml_sampler(const ClassUniverse& universe,
                                  const std::vector<int>& class_set, int k_shot,
                                  std::uint64_t seed) {
    if (k_shot < 1) throw std::invalid_argument("k_shot must be >= 1");
    SupportSampler sampler;
    sampler.mode = SupportSampler::Mode::FixML;
    sampler.k_shot = k_shot;
    Rng master(seed);
    for (int c : class_set) {
        Rng class_rng = master.child("exemplars", static_cast<std::uint64_t>(c));
        sampler.exemplars[c] = sample_examples(universe, c, k_shot, class_rng).features;
    }
    return sampler;
}

Episode EpisodeSource::sample(Rng& rng) const {
    Task task = sample_task(dist, spec.n_way, rng);
    if (const auto* tuple = std::get_if<ClassTuple>(&task)) {
        if (!universe) throw std::invalid_argument("class-tuple task needs a universe");
        return sample_episode(*universe, *tuple, spec, sampler, rng);
    }
    const auto& pair = std::get<AttrPair>(task);
    if (!catalog) throw std::invalid_argument("attribute task needs a catalog");
    return sample_attribute_episode(*catalog, pair, spec, rng);
}

}  // namespace fsleval
