#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <utility>
#include <variant>
#include <vector>

#include "fsleval/class_universe.hpp"
#include "fsleval/rng.hpp"

namespace fsleval {

struct EpisodeSpec {
    int n_way = 2;
    int k_shot = 1;
    int q_query = 1;
};

// Ordered, non-repeating class ids of length n_way.
using ClassTuple = std::vector<int>;

// Unordered attribute pair, stored canonically as (min, max).
using AttrPair = std::pair<int, int>;

// A task identity: which classes (or which attribute pair) the episode is
// built from.
using Task = std::variant<ClassTuple, AttrPair>;

// -- Task distribution families ---------------------------------------------

// Uniform over all ordered non-repeating n-tuples from class_set.
struct UniformTuple {
    std::vector<int> class_set;
};

// Positions filled sequentially; each position draws its source set with a
// lambda-Bernoulli (novel on success) and then a uniform not-yet-used class
// from that set. lambda 0 and 1 collapse to UniformTuple over the
// corresponding set (same RNG consumption, so estimates reproduce exactly).
struct Interpolated {
    std::vector<int> base_set;
    std::vector<int> novel_set;
    double lambda = 0.0;
};

// Uniform over unordered attribute pairs: either all pairs from attr_set or
// an explicit pair list (exactly one of the two must be non-empty).
struct AttributePairDist {
    std::vector<int> attr_set;
    std::vector<AttrPair> pairs;
};

// Uniform over a fixed task list (with replacement).
struct FiniteTaskList {
    std::vector<Task> tasks;
};

using TaskDistribution =
    std::variant<UniformTuple, Interpolated, AttributePairDist, FiniteTaskList>;

// -- Episodes ----------------------------------------------------------------

// Support/query batches with 1-based labels. Label i maps to provenance
// position i-1 (class tuples) or positive/negative (attribute pairs, label 1 =
// carries both attributes). source ids record where each example came from
// (class id, or item id for attribute episodes).
struct Episode {
    Eigen::MatrixXd support_x;  // (n_way*k_shot) x d, grouped by label
    std::vector<int> support_y;
    Eigen::MatrixXd query_x;  // (n_way*q_query) x d, grouped by label
    std::vector<int> query_y;
    Task provenance;
    std::vector<int> support_src;
    std::vector<int> query_src;
};

// Standard: fresh iid support per episode. FixML: support always copied from
// a frozen per-class exemplar table (queries stay fresh).
struct SupportSampler {
    enum class Mode { Standard, FixML };
    Mode mode = Mode::Standard;
    int k_shot = 0;                           // FixML only
    std::map<int, Eigen::MatrixXd> exemplars;  // class_id -> k_shot rows
};

// -- Operations ---------------------------------------------------------------

ClassTuple sample_class_tuple(const TaskDistribution& dist, int n, Rng& rng);

ClassTuple sample_interpolated_tuple(const std::vector<int>& base_set,
                                     const std::vector<int>& novel_set,
                                     double lambda, int n, Rng& rng);

// Draws the task identity (tuple or pair) for any distribution variant.
Task sample_task(const TaskDistribution& dist, int n, Rng& rng);

Episode sample_episode(const ClassUniverse& universe, const ClassTuple& tuple,
                       const EpisodeSpec& spec, const SupportSampler& sampler,
                       Rng& rng);

Episode sample_attribute_episode(const ItemCatalog& catalog, const AttrPair& pair,
                                 const EpisodeSpec& spec, Rng& rng);

SupportSampler make_fixml_sampler(const ClassUniverse& universe,
                                  const std::vector<int>& class_set, int k_shot,
                                  std::uint64_t seed);

// Binds together everything needed to draw one evaluation or training episode
// from a distribution. Exactly one of universe/catalog must be set, matching
// the distribution variant.
struct EpisodeSource {
    const ClassUniverse* universe = nullptr;
    const ItemCatalog* catalog = nullptr;
    TaskDistribution dist;
    EpisodeSpec spec;
    SupportSampler sampler;  // Standard unless FixML requested

    Episode sample(Rng& rng) const;
};

}  // namespace fsleval
