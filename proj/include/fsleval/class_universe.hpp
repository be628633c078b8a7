#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fsleval/rng.hpp"
#include "fsleval/splits.hpp"

namespace fsleval {

// One synthetic class: an isotropic Gaussian N(mean, stddev^2 * I).
struct ClassSpec {
    int class_id = 0;
    Eigen::VectorXd mean;
    double stddev = 1.0;
};

struct ClassUniverse {
    int dim = 0;
    std::vector<ClassSpec> classes;
    SplitSpec roles;
    double shift_strength = 0.0;

    const ClassSpec& class_by_id(int id) const;  // throws on unknown id
};

struct ExampleBatch {
    Eigen::MatrixXd features;  // one row per example
    int source_class = 0;
};

struct UniverseConfig {
    int d = 2;
    int n_base = 0;
    int n_val = 0;
    int n_novel = 0;
    int n_extra = 0;  // classes belonging only to the large set
    double separation = 1.0;
    double shift_strength = 0.0;
    double stddev = 1.0;
    std::uint64_t seed = 0;
};

// Base/val means are drawn iid from N(0, separation^2 * I). Novel and extra
// means are drawn from the same meta-distribution, contracted by
// separation/(separation+shift_strength) and displaced by shift_strength
// along one seeded unit direction: shift 0 reproduces the base
// meta-distribution exactly, larger shift moves the novel cluster away and
// squeezes it together, so trained models transfer progressively worse.
ClassUniverse generate_universe(const UniverseConfig& config);

ExampleBatch sample_examples(const ClassUniverse& universe, int class_id,
                             int count, Rng& rng);

// Attribute-tagged item corpus (synthetic stand-in for a catalog of tagged
// products). Items carry a fixed number of attributes; attributes live in two
// blocks with high intra-block co-occurrence, so the co-occurrence graph has
// a natural two-way cut.
struct ItemCatalog {
    struct Item {
        int item_id = 0;
        std::vector<bool> attrs;  // indexed by attribute id
        Eigen::VectorXd feature;
    };
    int dim = 0;
    std::vector<std::string> attribute_names;
    std::vector<Item> items;

    int n_attributes() const { return static_cast<int>(attribute_names.size()); }
};

struct CatalogConfig {
    int n_items = 0;
    int n_attributes = 2;
    int attrs_per_item = 1;
    int d = 2;
    double block_bias = 0.9;  // probability an attribute draw stays in the item's home block
    std::uint64_t seed = 0;
};

ItemCatalog generate_item_catalog(const CatalogConfig& config);

// All unordered pairs (a, b), a < b, carried jointly by at least min_items
// items.
std::vector<std::pair<int, int>> feasible_attribute_pairs(
    const ItemCatalog& catalog, int min_items);

}  // namespace fsleval
