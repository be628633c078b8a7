#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "fsleval/rng.hpp"

namespace fsleval {

// Role assignment over class ids. base/val/novel are pairwise disjoint;
// large, when non-empty, is a superset of their union.
struct SplitSpec {
    std::vector<int> base;
    std::vector<int> val;
    std::vector<int> novel;
    std::vector<int> large;
};

// Finite per-class example pools (models datasets with a fixed number of
// examples per class, as opposed to the generative universe).
struct ExampleStore {
    // class_id -> examples (one row per example)
    std::map<int, Eigen::MatrixXd> examples;
};

// Per-class index split of an ExampleStore into a train pool and a held-out
// in-distribution eval pool.
struct ExampleSplit {
    std::map<int, std::vector<int>> train_pool;
    std::map<int, std::vector<int>> id_eval_pool;
};

// Attribute co-occurrence graph: w(i,j) = number of items carrying both i and
// j; diagonal is zero.
struct AttributeGraph {
    Eigen::MatrixXd w;
    int size() const { return static_cast<int>(w.rows()); }
};

struct Bipartition {
    std::vector<int> set_a;  // sign <= 0 side of the Fiedler vector
    std::vector<int> set_b;
    double cut_weight = 0.0;       // total edge weight crossing the cut
    double fiedler_value = 0.0;    // second-smallest Laplacian eigenvalue
};

// Shuffles class_ids and assigns the first three blocks to base/val/novel;
// large always receives every id. Sizes must not exceed |class_ids|.
SplitSpec random_class_partition(const std::vector<int>& class_ids,
                                 int n_base, int n_val, int n_novel, Rng& rng);

// Per class: floor(fraction*count) examples (at least 1) to the train pool,
// the rest to the id-eval pool. Every class needs >= 2 examples.
ExampleSplit within_class_example_split(const ExampleStore& store,
                                        double fraction, Rng& rng);

struct ItemCatalog;  // class_universe.hpp

AttributeGraph build_attribute_graph(const ItemCatalog& catalog);

// Splits the graph by the sign of the Fiedler vector of the unnormalized
// Laplacian D - W. The eigenvector is found by power iteration on s*I - L
// (s = max row sum + 1) restricted to the complement of the constant vector;
// convergence is declared when the eigen-residual drops below tol. Entries
// that are zero (to working precision) land in set_a. Throws on graphs with
// fewer than 2 nodes or if the iteration cap (1e5) is hit.
Bipartition spectral_bipartition(const AttributeGraph& graph, double tol = 1e-8);

}  // namespace fsleval
