#include "fsleval/splits.hpp"

#include <cmath>
#include <stdexcept>

#include "fsleval/class_universe.hpp"

namespace fsleval {

namespace {

void fisher_yates(std::vector<int>& v, Rng& rng) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(v[i], v[j]);
    }
}

}  // namespace

SplitSpec random_class_partition(const std::vector<int>& class_ids,
                                 int n_base, int n_val, int n_novel, Rng& rng) {
    if (n_base < 0 || n_val < 0 || n_novel < 0)
        throw std::invalid_argument("partition sizes must be >= 0");
    const std::size_t want = static_cast<std::size_t>(n_base) + n_val + n_novel;
    if (want > class_ids.size())
        throw std::invalid_argument("partition sizes exceed the number of class ids");

    std::vector<int> order = class_ids;
    fisher_yates(order, rng);

    SplitSpec split;
    auto it = order.begin();
    split.base.assign(it, it + n_base);
    it += n_base;
    split.val.assign(it, it + n_val);
    it += n_val;
    split.novel.assign(it, it + n_novel);
    split.large = class_ids;  // the full collection, superset of the roles
    return split;
}

ExampleSplit within_class_example_split(const ExampleStore& store,
                                        double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("fraction must be in (0, 1)");

    ExampleSplit split;
    for (const auto& [class_id, mat] : store.examples) {
        const int count = static_cast<int>(mat.rows());
        if (count < 2)
            throw std::invalid_argument("class " + std::to_string(class_id) +
                                        " has fewer than 2 examples");
        std::vector<int> idx(count);
        for (int i = 0; i < count; ++i) idx[i] = i;
        fisher_yates(idx, rng);

        int n_train = static_cast<int>(std::floor(fraction * count));
        if (n_train < 1) n_train = 1;
        split.train_pool[class_id].assign(idx.begin(), idx.begin() + n_train);
        split.id_eval_pool[class_id].assign(idx.begin() + n_train, idx.end());
    }
    return split;
}

AttributeGraph build_attribute_graph(const ItemCatalog& catalog) {
    const int A = catalog.n_attributes();
    AttributeGraph g;
    g.w = Eigen::MatrixXd::Zero(A, A);
    for (const auto& item : catalog.items) {
        std::vector<int> present;
        for (int a = 0; a < A; ++a)
            if (item.attrs[a]) present.push_back(a);
        for (std::size_t i = 0; i < present.size(); ++i)
            for (std::size_t j = i + 1; j < present.size(); ++j) {
                g.w(present[i], present[j]) += 1.0;
                g.w(present[j], present[i]) += 1.0;
            }
    }
    return g;
}

Bipartition spectral_bipartition(const AttributeGraph& graph, double tol) {
    const int n = graph.size();
    if (n < 2) throw std::invalid_argument("bipartition needs at least 2 nodes");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    const Eigen::MatrixXd& w = graph.w;
    Eigen::VectorXd deg = w.rowwise().sum();
    Eigen::MatrixXd lap = Eigen::MatrixXd(deg.asDiagonal()) - w;

    // Power iteration on M = s*I - L finds L's smallest eigenpairs as M's
    // largest. The constant vector (eigenvalue s) is projected out each step,
    // so the iterate converges into the Fiedler eigenspace.
    const double sigma = lap.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
    Eigen::MatrixXd m = sigma * Eigen::MatrixXd::Identity(n, n) - lap;

    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i)
        v[i] = static_cast<double>(splitmix64(static_cast<std::uint64_t>(i) + 1) >> 11) *
                   0x1.0p-53 -
               0.5;
    v.array() -= v.mean();
    if (v.norm() == 0.0) v[0] = 1.0, v.array() -= v.mean();
    v.normalize();

    const long max_iters = 100000;
    double mu = 0.0;
    bool converged = false;
    for (long it = 0; it < max_iters; ++it) {
        Eigen::VectorXd next = m * v;
        next.array() -= next.mean();
        const double norm = next.norm();
        if (norm == 0.0)
            throw std::runtime_error("spectral_bipartition: iterate vanished");
        next /= norm;
        mu = next.dot(m * next);
        if ((m * next - mu * next).norm() < tol) {
            v = next;
            converged = true;
            break;
        }
        v = next;
    }
    if (!converged)
        throw std::runtime_error("spectral_bipartition: power iteration did not converge");

    // Canonical sign: largest-magnitude entry positive (ties -> lowest index).
    int pivot = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
    if (v[pivot] < 0.0) v = -v;
    const double zero_eps = 1e-9 * std::abs(v[pivot]);

    Bipartition part;
    part.fiedler_value = sigma - mu;
    for (int i = 0; i < n; ++i) {
        if (v[i] > zero_eps)
            part.set_b.push_back(i);
        else
            part.set_a.push_back(i);  // negatives and zeros
    }
    for (int a : part.set_a)
        for (int b : part.set_b) part.cut_weight += w(a, b);
    return part;
}

}  // namespace fsleval
