#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fsleval/rng.hpp"

namespace fsleval {

// Distribution over non-repeating class tuples, described by its per-class
// appearance probabilities. An empty probs vector means the uniform model
// (every tuple equally likely, so p_i = n/l for all i). gamma is the floor
// coefficient: every p_i must be at least gamma*n/l.
struct TupleDistributionModel {
    int l = 0;
    int n = 0;
    std::vector<double> probs;  // empty => uniform
    double gamma = 1.0;

    bool uniform() const { return probs.empty(); }
};

// Trial-level output of the coverage simulator. z_samples[t] is the number of
// distinct classes appearing across the n_train tuples of trial t. When a
// paired test phase ran (n_test > 0), disjoint_count is the number of trials
// whose test tuples shared no class with the train tuples; otherwise -1.
// realized_probs holds the measured per-class appearance frequency of the
// train phase for explicit-probability models (empty for the uniform model,
// whose marginals are n/l by symmetry).
struct CoverageSimResult {
    std::vector<int> z_samples;
    long long disjoint_count = -1;
    std::vector<double> realized_probs;
    int n_train = 0;
    int n_test = 0;
    long long trials = 0;
};

// One bound check: margin >= 0 exactly when pass is true.
struct BoundCheck {
    std::string name;
    double formula_value = 0.0;
    double empirical_value = 0.0;
    double margin = 0.0;
    bool pass = false;
};

struct BoundReport {
    std::vector<BoundCheck> checks;
    double mean_z = 0.0;
    double var_z = 0.0;  // ddof=1; 0 when trials < 2
    double eta = 0.5;
    // Closed-form E[Z] for the uniform model; NaN for explicit models.
    double exact_ez = std::numeric_limits<double>::quiet_NaN();
    // Explicit models: smallest realized p_i * l / n. 1 for the uniform model.
    double realized_gamma = 1.0;
    // Explicit models: realized marginals respect the gamma*n/l floor within
    // 3 binomial sigma. Vacuously true for the uniform model.
    bool assumption1_ok = true;
    bool insufficient_samples = false;  // trials < 2
    CoverageSimResult sim;

    bool all_pass() const;
};

// Per-class appearance probabilities. Uniform model: n/l everywhere.
// Explicit model: a validated copy (sum must equal n within 1e-12, each entry
// within [gamma*n/l, 1]). Throws std::invalid_argument on violation.
std::vector<double> class_appearance_probs(const TupleDistributionModel& model);

// Draws n_draws tuples per trial and records the distinct-class count.
// Uniform model: rejection sampling (exactly uniform over tuples). Explicit
// model: sequential weighted draws without replacement, renormalized at each
// position — realizes *a* distribution with roughly the given marginals, so
// realized_probs is measured and reported. Trials run in parallel on
// derive_seed(seed, "trial", t) streams.
CoverageSimResult simulate_coverage(const TupleDistributionModel& model,
                                    int n_draws, long long trials,
                                    std::uint64_t seed);

// Same, plus an independent test phase of n_test tuples per trial and a count
// of trials whose test classes are disjoint from the train classes.
CoverageSimResult simulate_paired_coverage(const TupleDistributionModel& model,
                                           int n_train, int n_test,
                                           long long trials, std::uint64_t seed);

// l*(1 - (1 - gamma*n/l)^n_draws): guaranteed lower bound on E[Z].
double ez_lower_bound(int l, int n, double gamma, long long n_draws);

// Exact E[Z] for the uniform model; coincides with ez_lower_bound at gamma=1
// (bitwise: it is evaluated through the same expression).
double exact_uniform_ez(int l, int n, long long n_draws);

// n^2 * n_draws / 2: upper bound on V[Z].
double vz_upper_bound(int n, long long n_draws);

// min(1, 4*(1 - gamma*n/l)^min(n_train, n_test)): upper bound on the
// probability that train and test tuples share no class.
double disjoint_prob_bound(int l, int n, double gamma, long long n_train,
                           long long n_test);

// ceil(ln(4/rho) * l / (gamma*n)): draws per side sufficient to make the
// disjointness probability at most rho. Requires rho in (0,1).
long long min_samples_for_overlap(int l, int n, double gamma, double rho);

// min(1, (1+gamma)^2 / (2*(1-eta)^2*gamma^2*n_draws)): upper bound on
// P(Z <= eta*gamma*n*n_draws/(1+gamma)). Requires eta in (0,1).
double small_coverage_prob_bound(double gamma, double eta, long long n_draws);

// Runs the paired simulation and checks all four bounds against it:
//   ez_lower:    mean(Z) >= formula - 3*sqrt(var/trials)
//   vz_upper:    var(Z) <= 1.05 * formula
//   disjoint:    disjoint freq <= formula + 3 * binomial sigma
//   small_cov:   P(Z <= eta*gamma*n*N/(1+gamma)) <= formula
// Failures are report content, never exceptions.
BoundReport verify_bounds(const TupleDistributionModel& model, int n_train,
                          int n_test, long long trials, std::uint64_t seed,
                          double eta = 0.5);

}  // namespace fsleval
