#include "fsleval/coverage.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>

#include "fsleval/parallel.hpp"

namespace fsleval {

namespace {

void validate_model(const TupleDistributionModel& model) {
    if (model.n < 1) throw std::invalid_argument("tuple size must be >= 1");
    if (model.l < model.n)
        throw std::invalid_argument("class count must be >= tuple size");
    if (!(model.gamma > 0.0 && model.gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!model.uniform() &&
        model.probs.size() != static_cast<std::size_t>(model.l))
        throw std::invalid_argument("probs length must equal the class count");
}

// Stamp-based scratch: marking a class costs O(1) and nothing is cleared
// between tuples or trials, so large class universes stay cheap. One instance
// per worker thread.
struct StampScratch {
    std::vector<std::uint64_t> tuple_mark, seen_mark;
    std::uint64_t tuple_stamp = 0, trial_stamp = 0;

    void ensure(std::size_t l) {
        if (tuple_mark.size() != l) {
            tuple_mark.assign(l, 0);
            seen_mark.assign(l, 0);
            tuple_stamp = 0;
            trial_stamp = 0;
        }
    }
};

// One uniform-model trial: n_draws tuples by rejection (uniform over
// non-repeating tuples), counting distinct classes. seen_mark entries keep the
// trial stamp afterwards so a paired test phase can probe membership.
int uniform_train_trial(const TupleDistributionModel& model, int n_draws,
                        Rng& rng, StampScratch& s) {
    const std::uint64_t trial = ++s.trial_stamp;
    const auto bound = static_cast<std::uint64_t>(model.l);
    int z = 0;
    for (int d = 0; d < n_draws; ++d) {
        const std::uint64_t tup = ++s.tuple_stamp;
        for (int i = 0; i < model.n; ++i) {
            std::uint64_t c;
            do {
                c = rng.uniform_int(bound);
            } while (s.tuple_mark[c] == tup);
            s.tuple_mark[c] = tup;
            if (s.seen_mark[c] != trial) {
                s.seen_mark[c] = trial;
                ++z;
            }
        }
    }
    return z;
}

// Test phase against the train classes left in seen_mark. Stops at the first
// overlap; per-trial RNG streams keep early exit deterministic.
bool uniform_test_disjoint(const TupleDistributionModel& model, int n_test,
                           Rng& rng, StampScratch& s,
                           std::uint64_t train_stamp) {
    const auto bound = static_cast<std::uint64_t>(model.l);
    for (int d = 0; d < n_test; ++d) {
        const std::uint64_t tup = ++s.tuple_stamp;
        for (int i = 0; i < model.n; ++i) {
            std::uint64_t c;
            do {
                c = rng.uniform_int(bound);
            } while (s.tuple_mark[c] == tup);
            s.tuple_mark[c] = tup;
            if (s.seen_mark[c] == train_stamp) return false;
        }
    }
    return true;
}

// Explicit-probability tuple: sequential weighted draws without replacement,
// renormalized per position (prefix-sum walk, O(n*l) per tuple — desk scale).
void explicit_tuple(const std::vector<double>& p, int n, double total, Rng& rng,
                    std::vector<char>& used, std::vector<int>& out) {
    out.clear();
    double remaining = total;
    const int l = static_cast<int>(p.size());
    for (int i = 0; i < n; ++i) {
        const double target = rng.uniform() * remaining;
        double acc = 0.0;
        int chosen = -1;
        for (int c = 0; c < l; ++c) {
            if (used[c]) continue;
            acc += p[c];
            if (acc > target) {
                chosen = c;
                break;
            }
        }
        if (chosen < 0) {  // rounding pushed target past the last prefix sum
            for (int c = l - 1; c >= 0; --c)
                if (!used[c]) {
                    chosen = c;
                    break;
                }
        }
        used[chosen] = 1;
        remaining -= p[chosen];
        out.push_back(chosen);
    }
    for (int c : out) used[c] = 0;
}

struct ExplicitTrialOutcome {
    int z = 0;
    bool disjoint = false;
};

ExplicitTrialOutcome explicit_trial(const std::vector<double>& p, int n,
                                    int n_train, int n_test, Rng& rng,
                                    std::atomic<long long>* counts) {
    const int l = static_cast<int>(p.size());
    double total = 0.0;
    for (double v : p) total += v;

    std::vector<char> used(l, 0), seen(l, 0);
    std::vector<int> tuple;
    ExplicitTrialOutcome out;
    for (int d = 0; d < n_train; ++d) {
        explicit_tuple(p, n, total, rng, used, tuple);
        for (int c : tuple) {
            counts[c].fetch_add(1, std::memory_order_relaxed);
            if (!seen[c]) {
                seen[c] = 1;
                ++out.z;
            }
        }
    }
    out.disjoint = n_test > 0;
    for (int d = 0; d < n_test && out.disjoint; ++d) {
        explicit_tuple(p, n, total, rng, used, tuple);
        for (int c : tuple)
            if (seen[c]) out.disjoint = false;
    }
    return out;
}

CoverageSimResult run_simulation(const TupleDistributionModel& model,
                                 int n_train, int n_test, long long trials,
                                 std::uint64_t seed) {
    validate_model(model);
    if (n_train < 1) throw std::invalid_argument("need at least one tuple");
    if (n_test < 0) throw std::invalid_argument("negative test draw count");
    if (trials < 1) throw std::invalid_argument("need at least one trial");

    CoverageSimResult result;
    result.n_train = n_train;
    result.n_test = n_test;
    result.trials = trials;
    result.z_samples.resize(static_cast<std::size_t>(trials));

    std::vector<char> disjoint_flags;
    if (n_test > 0) disjoint_flags.resize(static_cast<std::size_t>(trials), 0);

    if (model.uniform()) {
        parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
            thread_local StampScratch scratch;
            scratch.ensure(static_cast<std::size_t>(model.l));
            Rng rng(derive_seed(seed, "trial", t));
            const int z = uniform_train_trial(model, n_train, rng, scratch);
            result.z_samples[t] = z;
            if (n_test > 0)
                disjoint_flags[t] = uniform_test_disjoint(
                    model, n_test, rng, scratch, scratch.trial_stamp);
        });
    } else {
        const std::vector<double> p = class_appearance_probs(model);
        auto counts = std::make_unique<std::atomic<long long>[]>(
            static_cast<std::size_t>(model.l));
        for (int i = 0; i < model.l; ++i) counts[i].store(0);
        parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
            Rng rng(derive_seed(seed, "trial", t));
            const ExplicitTrialOutcome out =
                explicit_trial(p, model.n, n_train, n_test, rng, counts.get());
            result.z_samples[t] = out.z;
            if (n_test > 0) disjoint_flags[t] = out.disjoint ? 1 : 0;
        });
        const double draws = static_cast<double>(trials) * n_train;
        result.realized_probs.resize(static_cast<std::size_t>(model.l));
        for (int i = 0; i < model.l; ++i)
            result.realized_probs[i] = static_cast<double>(counts[i].load()) / draws;
    }

    if (n_test > 0) {
        long long disjoint = 0;
        for (char f : disjoint_flags) disjoint += f;
        result.disjoint_count = disjoint;
    }
    return result;
}

}  // namespace

std::vector<double> class_appearance_probs(const TupleDistributionModel& model) {
    validate_model(model);
    const double ratio = static_cast<double>(model.n) / model.l;
    if (model.uniform())
        return std::vector<double>(static_cast<std::size_t>(model.l), ratio);

    const double floor = model.gamma * ratio;
    double sum = 0.0, comp = 0.0;  // Kahan: the sum-equals-n check must not
    for (double p : model.probs) {  // drown in accumulation error at large l
        if (!(p >= floor - 1e-12))
            throw std::invalid_argument(
                "appearance probability below the gamma*n/l floor");
        if (!(p <= 1.0 + 1e-12))
            throw std::invalid_argument("appearance probability above 1");
        const double y = p - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if (std::abs(sum - model.n) > 1e-12)
        throw std::invalid_argument(
            "appearance probabilities must sum to the tuple size");
    return model.probs;
}

CoverageSimResult simulate_coverage(const TupleDistributionModel& model,
                                    int n_draws, long long trials,
                                    std::uint64_t seed) {
    return run_simulation(model, n_draws, 0, trials, seed);
}

CoverageSimResult simulate_paired_coverage(const TupleDistributionModel& model,
                                           int n_train, int n_test,
                                           long long trials,
                                           std::uint64_t seed) {
    if (n_test < 1) throw std::invalid_argument("paired run needs test draws");
    return run_simulation(model, n_train, n_test, trials, seed);
}

double ez_lower_bound(int l, int n, double gamma, long long n_draws) {
    if (n < 1 || l < n) throw std::invalid_argument("invalid l or n");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (n_draws < 0) throw std::invalid_argument("negative draw count");
    return l * (1.0 - std::pow(1.0 - gamma * n / l,
                               static_cast<double>(n_draws)));
}

double exact_uniform_ez(int l, int n, long long n_draws) {
    return ez_lower_bound(l, n, 1.0, n_draws);
}

double vz_upper_bound(int n, long long n_draws) {
    if (n < 1 || n_draws < 1) throw std::invalid_argument("invalid n or N");
    return 0.5 * static_cast<double>(n) * n * static_cast<double>(n_draws);
}

double disjoint_prob_bound(int l, int n, double gamma, long long n_train,
                           long long n_test) {
    if (n < 1 || l < n) throw std::invalid_argument("invalid l or n");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (n_train < 0 || n_test < 0)
        throw std::invalid_argument("negative draw count");
    const auto m = static_cast<double>(std::min(n_train, n_test));
    return std::min(1.0, 4.0 * std::pow(1.0 - gamma * n / l, m));
}

long long min_samples_for_overlap(int l, int n, double gamma, double rho) {
    if (n < 1 || l < n) throw std::invalid_argument("invalid l or n");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("rho must lie in (0, 1)");
    return static_cast<long long>(
        std::ceil(std::log(4.0 / rho) * static_cast<double>(l) / (gamma * n)));
}

double small_coverage_prob_bound(double gamma, double eta, long long n_draws) {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("eta must lie in (0, 1)");
    if (n_draws < 1) throw std::invalid_argument("need at least one draw");
    const double num = (1.0 + gamma) * (1.0 + gamma);
    const double den =
        2.0 * (1.0 - eta) * (1.0 - eta) * gamma * gamma * n_draws;
    return std::min(1.0, num / den);
}

bool BoundReport::all_pass() const {
    for (const BoundCheck& c : checks)
        if (!c.pass) return false;
    return true;
}

BoundReport verify_bounds(const TupleDistributionModel& model, int n_train,
                          int n_test, long long trials, std::uint64_t seed,
                          double eta) {
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("eta must lie in (0, 1)");

    BoundReport report;
    report.eta = eta;
    report.sim = simulate_paired_coverage(model, n_train, n_test, trials, seed);
    report.insufficient_samples = trials < 2;

    const double tn = static_cast<double>(trials);
    double mean = 0.0;
    for (int z : report.sim.z_samples) mean += z;
    mean /= tn;
    double var = 0.0;
    if (trials >= 2) {
        for (int z : report.sim.z_samples) {
            const double d = z - mean;
            var += d * d;
        }
        var /= (tn - 1.0);
    }
    report.mean_z = mean;
    report.var_z = var;
    if (model.uniform())
        report.exact_ez = exact_uniform_ez(model.l, model.n, n_train);

    // Mean lower bound, with 3 standard errors of slack for MC noise.
    {
        const double formula = ez_lower_bound(model.l, model.n, model.gamma,
                                              n_train);
        const double se = trials >= 2 ? std::sqrt(var / tn) : 0.0;
        const double margin = mean + 3.0 * se - formula;
        report.checks.push_back({"ez_lower", formula, mean, margin, margin >= 0.0});
    }
    // Variance upper bound with a 5% multiplicative allowance.
    {
        const double formula = vz_upper_bound(model.n, n_train);
        const double margin = 1.05 * formula - var;
        report.checks.push_back({"vz_upper", formula, var, margin, margin >= 0.0});
    }
    // Disjointness probability upper bound plus 3 binomial sigma.
    {
        const double formula = disjoint_prob_bound(model.l, model.n, model.gamma,
                                                   n_train, n_test);
        const double freq = static_cast<double>(report.sim.disjoint_count) / tn;
        const double sigma = std::sqrt(std::max(freq * (1.0 - freq), 0.0) / tn);
        const double margin = formula + 3.0 * sigma - freq;
        report.checks.push_back(
            {"disjoint_upper", formula, freq, margin, margin >= 0.0});
    }
    // Small-coverage tail bound; no slack (the bound is loose by construction).
    {
        const double formula = small_coverage_prob_bound(model.gamma, eta,
                                                         n_train);
        const double threshold = eta * model.gamma * model.n *
                                 static_cast<double>(n_train) /
                                 (1.0 + model.gamma);
        long long below = 0;
        for (int z : report.sim.z_samples)
            if (z <= threshold) ++below;
        const double freq = static_cast<double>(below) / tn;
        const double margin = formula - freq;
        report.checks.push_back(
            {"small_coverage_upper", formula, freq, margin, margin >= 0.0});
    }

    if (!model.uniform()) {
        const double floor = model.gamma * model.n / model.l;
        const double draws = tn * n_train;
        double min_ratio = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (double ph : report.sim.realized_probs) {
            min_ratio = std::min(min_ratio, ph * model.l / model.n);
            const double sigma = std::sqrt(std::max(ph * (1.0 - ph), 0.0) / draws);
            if (ph < floor - 3.0 * sigma) ok = false;
        }
        report.realized_gamma = min_ratio;
        report.assumption1_ok = ok;
    }
    return report;
}

}  // namespace fsleval
