#pragma once

#include <cstdint>
#include <string_view>

namespace fsleval {

// splitmix64 finalizer; full avalanche, used for seed derivation and hashing.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over bytes; stable across platforms (used for config hashes too).
std::uint64_t fnv1a64(std::string_view bytes);

// Child-seed derivation: hash(master, component name, index). Streams derived
// with distinct (name, index) pairs are independent for practical purposes,
// which is what makes parallel reductions worker-count invariant.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                          std::uint64_t index = 0);

// Deterministic generator. All distributions are implemented in-house so the
// byte stream does not depend on the standard library's distribution code.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer in [0, bound), bound >= 1. Unbiased (rejection at the
    // wrap-around threshold).
    std::uint64_t uniform_int(std::uint64_t bound);

    // Standard normal via Box-Muller (two uniforms per call, no cached spare).
    double normal();

    bool bernoulli(double p);

    Rng child(std::string_view name, std::uint64_t index = 0) const;

private:
    std::uint64_t state_;  // splitmix64 sequence state
    std::uint64_t seed_;   // kept for child derivation
};

}  // namespace fsleval
