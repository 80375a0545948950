#pragma once

#include <cstdint>
#include <random>

namespace shedwatch {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Per-location seed: splitmix64(master ^ splitmix64(index)). Generation order
// does not matter, so serial and parallel runs produce the same data.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Thin wrapper over mt19937_64 with distribution code that is identical on
// every standard library (the std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer on [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller (both variates used).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace shedwatch
