#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pcc {

/// Stream identifiers for seed splitting. A run derives every component's
/// seed from one root seed, so adding a stream never perturbs another.
enum class Stream : std::uint64_t {
    Graph = 1,
    EdgeWeights = 2,
    Noise = 3,
    ModelInit = 4,
    Batching = 5,
    Evaluation = 6,
    Negatives = 7,
    Interventions = 8,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, Stream stream, std::uint64_t index = 0);

/// Portable generator: mt19937_64 bits with hand-rolled transforms, so
/// streams are identical across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal(double mean = 0.0, double stddev = 1.0);
    std::size_t index(std::size_t n);  // uniform in [0, n)
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pcc
