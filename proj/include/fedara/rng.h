#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace fedara {

// Splittable deterministic generator over a splitmix64 stream.
//
// fork() derives a substream from the construction seed and a label only,
// never from how many values the parent has drawn, so per-client streams do
// not depend on scheduling order. A Rng is single-owner; concurrent workers
// each take their own fork.
class Rng {
public:
    explicit Rng(uint64_t seed);

    Rng fork(std::string_view label) const;
    Rng fork(std::string_view label, uint64_t index) const;

    uint64_t next_u64();
    double next_double();             // uniform [0, 1)
    uint64_t next_below(uint64_t n);  // uniform over {0, ..., n-1}, unbiased
    double next_gaussian();           // standard normal (Box-Muller, cached spare)
    double next_gaussian(double stddev);

    uint64_t seed() const { return seed_; }

    // UniformRandomBitGenerator shim for <random> distributions.
    using result_type = uint64_t;
    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return ~uint64_t{0}; }
    uint64_t operator()() { return next_u64(); }

private:
    Rng(uint64_t seed, uint64_t state) : seed_(seed), state_(state) {}

    uint64_t seed_;   // identity; forks derive from this, not from state_
    uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by rng. Pinned here (instead of std::shuffle)
// so shard layouts and batch orders are stable across standard libraries.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.next_below(i)]);
    }
}

}  // namespace fedara
