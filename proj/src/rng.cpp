#include "fedara/rng.h"

#include <cmath>
#include <numbers>

#include "fedara/error.h"

namespace fedara {

namespace {

// splitmix64 finalizer (Steele, Lea & Flood).
uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), state_(mix64(seed + kGolden)) {}

Rng Rng::fork(std::string_view label) const {
    uint64_t derived = mix64(seed_ ^ mix64(fnv1a(label) + kGolden));
    return Rng(derived, mix64(derived + kGolden));
}

Rng Rng::fork(std::string_view label, uint64_t index) const {
    uint64_t derived = mix64(seed_ ^ mix64(fnv1a(label) + kGolden) ^ mix64(index * kGolden + 1));
    return Rng(derived, mix64(derived + kGolden));
}

uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_double() {
    // top 53 bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t n) {
    FED_CHECK(n > 0, "next_below needs a positive bound");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

double Rng::next_gaussian(double stddev) {
    FED_CHECK(stddev > 0.0, "gaussian stddev must be positive");
    return stddev * next_gaussian();
}

}  // namespace fedara
