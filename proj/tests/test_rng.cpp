#include <cmath>
#include <vector>

#include "doctest.h"
#include "fedara/error.h"
#include "fedara/rng.h"

using namespace fedara;

TEST_SUITE_BEGIN("rng");

TEST_CASE("same seed gives the same sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("fork depends on label and seed, not on parent draws") {
    Rng a(7);
    Rng fork_before = a.fork("data");
    for (int i = 0; i < 100; ++i) {
        a.next_u64();
    }
    Rng fork_after = a.fork("data");
    for (int i = 0; i < 100; ++i) {
        CHECK(fork_before.next_u64() == fork_after.next_u64());
    }

    CHECK(Rng(7).fork("x").next_u64() != Rng(7).fork("y").next_u64());
    CHECK(Rng(7).fork("x").next_u64() != Rng(8).fork("x").next_u64());
    CHECK(Rng(7).fork("c", 1).next_u64() != Rng(7).fork("c", 2).next_u64());
}

TEST_CASE("uniform doubles stay in [0, 1)") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        double v = rng.next_double();
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("next_below is in range and covers small supports") {
    Rng rng(11);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 5000; ++i) {
        uint64_t v = rng.next_below(5);
        REQUIRE(v < 5);
        seen[v] += 1;
    }
    for (int count : seen) {
        CHECK(count > 800);  // fair share is 1000
    }
    CHECK_THROWS_AS(rng.next_below(0), ContractViolation);
}

TEST_CASE("gaussian sample moments at unit std") {
    Rng rng(123);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_gaussian();
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(mean >= -0.02);
    CHECK(mean <= 0.02);
    CHECK(var >= 0.97);
    CHECK(var <= 1.03);
}

TEST_CASE("gaussian variance scales with std") {
    Rng rng(456);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_gaussian(0.02);
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(var >= 0.00038);
    CHECK(var <= 0.00042);
    CHECK_THROWS_AS(rng.next_gaussian(0.0), ContractViolation);
}

TEST_CASE("forked substreams are uncorrelated") {
    Rng root(99);
    Rng a = root.fork("left");
    Rng b = root.fork("right");
    const int n = 10000;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int i = 0; i < n; ++i) {
        double x = a.next_gaussian();
        double y = b.next_gaussian();
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    double cov = sab / n - (sa / n) * (sb / n);
    double corr = cov / std::sqrt((saa / n - sa / n * (sa / n)) * (sbb / n - sb / n * (sb / n)));
    CHECK(std::fabs(corr) < 0.05);
}

TEST_SUITE_END();
