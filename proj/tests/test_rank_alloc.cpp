#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "fedara/error.h"
#include "fedara/rank_alloc.h"
#include "fedara/rng.h"

using namespace fedara;

TEST_SUITE_BEGIN("rank_alloc");

namespace {

// Adapter whose importance scores are exactly |E| (B and A zero).
Adapter score_adapter(const std::vector<double>& e) {
    Adapter ad;
    size_t r = e.size();
    ad.config = {r, 1.0, AdapterFlavor::kTruncSvd, 0.02};
    ad.base = Matrix(2 * r, 2 * r);
    ad.b = Matrix(2 * r, r);
    ad.e = e;
    ad.a = Matrix(r, 2 * r);
    ad.alive.assign(r, 1);
    return ad;
}

}  // namespace

TEST_CASE("budget branches and hand value") {
    BudgetSchedule s{32, 8, 5, 50, 100};
    s.validate();
    CHECK(budget(s, 0) == 32);
    CHECK(budget(s, 4) == 32);
    CHECK(budget(s, 5) == 32);   // middle branch at p = 0 still gives b0
    CHECK(budget(s, 28) == 10);  // 8 + floor(24 * (22/45)^3)
    CHECK(budget(s, 50) == 8);
    CHECK(budget(s, 100) == 8);
}

TEST_CASE("budget is non-increasing") {
    BudgetSchedule s{32, 8, 5, 50, 100};
    size_t prev = budget(s, 0);
    for (size_t t = 1; t <= 100; ++t) {
        size_t b = budget(s, t);
        CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS((BudgetSchedule{8, 32, 5, 50, 100}.validate()), ContractViolation);
    CHECK_THROWS_AS((BudgetSchedule{32, 8, 50, 50, 100}.validate()), ContractViolation);
    BudgetSchedule constant{32, 32, 0, 0, 10};
    constant.validate();
    for (size_t t = 0; t <= 10; ++t) {
        CHECK(budget(constant, t) == 32);
    }
}

TEST_CASE("triplet importance hand cases") {
    Adapter ad = score_adapter({0.0, 0.0});
    std::vector<double> scores = triplet_importance(ad);
    CHECK(scores[0] == 0.0);
    CHECK(scores[1] == 0.0);

    // |E| + mean|B col| + mean|A row| = 0.5 + 0.3 + 0.2
    Adapter hand;
    hand.config = {1, 1.0, AdapterFlavor::kTruncSvd, 0.02};
    hand.base = Matrix(2, 3);
    hand.b = Matrix(2, 1);
    hand.b.data = {0.2, -0.4};
    hand.e = {0.5};
    hand.a = Matrix(1, 3);
    hand.a.data = {0.1, -0.1, 0.4};
    hand.alive = {1};
    CHECK(triplet_importance(hand)[0] == doctest::Approx(1.0).epsilon(1e-12));

    // absolute values only: sign flips change nothing
    for (double& v : hand.b.data) {
        v = -v;
    }
    hand.e[0] = -hand.e[0];
    CHECK(triplet_importance(hand)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dead triplets score minus infinity") {
    Adapter ad = score_adapter({3.0, 2.0, 1.0, 0.5});
    apply_mask(ad, std::vector<uint8_t>{1, 0, 1, 1});
    std::vector<double> scores = triplet_importance(ad);
    CHECK(scores[1] == -std::numeric_limits<double>::infinity());
    CHECK(scores[0] == 3.0);
}

TEST_CASE("collected scores carry their site and slot") {
    std::vector<Adapter> sites;
    sites.push_back(score_adapter({0.5, 0.25}));
    sites.push_back(score_adapter({0.75, 0.125}));
    std::vector<TripletScore> scores = collect_triplet_scores(sites);
    REQUIRE(scores.size() == 4);
    CHECK(scores[0].site == 0);
    CHECK(scores[0].slot == 0);
    CHECK(scores[0].score == 0.5);
    CHECK(scores[3].site == 1);
    CHECK(scores[3].slot == 1);
    CHECK(scores[3].score == 0.125);
}

TEST_CASE("local mask keeps the global top-budget triplets") {
    std::vector<Adapter> sites;
    sites.push_back(score_adapter({1.0, 0.2}));
    sites.push_back(score_adapter({0.9, 0.8}));
    BudgetSchedule s{2, 2, 0, 0, 10};
    RankMask mask = gen_local_mask(sites, 3, s);
    CHECK(mask.get(0, 0));
    CHECK_FALSE(mask.get(0, 1));
    CHECK(mask.get(1, 0));
    CHECK_FALSE(mask.get(1, 1));
    CHECK(mask.count_true() == 2);
}

TEST_CASE("budget at or above the alive count keeps everything") {
    std::vector<Adapter> sites;
    sites.push_back(score_adapter({1.0, 0.2, 0.1}));
    sites.push_back(score_adapter({0.9, 0.8, 0.7}));
    BudgetSchedule s{32, 32, 0, 0, 10};
    RankMask mask = gen_local_mask(sites, 0, s);
    CHECK(mask.count_true() == 6);

    apply_mask(sites[0], std::vector<uint8_t>{1, 0, 1});
    RankMask mask2 = gen_local_mask(sites, 0, s);
    CHECK(mask2.count_true() == 5);
    CHECK_FALSE(mask2.get(0, 1));
}

TEST_CASE("local mask true count is min(budget, alive)") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Adapter> sites;
        size_t alive_total = 0;
        for (int s = 0; s < 3; ++s) {
            std::vector<double> e(4);
            std::vector<uint8_t> mask(4);
            for (size_t i = 0; i < 4; ++i) {
                e[i] = rng.next_double();
                mask[i] = rng.next_double() < 0.7 ? 1 : 0;
            }
            Adapter ad = score_adapter(e);
            apply_mask(ad, mask);
            alive_total += live_rank(ad);
            sites.push_back(std::move(ad));
        }
        size_t b = 1 + rng.next_below(12);
        BudgetSchedule s{b, b, 0, 0, 10};
        RankMask mask = gen_local_mask(sites, 0, s);
        CHECK(mask.count_true() == std::min(b, alive_total));
    }
}

TEST_CASE("arbitration thresholds are strict") {
    RankMask prev(1, 1, true);
    std::vector<RankMask> votes;
    for (int k = 0; k < 10; ++k) {
        votes.emplace_back(1, 1, k < 6);
    }
    CHECK(arbitrate(votes, 0.5, prev).get(0, 0));  // 0.6 > 0.5

    votes.clear();
    for (int k = 0; k < 10; ++k) {
        votes.emplace_back(1, 1, k < 5);
    }
    CHECK_FALSE(arbitrate(votes, 0.5, prev).get(0, 0));  // 0.5 is not > 0.5

    RankMask dead_prev(1, 1, false);
    votes.assign(10, RankMask(1, 1, true));
    CHECK_FALSE(arbitrate(votes, 0.5, dead_prev).get(0, 0));  // monotone
}

TEST_CASE("arbitration contract checks") {
    RankMask prev(1, 2, true);
    CHECK_THROWS_AS(arbitrate({}, 0.5, prev), ContractViolation);
    CHECK_THROWS_AS(arbitrate({RankMask(1, 2, true)}, 1.0, prev), ContractViolation);
    CHECK_THROWS_AS(arbitrate({RankMask(2, 2, true)}, 0.5, prev), ContractViolation);
}

TEST_CASE("unanimous masks pass through any threshold") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        RankMask prev(2, 4, false);
        RankMask m(2, 4, false);
        for (size_t s = 0; s < 2; ++s) {
            for (size_t i = 0; i < 4; ++i) {
                bool p = rng.next_double() < 0.7;
                prev.set(s, i, p);
                m.set(s, i, p && rng.next_double() < 0.7);  // m <= prev
            }
        }
        std::vector<RankMask> votes(5, m);
        for (double th : {0.0, 0.3, 0.5, 0.9}) {
            CHECK(arbitrate(votes, th, prev) == m);
        }
    }
}

TEST_CASE("arbitration result is a subset of the previous mask") {
    Rng rng(10);
    for (int trial = 0; trial < 50; ++trial) {
        RankMask prev(2, 3, false);
        for (size_t s = 0; s < 2; ++s) {
            for (size_t i = 0; i < 3; ++i) {
                prev.set(s, i, rng.next_double() < 0.6);
            }
        }
        std::vector<RankMask> votes;
        for (int k = 0; k < 4; ++k) {
            RankMask v(2, 3, false);
            for (size_t s = 0; s < 2; ++s) {
                for (size_t i = 0; i < 3; ++i) {
                    v.set(s, i, rng.next_double() < 0.5);
                }
            }
            votes.push_back(std::move(v));
        }
        RankMask out = arbitrate(votes, 0.5, prev);
        CHECK(out.is_subset_of(prev));
    }
}

TEST_CASE("mask bit packing round trips") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        size_t sites = 1 + rng.next_below(4);
        size_t rank = 1 + rng.next_below(13);
        RankMask m(sites, rank, false);
        for (size_t s = 0; s < sites; ++s) {
            for (size_t i = 0; i < rank; ++i) {
                m.set(s, i, rng.next_double() < 0.5);
            }
        }
        CHECK(RankMask::from_packed_bits(m.packed_bits(), sites, rank) == m);
        CHECK(m.packed_bits().size() == m.packed_size());
    }
}

TEST_SUITE_END();
