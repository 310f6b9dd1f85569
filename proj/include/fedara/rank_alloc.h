#pragma once

#include <cstdint>
#include <vector>

#include "fedara/adapter.h"

namespace fedara {

// Global triplet budget over rounds: b0 through the warm-up, cubic decay in
// the middle window, bT for the final stabilized rounds.
struct BudgetSchedule {
    size_t b0 = 32;           // budget during warm-up
    size_t bT = 8;            // final budget
    size_t t_w = 5;           // warm-up rounds
    size_t t_f = 50;          // final stabilized rounds
    size_t total_rounds = 100;

    void validate() const;
};

size_t budget(const BudgetSchedule& s, size_t t);

// Boolean vector over triplet slots, one run per adapter site. All sites
// share the same slot count. Pure value type; safe for concurrent reads.
class RankMask {
public:
    RankMask() = default;
    RankMask(size_t num_sites, size_t rank, bool value);

    bool get(size_t site, size_t slot) const { return bits_[site * rank_ + slot] != 0; }
    void set(size_t site, size_t slot, bool value) { bits_[site * rank_ + slot] = value ? 1 : 0; }

    size_t num_sites() const { return num_sites_; }
    size_t rank() const { return rank_; }
    size_t count_true() const;
    size_t count_true(size_t site) const;
    std::vector<uint8_t> site_mask(size_t site) const;

    // Wire form: per site, slots packed LSB-first and padded to whole bytes.
    std::vector<uint8_t> packed_bits() const;
    static RankMask from_packed_bits(const std::vector<uint8_t>& bytes,
                                     size_t num_sites, size_t rank);
    size_t packed_size() const { return num_sites_ * ((rank_ + 7) / 8); }

    bool is_subset_of(const RankMask& other) const;
    bool operator==(const RankMask& other) const = default;

private:
    size_t num_sites_ = 0;
    size_t rank_ = 0;
    std::vector<uint8_t> bits_;  // num_sites * rank flags
};

struct TripletScore {
    size_t site = 0;
    size_t slot = 0;
    double score = 0.0;
};

// Magnitude importance of each triplet: |E_i| + mean|B column i| + mean|A
// row i|. Dead slots score -infinity and are never selected.
std::vector<double> triplet_importance(const Adapter& ad);

// Flattened (site, slot, score) list over all sites, dead slots included.
std::vector<TripletScore> collect_triplet_scores(const std::vector<Adapter>& sites);

// Local mask for round t: true exactly at the top-budget(t) alive triplets
// ranked globally across sites, ties toward the lower (site, slot) index.
// When the budget covers every alive triplet the mask equals alive.
RankMask gen_local_mask(const std::vector<Adapter>& sites, size_t t,
                        const BudgetSchedule& schedule);

// Threshold vote across client masks, ANDed with the previous global mask so
// pruning is monotone: position stays true iff it was true before and the
// fraction of clients voting true strictly exceeds the threshold.
RankMask arbitrate(const std::vector<RankMask>& local_masks, double threshold,
                   const RankMask& prev_global);

}  // namespace fedara
