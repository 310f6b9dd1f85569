#include "fedara/rank_alloc.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedara/error.h"

namespace fedara {

void BudgetSchedule::validate() const {
    FED_CHECK(bT <= b0, "final budget exceeds initial budget");
    FED_CHECK(t_w + t_f < total_rounds, "warm-up plus final window must leave decay room");
}

size_t budget(const BudgetSchedule& s, size_t t) {
    FED_CHECK(t <= s.total_rounds, "round outside schedule");
    if (t < s.t_w) {
        return s.b0;
    }
    if (t >= s.total_rounds - s.t_f) {
        return s.bT;
    }
    double p = static_cast<double>(t - s.t_w) /
               static_cast<double>(s.total_rounds - s.t_f - s.t_w);
    double rem = 1.0 - p;
    double cubic = static_cast<double>(s.b0 - s.bT) * rem * rem * rem;
    return s.bT + static_cast<size_t>(std::floor(cubic));
}

RankMask::RankMask(size_t num_sites, size_t rank, bool value)
    : num_sites_(num_sites), rank_(rank), bits_(num_sites * rank, value ? 1 : 0) {}

size_t RankMask::count_true() const {
    return static_cast<size_t>(std::count(bits_.begin(), bits_.end(), uint8_t{1}));
}

size_t RankMask::count_true(size_t site) const {
    size_t n = 0;
    for (size_t i = 0; i < rank_; ++i) {
        n += bits_[site * rank_ + i];
    }
    return n;
}

std::vector<uint8_t> RankMask::site_mask(size_t site) const {
    return {bits_.begin() + site * rank_, bits_.begin() + (site + 1) * rank_};
}

std::vector<uint8_t> RankMask::packed_bits() const {
    size_t bytes_per_site = (rank_ + 7) / 8;
    std::vector<uint8_t> out(num_sites_ * bytes_per_site, 0);
    for (size_t s = 0; s < num_sites_; ++s) {
        for (size_t i = 0; i < rank_; ++i) {
            if (bits_[s * rank_ + i]) {
                out[s * bytes_per_site + i / 8] |= static_cast<uint8_t>(1u << (i % 8));
            }
        }
    }
    return out;
}

RankMask RankMask::from_packed_bits(const std::vector<uint8_t>& bytes,
                                    size_t num_sites, size_t rank) {
    size_t bytes_per_site = (rank + 7) / 8;
    FED_CHECK(bytes.size() == num_sites * bytes_per_site, "packed mask size mismatch");
    RankMask mask(num_sites, rank, false);
    for (size_t s = 0; s < num_sites; ++s) {
        for (size_t i = 0; i < rank; ++i) {
            bool bit = (bytes[s * bytes_per_site + i / 8] >> (i % 8)) & 1u;
            mask.set(s, i, bit);
        }
    }
    return mask;
}

bool RankMask::is_subset_of(const RankMask& other) const {
    if (num_sites_ != other.num_sites_ || rank_ != other.rank_) {
        return false;
    }
    for (size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) {
            return false;
        }
    }
    return true;
}

std::vector<double> triplet_importance(const Adapter& ad) {
    FED_CHECK(ad.config.flavor == AdapterFlavor::kTruncSvd,
              "triplet importance is defined for TruncSVD adapters");
    size_t r = ad.config.r_init;
    std::vector<double> scores(r, -std::numeric_limits<double>::infinity());
    double d1 = static_cast<double>(ad.d_out());
    double d2 = static_cast<double>(ad.d_in());
    for (size_t i = 0; i < r; ++i) {
        if (!ad.alive[i]) {
            continue;
        }
        double col_sum = 0.0;
        for (size_t row = 0; row < ad.b.rows; ++row) {
            col_sum += std::fabs(ad.b.at(row, i));
        }
        double row_sum = 0.0;
        for (size_t col = 0; col < ad.a.cols; ++col) {
            row_sum += std::fabs(ad.a.at(i, col));
        }
        scores[i] = std::fabs(ad.e[i]) + col_sum / d1 + row_sum / d2;
    }
    return scores;
}

std::vector<TripletScore> collect_triplet_scores(const std::vector<Adapter>& sites) {
    std::vector<TripletScore> out;
    for (size_t s = 0; s < sites.size(); ++s) {
        std::vector<double> scores = triplet_importance(sites[s]);
        for (size_t i = 0; i < scores.size(); ++i) {
            out.push_back({s, i, scores[i]});
        }
    }
    return out;
}

RankMask gen_local_mask(const std::vector<Adapter>& sites, size_t t,
                        const BudgetSchedule& schedule) {
    FED_CHECK(!sites.empty(), "gen_local_mask needs at least one site");
    size_t r = sites[0].config.r_init;
    std::vector<double> scores;
    std::vector<uint8_t> alive;
    scores.reserve(sites.size() * r);
    alive.reserve(sites.size() * r);
    for (const Adapter& ad : sites) {
        FED_CHECK(ad.config.r_init == r, "sites disagree on r_init");
        std::vector<double> s = triplet_importance(ad);
        scores.insert(scores.end(), s.begin(), s.end());
        alive.insert(alive.end(), ad.alive.begin(), ad.alive.end());
    }
    size_t alive_count = static_cast<size_t>(std::count(alive.begin(), alive.end(), uint8_t{1}));
    size_t k = std::min(budget(schedule, t), alive_count);
    std::vector<size_t> keep = top_k_indices(scores, k, alive);

    RankMask mask(sites.size(), r, false);
    for (size_t idx : keep) {
        mask.set(idx / r, idx % r, true);
    }
    return mask;
}

RankMask arbitrate(const std::vector<RankMask>& local_masks, double threshold,
                   const RankMask& prev_global) {
    FED_CHECK(!local_masks.empty(), "arbitrate needs at least one client mask");
    FED_CHECK(threshold >= 0.0 && threshold < 1.0, "threshold must be in [0, 1)");
    size_t sites = prev_global.num_sites();
    size_t rank = prev_global.rank();
    for (const RankMask& m : local_masks) {
        FED_CHECK(m.num_sites() == sites && m.rank() == rank, "mask shape mismatch");
    }
    double k = static_cast<double>(local_masks.size());
    RankMask result(sites, rank, false);
    for (size_t s = 0; s < sites; ++s) {
        for (size_t i = 0; i < rank; ++i) {
            if (!prev_global.get(s, i)) {
                continue;  // monotone: dead positions stay dead
            }
            size_t votes = 0;
            for (const RankMask& m : local_masks) {
                votes += m.get(s, i) ? 1 : 0;
            }
            if (static_cast<double>(votes) / k > threshold) {
                result.set(s, i, true);
            }
        }
    }
    return result;
}

}  // namespace fedara
