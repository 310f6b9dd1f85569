#pragma once

#include <cstdint>
#include <vector>

#include "fedara/matrix.h"

namespace fedara {

class Rng;

enum class AdapterFlavor { kLora, kTruncSvd };

struct AdapterConfig {
    size_t r_init = 8;
    double alpha = 16.0;  // delta scale is alpha / r_init
    AdapterFlavor flavor = AdapterFlavor::kTruncSvd;
    double init_std = 0.02;
};

// A frozen d_out x d_in base weight plus a trainable low-rank delta.
//
// TruncSVD: delta = (alpha / r_init) * B * diag(E) * A, with B and A Gaussian
// and E zero at construction. LoRA: delta = (alpha / r_init) * B * A, with B
// zero and A Gaussian. Either way the layer starts exactly at the base map.
//
// Triplet i is (E[i], column i of B, row i of A). Dead triplets are
// hard-zeroed, not merely flagged, so they contribute nothing to any forward
// pass regardless of how the adapter is used afterwards.
//
// Adapters are single-owner mutable state: move them between workers, never
// share one mutably.
struct Adapter {
    Matrix base;                 // frozen after construction
    Matrix b;                    // d_out x r_init
    std::vector<double> e;       // r_init diagonal entries (TruncSVD), empty for LoRA
    Matrix a;                    // r_init x d_in
    std::vector<uint8_t> alive;  // r_init
    AdapterConfig config;

    size_t d_out() const { return base.rows; }
    size_t d_in() const { return base.cols; }
    double scale() const { return config.alpha / static_cast<double>(config.r_init); }
};

Adapter new_svd_adapter(Rng& rng, Matrix base, const AdapterConfig& config);
Adapter new_lora_adapter(Rng& rng, Matrix base, const AdapterConfig& config);

// Materialized (alpha / r_init) * B * diag(E) * A (or B * A for LoRA).
// Diagnostic path only; training uses the factored forward.
Matrix delta_w(const Adapter& ad);

// (base + delta) * x computed in factored form, never materializing delta.
// x columns are independent samples.
Matrix adapter_forward(const Adapter& ad, const Matrix& x);

// Kill triplets whose mask entry is false. Pruning is monotone: reviving a
// dead triplet is a contract violation. Newly dead triplets are zeroed.
void apply_mask(Adapter& ad, const std::vector<uint8_t>& mask);

size_t live_rank(const Adapter& ad);

}  // namespace fedara
