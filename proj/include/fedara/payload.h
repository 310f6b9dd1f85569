#pragma once

#include <cstdint>
#include <vector>

#include "fedara/model.h"
#include "fedara/rank_alloc.h"

namespace fedara {

// Static geometry a payload is decoded against.
struct PayloadLayout {
    AdapterFlavor flavor = AdapterFlavor::kTruncSvd;
    size_t d_out = 16;
    size_t d_in = 16;
    size_t r_init = 8;
    size_t num_sites = TinyModel::kNumSites;
    size_t head_count = 0;  // classes * dim + classes

    // Floats carried per retained triplet.
    size_t triplet_floats() const {
        return d_out + d_in + (flavor == AdapterFlavor::kTruncSvd ? 1 : 0);
    }
};

PayloadLayout layout_of(const TinyModel& model);

// Mask-pruned wire form of all adapter sites plus the head.
//
// Serialized layout, little-endian:
//   header (16 bytes): magic u32, version u16, site count u16, round u32,
//                      sample count u32
//   per site: mask bits (ceil(r_init/8) bytes, LSB-first), then for each
//     retained triplet in ascending slot order: B column (d_out f32),
//     E entry (1 f32, TruncSVD only), A row (d_in f32)
//   head: head_count f32 (weight row-major, then bias)
struct Payload {
    uint32_t round = 0;
    uint32_t sample_count = 0;
    RankMask mask;
    std::vector<std::vector<float>> site_values;
    std::vector<float> head;

    std::vector<uint8_t> serialize(const PayloadLayout& layout) const;
    static Payload deserialize(const std::vector<uint8_t>& bytes, const PayloadLayout& layout);

    // Retained-triplet parameter bytes only (no head, masks, or header).
    uint64_t adapter_param_bytes(const PayloadLayout& layout) const;
};

constexpr uint32_t kPayloadMagic = 0x41524146;  // "FARA"
constexpr uint16_t kPayloadVersion = 1;
constexpr size_t kPayloadHeaderBytes = 16;

// Closed-form wire size for a given mask; every serialized payload matches it.
uint64_t payload_wire_size(const RankMask& mask, const PayloadLayout& layout);

// Keep only mask-true triplets plus the head. Parameters must already respect
// the mask's history: positions outside it are required to be zero.
Payload comm_prune_encode(const TinyModel& model, const RankMask& mask,
                          uint32_t sample_count, uint32_t round);

// Overwrite retained positions from the payload, zero everything else, and
// replace the head. The payload's mask must equal the given mask.
void decode_apply(TinyModel& model, const Payload& payload, const RankMask& mask);

struct ClientUpload {
    size_t client_id = 0;
    Payload payload;
};

// Sample-count weighted mean of the uploads, accumulated in 64-bit floats in
// ascending client-id order; mirrors the payload value layout.
struct AggregatedParams {
    std::vector<std::vector<double>> site_values;
    std::vector<double> head;
};

AggregatedParams fedavg(const std::vector<ClientUpload>& uploads, const RankMask& mask);

void apply_aggregated(TinyModel& model, const AggregatedParams& agg, const RankMask& mask);

}  // namespace fedara
