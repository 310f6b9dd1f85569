#include "fedara/payload.h"

#include <algorithm>
#include <cstring>

#include "fedara/error.h"

namespace fedara {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
}

uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

float get_f32(const uint8_t* p) {
    uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

PayloadLayout layout_of(const TinyModel& model) {
    PayloadLayout layout;
    const Adapter& ad = model.sites.front();
    layout.flavor = ad.config.flavor;
    layout.d_out = ad.d_out();
    layout.d_in = ad.d_in();
    layout.r_init = ad.config.r_init;
    layout.num_sites = model.sites.size();
    layout.head_count = model.head_count();
    return layout;
}

uint64_t payload_wire_size(const RankMask& mask, const PayloadLayout& layout) {
    uint64_t bytes = kPayloadHeaderBytes;
    bytes += mask.packed_size();
    bytes += 4ull * mask.count_true() * layout.triplet_floats();
    bytes += 4ull * layout.head_count;
    return bytes;
}

Payload comm_prune_encode(const TinyModel& model, const RankMask& mask,
                          uint32_t sample_count, uint32_t round) {
    PayloadLayout layout = layout_of(model);
    FED_CHECK(mask.num_sites() == layout.num_sites && mask.rank() == layout.r_init,
              "mask shape does not match model");

    Payload p;
    p.round = round;
    p.sample_count = sample_count;
    p.mask = mask;
    p.site_values.resize(layout.num_sites);
    for (size_t s = 0; s < layout.num_sites; ++s) {
        const Adapter& ad = model.sites[s];
        std::vector<float>& vals = p.site_values[s];
        vals.reserve(mask.count_true(s) * layout.triplet_floats());
        for (size_t k = 0; k < layout.r_init; ++k) {
            if (!mask.get(s, k)) {
                // dead positions must already be hard zeros
                FED_CHECK(ad.e.empty() || ad.e[k] == 0.0, "pruned E entry is not zero");
                continue;
            }
            for (size_t i = 0; i < layout.d_out; ++i) {
                vals.push_back(static_cast<float>(ad.b.at(i, k)));
            }
            if (layout.flavor == AdapterFlavor::kTruncSvd) {
                vals.push_back(static_cast<float>(ad.e[k]));
            }
            for (size_t j = 0; j < layout.d_in; ++j) {
                vals.push_back(static_cast<float>(ad.a.at(k, j)));
            }
        }
    }
    p.head.reserve(layout.head_count);
    for (double v : model.head_w.data) {
        p.head.push_back(static_cast<float>(v));
    }
    for (double v : model.head_b) {
        p.head.push_back(static_cast<float>(v));
    }
    return p;
}

std::vector<uint8_t> Payload::serialize(const PayloadLayout& layout) const {
    std::vector<uint8_t> out;
    out.reserve(payload_wire_size(mask, layout));
    put_u32(out, kPayloadMagic);
    put_u16(out, kPayloadVersion);
    put_u16(out, static_cast<uint16_t>(layout.num_sites));
    put_u32(out, round);
    put_u32(out, sample_count);

    std::vector<uint8_t> mask_bytes = mask.packed_bits();
    size_t bytes_per_site = (layout.r_init + 7) / 8;
    for (size_t s = 0; s < layout.num_sites; ++s) {
        out.insert(out.end(), mask_bytes.begin() + s * bytes_per_site,
                   mask_bytes.begin() + (s + 1) * bytes_per_site);
        for (float v : site_values[s]) {
            put_f32(out, v);
        }
    }
    for (float v : head) {
        put_f32(out, v);
    }
    FED_CHECK(out.size() == payload_wire_size(mask, layout),
              "serialized payload disagrees with the closed-form size");
    return out;
}

Payload Payload::deserialize(const std::vector<uint8_t>& bytes, const PayloadLayout& layout) {
    if (bytes.size() < kPayloadHeaderBytes) {
        throw PayloadError("payload shorter than header");
    }
    const uint8_t* p = bytes.data();
    if (get_u32(p) != kPayloadMagic) {
        throw PayloadError("bad payload magic");
    }
    if (get_u16(p + 4) != kPayloadVersion) {
        throw PayloadError("unsupported payload version");
    }
    if (get_u16(p + 6) != layout.num_sites) {
        throw PayloadError("payload site count mismatch");
    }
    Payload out;
    out.round = get_u32(p + 8);
    out.sample_count = get_u32(p + 12);

    size_t pos = kPayloadHeaderBytes;
    size_t bytes_per_site = (layout.r_init + 7) / 8;
    out.site_values.resize(layout.num_sites);
    std::vector<uint8_t> mask_bytes;
    mask_bytes.reserve(layout.num_sites * bytes_per_site);
    for (size_t s = 0; s < layout.num_sites; ++s) {
        if (pos + bytes_per_site > bytes.size()) {
            throw PayloadError("payload truncated in mask section");
        }
        size_t retained = 0;
        for (size_t i = 0; i < layout.r_init; ++i) {
            retained += (bytes[pos + i / 8] >> (i % 8)) & 1u;
        }
        mask_bytes.insert(mask_bytes.end(), bytes.begin() + pos, bytes.begin() + pos + bytes_per_site);
        pos += bytes_per_site;
        size_t nfloats = retained * layout.triplet_floats();
        if (pos + 4 * nfloats > bytes.size()) {
            throw PayloadError("payload truncated in parameter section");
        }
        out.site_values[s].reserve(nfloats);
        for (size_t i = 0; i < nfloats; ++i) {
            out.site_values[s].push_back(get_f32(&bytes[pos]));
            pos += 4;
        }
    }
    if (pos + 4 * layout.head_count != bytes.size()) {
        throw PayloadError("payload head section size mismatch");
    }
    out.head.reserve(layout.head_count);
    for (size_t i = 0; i < layout.head_count; ++i) {
        out.head.push_back(get_f32(&bytes[pos]));
        pos += 4;
    }
    out.mask = RankMask::from_packed_bits(mask_bytes, layout.num_sites, layout.r_init);
    return out;
}

uint64_t Payload::adapter_param_bytes(const PayloadLayout& layout) const {
    return 4ull * mask.count_true() * layout.triplet_floats();
}

void decode_apply(TinyModel& model, const Payload& payload, const RankMask& mask) {
    PayloadLayout layout = layout_of(model);
    FED_CHECK(payload.mask == mask, "payload mask does not match the expected mask");
    FED_CHECK(mask.num_sites() == layout.num_sites && mask.rank() == layout.r_init,
              "mask shape does not match model");
    if (payload.head.size() != layout.head_count) {
        throw PayloadError("payload head count mismatch");
    }
    for (size_t s = 0; s < layout.num_sites; ++s) {
        Adapter& ad = model.sites[s];
        const std::vector<float>& vals = payload.site_values[s];
        size_t expected = mask.count_true(s) * layout.triplet_floats();
        if (vals.size() != expected) {
            throw PayloadError("payload site value count mismatch");
        }
        size_t pos = 0;
        for (size_t k = 0; k < layout.r_init; ++k) {
            if (mask.get(s, k)) {
                for (size_t i = 0; i < layout.d_out; ++i) {
                    ad.b.at(i, k) = vals[pos++];
                }
                if (layout.flavor == AdapterFlavor::kTruncSvd) {
                    ad.e[k] = vals[pos++];
                }
                for (size_t j = 0; j < layout.d_in; ++j) {
                    ad.a.at(k, j) = vals[pos++];
                }
            } else {
                if (!ad.e.empty()) {
                    ad.e[k] = 0.0;
                }
                for (size_t i = 0; i < layout.d_out; ++i) {
                    ad.b.at(i, k) = 0.0;
                }
                for (size_t j = 0; j < layout.d_in; ++j) {
                    ad.a.at(k, j) = 0.0;
                }
            }
        }
        ad.alive = mask.site_mask(s);
    }
    for (size_t i = 0; i < model.head_w.size(); ++i) {
        model.head_w.data[i] = payload.head[i];
    }
    for (size_t i = 0; i < model.head_b.size(); ++i) {
        model.head_b[i] = payload.head[model.head_w.size() + i];
    }
}

AggregatedParams fedavg(const std::vector<ClientUpload>& uploads, const RankMask& mask) {
    FED_CHECK(!uploads.empty(), "fedavg needs at least one payload");
    std::vector<const ClientUpload*> sorted;
    sorted.reserve(uploads.size());
    for (const ClientUpload& u : uploads) {
        FED_CHECK(u.payload.mask == mask, "fedavg payload mask mismatch");
        sorted.push_back(&u);
    }
    std::sort(sorted.begin(), sorted.end(), [](const ClientUpload* a, const ClientUpload* b) {
        return a->client_id < b->client_id;
    });

    double weight_sum = 0.0;
    for (const ClientUpload* u : sorted) {
        weight_sum += static_cast<double>(u->payload.sample_count);
    }
    FED_CHECK(weight_sum > 0.0, "fedavg weight sum is zero");

    AggregatedParams agg;
    agg.site_values.resize(mask.num_sites());
    for (size_t s = 0; s < mask.num_sites(); ++s) {
        agg.site_values[s].assign(sorted.front()->payload.site_values[s].size(), 0.0);
    }
    agg.head.assign(sorted.front()->payload.head.size(), 0.0);

    for (const ClientUpload* u : sorted) {
        double w = static_cast<double>(u->payload.sample_count) / weight_sum;
        for (size_t s = 0; s < mask.num_sites(); ++s) {
            const std::vector<float>& vals = u->payload.site_values[s];
            FED_CHECK(vals.size() == agg.site_values[s].size(), "fedavg value count mismatch");
            for (size_t i = 0; i < vals.size(); ++i) {
                agg.site_values[s][i] += w * static_cast<double>(vals[i]);
            }
        }
        FED_CHECK(u->payload.head.size() == agg.head.size(), "fedavg head count mismatch");
        for (size_t i = 0; i < agg.head.size(); ++i) {
            agg.head[i] += w * static_cast<double>(u->payload.head[i]);
        }
    }
    return agg;
}

void apply_aggregated(TinyModel& model, const AggregatedParams& agg, const RankMask& mask) {
    PayloadLayout layout = layout_of(model);
    for (size_t s = 0; s < layout.num_sites; ++s) {
        Adapter& ad = model.sites[s];
        const std::vector<double>& vals = agg.site_values[s];
        FED_CHECK(vals.size() == mask.count_true(s) * layout.triplet_floats(),
                  "aggregated value count mismatch");
        size_t pos = 0;
        for (size_t k = 0; k < layout.r_init; ++k) {
            if (mask.get(s, k)) {
                for (size_t i = 0; i < layout.d_out; ++i) {
                    ad.b.at(i, k) = vals[pos++];
                }
                if (layout.flavor == AdapterFlavor::kTruncSvd) {
                    ad.e[k] = vals[pos++];
                }
                for (size_t j = 0; j < layout.d_in; ++j) {
                    ad.a.at(k, j) = vals[pos++];
                }
            } else {
                if (!ad.e.empty()) {
                    ad.e[k] = 0.0;
                }
                for (size_t i = 0; i < layout.d_out; ++i) {
                    ad.b.at(i, k) = 0.0;
                }
                for (size_t j = 0; j < layout.d_in; ++j) {
                    ad.a.at(k, j) = 0.0;
                }
            }
        }
        ad.alive = mask.site_mask(s);
    }
    FED_CHECK(agg.head.size() == layout.head_count, "aggregated head count mismatch");
    for (size_t i = 0; i < model.head_w.size(); ++i) {
        model.head_w.data[i] = agg.head[i];
    }
    for (size_t i = 0; i < model.head_b.size(); ++i) {
        model.head_b[i] = agg.head[model.head_w.size() + i];
    }
}

}  // namespace fedara
