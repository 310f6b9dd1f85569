#include "fedara/adapter.h"

#include <algorithm>

#include "fedara/error.h"
#include "fedara/rng.h"

namespace fedara {

namespace {

void check_rank_bound(const Matrix& base, const AdapterConfig& config) {
    FED_CHECK(config.r_init >= 1, "adapter rank must be at least 1");
    FED_CHECK(config.alpha > 0.0, "adapter alpha must be positive");
    FED_CHECK(config.init_std > 0.0, "adapter init_std must be positive");
    size_t bound = std::min(base.rows, base.cols) / 2;
    FED_CHECK(config.r_init <= bound, "adapter rank exceeds min(d_in, d_out)/2");
}

}  // namespace

Adapter new_svd_adapter(Rng& rng, Matrix base, const AdapterConfig& config) {
    FED_CHECK(config.flavor == AdapterFlavor::kTruncSvd, "new_svd_adapter needs TruncSVD flavor");
    check_rank_bound(base, config);
    Adapter ad;
    ad.config = config;
    ad.b = gaussian_fill(rng, base.rows, config.r_init, config.init_std);
    ad.e.assign(config.r_init, 0.0);  // zero E => delta is zero at init
    ad.a = gaussian_fill(rng, config.r_init, base.cols, config.init_std);
    ad.alive.assign(config.r_init, 1);
    ad.base = std::move(base);
    return ad;
}

Adapter new_lora_adapter(Rng& rng, Matrix base, const AdapterConfig& config) {
    FED_CHECK(config.flavor == AdapterFlavor::kLora, "new_lora_adapter needs LoRA flavor");
    check_rank_bound(base, config);
    Adapter ad;
    ad.config = config;
    ad.b = Matrix(base.rows, config.r_init);  // zero B => delta is zero at init
    ad.a = gaussian_fill(rng, config.r_init, base.cols, config.init_std);
    ad.alive.assign(config.r_init, 1);
    ad.base = std::move(base);
    return ad;
}

Matrix delta_w(const Adapter& ad) {
    size_t r = ad.config.r_init;
    Matrix delta(ad.d_out(), ad.d_in());
    double s = ad.scale();
    for (size_t i = 0; i < delta.rows; ++i) {
        for (size_t k = 0; k < r; ++k) {
            double w = ad.b.at(i, k) * s;
            if (ad.config.flavor == AdapterFlavor::kTruncSvd) {
                w *= ad.e[k];
            }
            if (w == 0.0) {
                continue;
            }
            const double* arow = &ad.a.data[k * ad.a.cols];
            double* drow = &delta.data[i * delta.cols];
            for (size_t j = 0; j < delta.cols; ++j) {
                drow[j] += w * arow[j];
            }
        }
    }
    return delta;
}

Matrix adapter_forward(const Adapter& ad, const Matrix& x) {
    FED_CHECK(x.rows == ad.d_in(), "adapter_forward input dimension mismatch");
    Matrix y = mat_mul(ad.base, x);
    Matrix u = mat_mul(ad.a, x);  // r x batch
    double s = ad.scale();
    bool svd = ad.config.flavor == AdapterFlavor::kTruncSvd;
    for (size_t i = 0; i < y.rows; ++i) {
        for (size_t k = 0; k < ad.config.r_init; ++k) {
            double w = ad.b.at(i, k) * s;
            if (svd) {
                w *= ad.e[k];
            }
            if (w == 0.0) {
                continue;
            }
            const double* urow = &u.data[k * u.cols];
            double* yrow = &y.data[i * y.cols];
            for (size_t j = 0; j < y.cols; ++j) {
                yrow[j] += w * urow[j];
            }
        }
    }
    return y;
}

void apply_mask(Adapter& ad, const std::vector<uint8_t>& mask) {
    FED_CHECK(mask.size() == ad.config.r_init, "mask length mismatch");
    for (size_t i = 0; i < mask.size(); ++i) {
        FED_CHECK(!(mask[i] && !ad.alive[i]), "mask revives a dead triplet");
    }
    for (size_t i = 0; i < mask.size(); ++i) {
        if (ad.alive[i] && !mask[i]) {
            if (!ad.e.empty()) {
                ad.e[i] = 0.0;
            }
            for (size_t row = 0; row < ad.b.rows; ++row) {
                ad.b.at(row, i) = 0.0;
            }
            for (size_t col = 0; col < ad.a.cols; ++col) {
                ad.a.at(i, col) = 0.0;
            }
        }
    }
    ad.alive.resize(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) {
        ad.alive[i] = mask[i] ? 1 : 0;
    }
}

size_t live_rank(const Adapter& ad) {
    return static_cast<size_t>(std::count(ad.alive.begin(), ad.alive.end(), uint8_t{1}));
}

}  // namespace fedara
