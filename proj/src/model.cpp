#include "fedara/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedara/error.h"
#include "fedara/rng.h"

namespace fedara {

namespace {

constexpr const char* kSiteNames[TinyModel::kNumSites] = {
    "block0.proj", "block0.ffn", "block1.proj", "block1.ffn"};

void activate(Matrix& z, bool identity) {
    if (identity) {
        return;
    }
    for (double& v : z.data) {
        v = std::tanh(v);
    }
}

// dZ = upstream .* (1 - h^2), with h the cached activation output.
Matrix activation_backward(const Matrix& upstream, const Matrix& h, bool identity) {
    if (identity) {
        return upstream;
    }
    Matrix dz(upstream.rows, upstream.cols);
    for (size_t i = 0; i < dz.data.size(); ++i) {
        dz.data[i] = upstream.data[i] * (1.0 - h.data[i] * h.data[i]);
    }
    return dz;
}

// Column-wise softmax (max-shifted) and mean cross-entropy.
double softmax_xent(const Matrix& logits, const std::vector<int>& labels, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    double loss = 0.0;
    for (size_t j = 0; j < logits.cols; ++j) {
        double mx = logits.at(0, j);
        for (size_t i = 1; i < logits.rows; ++i) {
            mx = std::max(mx, logits.at(i, j));
        }
        double denom = 0.0;
        for (size_t i = 0; i < logits.rows; ++i) {
            double e = std::exp(logits.at(i, j) - mx);
            probs.at(i, j) = e;
            denom += e;
        }
        for (size_t i = 0; i < logits.rows; ++i) {
            probs.at(i, j) /= denom;
        }
        loss -= std::log(probs.at(static_cast<size_t>(labels[j]), j));
    }
    return loss / static_cast<double>(logits.cols);
}

Matrix head_logits(const Matrix& head_w, const std::vector<double>& head_b, const Matrix& h) {
    Matrix logits = mat_mul(head_w, h);
    for (size_t i = 0; i < logits.rows; ++i) {
        for (size_t j = 0; j < logits.cols; ++j) {
            logits.at(i, j) += head_b[i];
        }
    }
    return logits;
}

}  // namespace

const char* site_name(size_t site) {
    FED_CHECK(site < TinyModel::kNumSites, "site index out of range");
    return kSiteNames[site];
}

size_t TinyModel::live_rank_total() const {
    size_t total = 0;
    for (const Adapter& ad : sites) {
        total += live_rank(ad);
    }
    return total;
}

double TinyModel::avg_live_rank() const {
    return static_cast<double>(live_rank_total()) / static_cast<double>(sites.size());
}

Batch make_batch(const Dataset& ds, const std::vector<size_t>& indices) {
    FED_CHECK(!indices.empty(), "empty batch");
    Batch batch;
    batch.x = Matrix(ds.dim(), indices.size());
    batch.y.resize(indices.size());
    for (size_t j = 0; j < indices.size(); ++j) {
        FED_CHECK(indices[j] < ds.size(), "batch index out of range");
        for (size_t i = 0; i < ds.dim(); ++i) {
            batch.x.at(i, j) = ds.features.at(indices[j], i);
        }
        batch.y[j] = ds.labels[indices[j]];
    }
    return batch;
}

TinyModel make_model(Rng& rng, const std::vector<Matrix>& bases, int classes,
                     const AdapterConfig& config) {
    FED_CHECK(bases.size() == TinyModel::kNumSites, "expected one base per site");
    TinyModel model;
    model.dim = bases[0].rows;
    model.classes = classes;
    for (const Matrix& base : bases) {
        FED_CHECK(base.rows == model.dim && base.cols == model.dim, "bases must be square and equal");
        if (config.flavor == AdapterFlavor::kTruncSvd) {
            model.sites.push_back(new_svd_adapter(rng, base, config));
        } else {
            model.sites.push_back(new_lora_adapter(rng, base, config));
        }
    }
    model.head_w = Matrix(static_cast<size_t>(classes), model.dim);
    model.head_b.assign(static_cast<size_t>(classes), 0.0);
    model.frozen.assign(TinyModel::kNumSites, 0);
    return model;
}

double forward_loss(const TinyModel& model, const Batch& batch, ForwardCache* cache) {
    FED_CHECK(!batch.y.empty(), "forward_loss needs a nonempty batch");
    FED_CHECK(batch.x.rows == model.dim, "batch dimension mismatch");
    if (cache) {
        cache->inputs.assign(TinyModel::kNumSites, Matrix());
        cache->u.assign(TinyModel::kNumSites, Matrix());
        cache->act.assign(TinyModel::kNumSites, Matrix());
        cache->labels = batch.y;
    }
    Matrix h = batch.x;
    for (size_t s = 0; s < TinyModel::kNumSites; ++s) {
        const Adapter& ad = model.sites[s];
        if (cache) {
            cache->inputs[s] = h;
        }
        Matrix z = mat_mul(ad.base, h);
        if (live_rank(ad) > 0) {
            Matrix u = mat_mul(ad.a, h);
            double scale = ad.scale();
            bool svd = ad.config.flavor == AdapterFlavor::kTruncSvd;
            for (size_t i = 0; i < z.rows; ++i) {
                for (size_t k = 0; k < ad.config.r_init; ++k) {
                    double w = ad.b.at(i, k) * scale;
                    if (svd) {
                        w *= ad.e[k];
                    }
                    if (w == 0.0) {
                        continue;
                    }
                    for (size_t j = 0; j < z.cols; ++j) {
                        z.at(i, j) += w * u.at(k, j);
                    }
                }
            }
            if (cache) {
                cache->u[s] = std::move(u);
            }
        }
        activate(z, model.identity_activation);
        h = std::move(z);
        if (cache) {
            cache->act[s] = h;
        }
    }
    Matrix logits = head_logits(model.head_w, model.head_b, h);
    Matrix probs;
    double loss = softmax_xent(logits, batch.y, probs);
    if (cache) {
        cache->probs = std::move(probs);
    }
    return loss;
}

Gradients backward(const TinyModel& model, const ForwardCache& cache) {
    size_t batch = cache.labels.size();
    FED_CHECK(batch > 0 && cache.probs.cols == batch, "backward needs a matching forward cache");

    Gradients g;
    g.sites.resize(TinyModel::kNumSites);
    for (size_t s = 0; s < TinyModel::kNumSites; ++s) {
        const Adapter& ad = model.sites[s];
        g.sites[s].b = Matrix(ad.b.rows, ad.b.cols);
        g.sites[s].e.assign(ad.e.size(), 0.0);
        g.sites[s].a = Matrix(ad.a.rows, ad.a.cols);
    }

    // head
    Matrix dlogits = cache.probs;
    double inv_b = 1.0 / static_cast<double>(batch);
    for (size_t j = 0; j < batch; ++j) {
        dlogits.at(static_cast<size_t>(cache.labels[j]), j) -= 1.0;
    }
    for (double& v : dlogits.data) {
        v *= inv_b;
    }
    const Matrix& h_last = cache.act[TinyModel::kNumSites - 1];
    g.head_w = mat_mul(dlogits, transpose(h_last));
    g.head_b.assign(model.head_b.size(), 0.0);
    for (size_t i = 0; i < dlogits.rows; ++i) {
        for (size_t j = 0; j < dlogits.cols; ++j) {
            g.head_b[i] += dlogits.at(i, j);
        }
    }
    Matrix upstream = mat_mul(transpose(model.head_w), dlogits);

    for (size_t s = TinyModel::kNumSites; s-- > 0;) {
        const Adapter& ad = model.sites[s];
        Matrix dz = activation_backward(upstream, cache.act[s], model.identity_activation);
        bool dead = cache.u[s].data.empty();
        double scale = ad.scale();
        if (!dead) {
            const Matrix& u = cache.u[s];
            const Matrix& x = cache.inputs[s];
            Matrix w = mat_mul(transpose(ad.b), dz);  // r x batch
            if (ad.config.flavor == AdapterFlavor::kTruncSvd) {
                Matrix v(u.rows, u.cols);  // E .* u
                Matrix t(u.rows, u.cols);  // E .* w
                for (size_t k = 0; k < u.rows; ++k) {
                    for (size_t j = 0; j < u.cols; ++j) {
                        v.at(k, j) = ad.e[k] * u.at(k, j);
                        t.at(k, j) = ad.e[k] * w.at(k, j);
                    }
                }
                Matrix gb = mat_mul(dz, transpose(v));
                for (size_t i = 0; i < gb.data.size(); ++i) {
                    g.sites[s].b.data[i] = scale * gb.data[i];
                }
                for (size_t k = 0; k < u.rows; ++k) {
                    double acc = 0.0;
                    for (size_t j = 0; j < u.cols; ++j) {
                        acc += w.at(k, j) * u.at(k, j);
                    }
                    g.sites[s].e[k] = scale * acc;
                }
                Matrix ga = mat_mul(t, transpose(x));
                for (size_t i = 0; i < ga.data.size(); ++i) {
                    g.sites[s].a.data[i] = scale * ga.data[i];
                }
                Matrix dx_delta = mat_mul(transpose(ad.a), t);
                upstream = mat_mul(transpose(ad.base), dz);
                for (size_t i = 0; i < upstream.data.size(); ++i) {
                    upstream.data[i] += scale * dx_delta.data[i];
                }
            } else {
                Matrix gb = mat_mul(dz, transpose(u));
                for (size_t i = 0; i < gb.data.size(); ++i) {
                    g.sites[s].b.data[i] = scale * gb.data[i];
                }
                Matrix ga = mat_mul(w, transpose(x));
                for (size_t i = 0; i < ga.data.size(); ++i) {
                    g.sites[s].a.data[i] = scale * ga.data[i];
                }
                Matrix dx_delta = mat_mul(transpose(ad.a), w);
                upstream = mat_mul(transpose(ad.base), dz);
                for (size_t i = 0; i < upstream.data.size(); ++i) {
                    upstream.data[i] += scale * dx_delta.data[i];
                }
            }
            // dead triplets carry no gradient
            for (size_t k = 0; k < ad.config.r_init; ++k) {
                if (ad.alive[k]) {
                    continue;
                }
                if (!g.sites[s].e.empty()) {
                    g.sites[s].e[k] = 0.0;
                }
                for (size_t row = 0; row < g.sites[s].b.rows; ++row) {
                    g.sites[s].b.at(row, k) = 0.0;
                }
                for (size_t col = 0; col < g.sites[s].a.cols; ++col) {
                    g.sites[s].a.at(k, col) = 0.0;
                }
            }
        } else {
            upstream = mat_mul(transpose(ad.base), dz);
        }
    }
    return g;
}

void adam_update(std::vector<double>& m, std::vector<double>& v, size_t step,
                 double beta1, double beta2, double eps, double lr,
                 double* params, const double* grads, size_t n) {
    FED_CHECK(m.size() == n && v.size() == n, "adam moment shape mismatch");
    FED_CHECK(step >= 1, "adam step counter must be 1-based");
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (size_t i = 0; i < n; ++i) {
        double grad = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad;
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad * grad;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

namespace {

struct TensorRef {
    double* params;
    const double* grads;
    size_t size;
};

std::vector<TensorRef> trainable_tensors(TinyModel& model, const Gradients* grads) {
    std::vector<TensorRef> refs;
    for (size_t s = 0; s < model.sites.size(); ++s) {
        Adapter& ad = model.sites[s];
        const Gradients::SiteGrads* sg = grads ? &grads->sites[s] : nullptr;
        refs.push_back({ad.b.data.data(), sg ? sg->b.data.data() : nullptr, ad.b.size()});
        refs.push_back({ad.e.data(), sg ? sg->e.data() : nullptr, ad.e.size()});
        refs.push_back({ad.a.data.data(), sg ? sg->a.data.data() : nullptr, ad.a.size()});
    }
    refs.push_back({model.head_w.data.data(),
                    grads ? grads->head_w.data.data() : nullptr, model.head_w.size()});
    refs.push_back({model.head_b.data(), grads ? grads->head_b.data() : nullptr,
                    model.head_b.size()});
    return refs;
}

}  // namespace

AdamState make_adam_state(const TinyModel& model) {
    AdamState opt;
    auto refs = trainable_tensors(const_cast<TinyModel&>(model), nullptr);
    for (const TensorRef& ref : refs) {
        opt.m.emplace_back(ref.size, 0.0);
        opt.v.emplace_back(ref.size, 0.0);
    }
    return opt;
}

void adam_step(AdamState& opt, TinyModel& model, const Gradients& grads, double lr) {
    auto refs = trainable_tensors(model, &grads);
    FED_CHECK(refs.size() == opt.m.size(), "optimizer state does not match model");
    opt.step += 1;
    for (size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].size == 0) {
            continue;
        }
        adam_update(opt.m[i], opt.v[i], opt.step, opt.beta1, opt.beta2, opt.eps, lr,
                    refs[i].params, refs[i].grads, refs[i].size);
    }
}

double local_train(TinyModel& model, AdamState& opt, const Dataset& shard,
                   size_t epochs, size_t batch_size, double lr, Rng& rng) {
    FED_CHECK(shard.size() > 0, "local_train needs a nonempty shard");
    FED_CHECK(batch_size >= 1, "batch size must be positive");
    std::vector<size_t> order(shard.size());
    std::iota(order.begin(), order.end(), 0);
    double loss_sum = 0.0;
    size_t sample_count = 0;
    ForwardCache cache;
    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        shuffle(rng, order);
        for (size_t pos = 0; pos < order.size(); pos += batch_size) {
            size_t end = std::min(pos + batch_size, order.size());
            std::vector<size_t> idx(order.begin() + pos, order.begin() + end);
            Batch batch = make_batch(shard, idx);
            double loss = forward_loss(model, batch, &cache);
            Gradients grads = backward(model, cache);
            adam_step(opt, model, grads, lr);
            loss_sum += loss * static_cast<double>(idx.size());
            sample_count += idx.size();
        }
    }
    return sample_count ? loss_sum / static_cast<double>(sample_count) : 0.0;
}

double evaluate(const TinyModel& model, const Dataset& ds) {
    FED_CHECK(ds.size() > 0, "evaluate needs a nonempty dataset");
    constexpr size_t kChunk = 256;
    size_t correct = 0;
    std::vector<size_t> idx;
    for (size_t pos = 0; pos < ds.size(); pos += kChunk) {
        size_t end = std::min(pos + kChunk, ds.size());
        idx.resize(end - pos);
        std::iota(idx.begin(), idx.end(), pos);
        Batch batch = make_batch(ds, idx);
        Matrix h = batch.x;
        for (const Adapter& ad : model.sites) {
            h = adapter_forward(ad, h);
            activate(h, model.identity_activation);
        }
        Matrix logits = head_logits(model.head_w, model.head_b, h);
        for (size_t j = 0; j < logits.cols; ++j) {
            size_t best = 0;
            for (size_t i = 1; i < logits.rows; ++i) {
                if (logits.at(i, j) > logits.at(best, j)) {
                    best = i;  // strict: ties keep the lower class
                }
            }
            if (static_cast<int>(best) == batch.y[j]) {
                ++correct;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

size_t effective_trainable_params(const TinyModel& model) {
    size_t total = model.head_count();
    for (const Adapter& ad : model.sites) {
        size_t per_triplet = ad.d_out() + ad.d_in() +
                             (ad.config.flavor == AdapterFlavor::kTruncSvd ? 1 : 0);
        total += live_rank(ad) * per_triplet;
    }
    return total;
}

size_t managed_trainable_params(const TinyModel& model, bool module_pruning) {
    size_t total = model.head_count();
    for (size_t s = 0; s < model.sites.size(); ++s) {
        if (module_pruning && model.frozen[s]) {
            continue;
        }
        const Adapter& ad = model.sites[s];
        size_t per_triplet = ad.d_out() + ad.d_in() +
                             (ad.config.flavor == AdapterFlavor::kTruncSvd ? 1 : 0);
        total += ad.config.r_init * per_triplet;
    }
    return total;
}

// ---- central pretraining (plain MLP, every weight trainable) ----

namespace {

struct PlainMlp {
    std::vector<Matrix> w;
    Matrix head_w;
    std::vector<double> head_b;
};

double plain_forward(const PlainMlp& mlp, const Batch& batch,
                     std::vector<Matrix>* acts, Matrix* probs) {
    Matrix h = batch.x;
    if (acts) {
        acts->clear();
        acts->push_back(h);  // input
    }
    for (const Matrix& w : mlp.w) {
        h = mat_mul(w, h);
        activate(h, false);
        if (acts) {
            acts->push_back(h);
        }
    }
    Matrix logits = head_logits(mlp.head_w, mlp.head_b, h);
    Matrix p;
    double loss = softmax_xent(logits, batch.y, p);
    if (probs) {
        *probs = std::move(p);
    }
    return loss;
}

}  // namespace

PretrainResult pretrain_base(Rng& rng, const Dataset& data, size_t epochs,
                             size_t dim, int classes, double lr) {
    PlainMlp mlp;
    double init_std = 1.0 / std::sqrt(static_cast<double>(dim));
    for (size_t s = 0; s < TinyModel::kNumSites; ++s) {
        mlp.w.push_back(gaussian_fill(rng, dim, dim, init_std));
    }
    mlp.head_w = Matrix(static_cast<size_t>(classes), dim);
    mlp.head_b.assign(static_cast<size_t>(classes), 0.0);

    if (epochs > 0) {
        FED_CHECK(data.size() > 0 && data.dim() == dim, "pretraining data mismatch");
        constexpr size_t kBatch = 32;
        std::vector<std::vector<double>> m, v;
        for (const Matrix& w : mlp.w) {
            m.emplace_back(w.size(), 0.0);
            v.emplace_back(w.size(), 0.0);
        }
        m.emplace_back(mlp.head_w.size(), 0.0);
        v.emplace_back(mlp.head_w.size(), 0.0);
        m.emplace_back(mlp.head_b.size(), 0.0);
        v.emplace_back(mlp.head_b.size(), 0.0);
        size_t step = 0;

        std::vector<size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<Matrix> acts;
        Matrix probs;
        for (size_t epoch = 0; epoch < epochs; ++epoch) {
            shuffle(rng, order);
            for (size_t pos = 0; pos < order.size(); pos += kBatch) {
                size_t end = std::min(pos + kBatch, order.size());
                std::vector<size_t> idx(order.begin() + pos, order.begin() + end);
                Batch batch = make_batch(data, idx);
                plain_forward(mlp, batch, &acts, &probs);

                size_t bsz = batch.y.size();
                Matrix dlogits = probs;
                for (size_t j = 0; j < bsz; ++j) {
                    dlogits.at(static_cast<size_t>(batch.y[j]), j) -= 1.0;
                }
                for (double& val : dlogits.data) {
                    val /= static_cast<double>(bsz);
                }
                Matrix ghead_w = mat_mul(dlogits, transpose(acts.back()));
                std::vector<double> ghead_b(mlp.head_b.size(), 0.0);
                for (size_t i = 0; i < dlogits.rows; ++i) {
                    for (size_t j = 0; j < dlogits.cols; ++j) {
                        ghead_b[i] += dlogits.at(i, j);
                    }
                }
                Matrix upstream = mat_mul(transpose(mlp.head_w), dlogits);
                std::vector<Matrix> gw(mlp.w.size());
                for (size_t s = mlp.w.size(); s-- > 0;) {
                    Matrix dz = activation_backward(upstream, acts[s + 1], false);
                    gw[s] = mat_mul(dz, transpose(acts[s]));
                    upstream = mat_mul(transpose(mlp.w[s]), dz);
                }

                ++step;
                for (size_t s = 0; s < mlp.w.size(); ++s) {
                    adam_update(m[s], v[s], step, 0.9, 0.999, 1e-8, lr,
                                mlp.w[s].data.data(), gw[s].data.data(), gw[s].size());
                }
                adam_update(m[mlp.w.size()], v[mlp.w.size()], step, 0.9, 0.999, 1e-8, lr,
                            mlp.head_w.data.data(), ghead_w.data.data(), ghead_w.size());
                adam_update(m[mlp.w.size() + 1], v[mlp.w.size() + 1], step, 0.9, 0.999, 1e-8,
                            lr, mlp.head_b.data(), ghead_b.data(), ghead_b.size());
            }
        }
    }
    return {std::move(mlp.w), std::move(mlp.head_w), std::move(mlp.head_b)};
}

}  // namespace fedara
