#pragma once

#include <cstdint>
#include <vector>

#include "fedara/adapter.h"
#include "fedara/dataset.h"

namespace fedara {

class Rng;

// Two-block classifier over frozen linear sites with adapter deltas:
//   x -> proj -> tanh -> ffn -> tanh   (block 0)
//     -> proj -> tanh -> ffn -> tanh   (block 1)
//     -> head -> logits
// Base weights are shared verbatim by every client; only the adapters and the
// head carry trainable state. One model per worker, never shared mutably.
struct TinyModel {
    static constexpr size_t kNumSites = 4;

    size_t dim = 16;
    int classes = 4;
    std::vector<Adapter> sites;     // kNumSites, frozen dim x dim bases
    Matrix head_w;                  // classes x dim, trainable, never rank-managed
    std::vector<double> head_b;     // classes
    std::vector<uint8_t> frozen;    // per site, set by rank detection
    bool identity_activation = false;  // test hook: tanh -> identity

    size_t live_rank_total() const;
    double avg_live_rank() const;
    size_t head_count() const { return head_w.size() + head_b.size(); }
};

const char* site_name(size_t site);

struct Batch {
    Matrix x;  // dim x batch, samples as columns
    std::vector<int> y;
};

Batch make_batch(const Dataset& ds, const std::vector<size_t>& indices);

struct Gradients {
    struct SiteGrads {
        Matrix b;
        std::vector<double> e;
        Matrix a;
    };
    std::vector<SiteGrads> sites;
    Matrix head_w;
    std::vector<double> head_b;
};

struct ForwardCache {
    std::vector<Matrix> inputs;  // input to each site
    std::vector<Matrix> u;       // A * input per site (empty when the site is dead)
    std::vector<Matrix> act;     // post-activation output per site
    Matrix probs;                // softmax over classes, per column
    std::vector<int> labels;
};

struct PretrainResult {
    std::vector<Matrix> bases;  // kNumSites frozen block weights
    Matrix head_w;              // the pretraining head, kept for diagnostics
    std::vector<double> head_b;
};

// Central pretraining of the full tiny model (blocks directly trainable, no
// adapters) on a stand-in task; the returned blocks become the frozen bases.
// epochs = 0 keeps the random init.
PretrainResult pretrain_base(Rng& rng, const Dataset& data, size_t epochs,
                             size_t dim, int classes, double lr = 0.01);

TinyModel make_model(Rng& rng, const std::vector<Matrix>& bases, int classes,
                     const AdapterConfig& config);

// Mean cross-entropy over the batch; fills the cache for backward.
double forward_loss(const TinyModel& model, const Batch& batch, ForwardCache* cache);

// Analytic gradients for every trainable tensor. Dead triplet positions come
// back exactly zero; fully dead sites are skipped outright.
Gradients backward(const TinyModel& model, const ForwardCache& cache);

// One Adam update over a flat parameter array. `step` is 1-based.
void adam_update(std::vector<double>& m, std::vector<double>& v, size_t step,
                 double beta1, double beta2, double eps, double lr,
                 double* params, const double* grads, size_t n);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    size_t step = 0;
    std::vector<std::vector<double>> m;  // one slot per trainable tensor
    std::vector<std::vector<double>> v;
};

AdamState make_adam_state(const TinyModel& model);
void adam_step(AdamState& opt, TinyModel& model, const Gradients& grads, double lr);

// Seeded mini-batch passes over the shard; returns the per-sample mean loss.
double local_train(TinyModel& model, AdamState& opt, const Dataset& shard,
                   size_t epochs, size_t batch_size, double lr, Rng& rng);

// Argmax accuracy; prediction ties break toward the lower class index.
double evaluate(const TinyModel& model, const Dataset& ds);

// Positions that can still receive gradient: live triplets plus the head.
size_t effective_trainable_params(const TinyModel& model);

// Matrix-level parameter count the optimizer manages. With module pruning a
// frozen site's matrices drop out entirely; without it they stay managed even
// though their gradients are zero.
size_t managed_trainable_params(const TinyModel& model, bool module_pruning);

}  // namespace fedara
