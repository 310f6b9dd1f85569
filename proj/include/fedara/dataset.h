#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedara/matrix.h"

namespace fedara {

class Rng;

struct Dataset {
    Matrix features;  // n x d
    std::vector<int> labels;
    int num_classes = 0;

    size_t size() const { return labels.size(); }
    size_t dim() const { return features.cols; }
    Dataset subset(const std::vector<size_t>& indices) const;
};

enum class PartitionScheme { kIid, kDirichlet, kPathological };

struct PartitionSpec {
    PartitionScheme scheme = PartitionScheme::kDirichlet;
    double alpha = 0.1;          // Dirichlet concentration
    int labels_per_client = 2;   // pathological: 1 or 2
    size_t num_clients = 10;
    uint64_t seed = 0;
};

// Class-conditional Gaussian clusters: class c is centered at margin * u_c
// for a random unit vector u_c, unit covariance, labels balanced up to the
// remainder (first n % classes labels get one extra sample).
Dataset gen_synthetic(Rng& rng, size_t n, size_t d, int classes, double margin);

// CSV rows: integer label, then decimal features. Lines starting with '#'
// are ignored.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
    std::vector<std::string> warnings;
};

// Stratified 8:1:1 split; falls back to an unstratified split (with a
// warning) when any class has fewer than 3 samples.
SplitResult train_val_test_split(const Dataset& ds, Rng& rng);

// Client shards as index lists into `train`. Shards are disjoint, cover the
// dataset, and every client receives at least one sample.
std::vector<std::vector<size_t>> partition(const Dataset& train, const PartitionSpec& spec);

// Shannon entropy (nats) of a client's label histogram; used for
// heterogeneity diagnostics.
double label_entropy(const Dataset& ds, const std::vector<size_t>& shard);

}  // namespace fedara
