#include "fedara/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "fedara/error.h"
#include "fedara/rng.h"

namespace fedara {

Dataset Dataset::subset(const std::vector<size_t>& indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.features = Matrix(indices.size(), features.cols);
    out.labels.resize(indices.size());
    for (size_t i = 0; i < indices.size(); ++i) {
        size_t src = indices[i];
        FED_CHECK(src < size(), "subset index out of range");
        std::copy_n(&features.data[src * features.cols], features.cols,
                    &out.features.data[i * features.cols]);
        out.labels[i] = labels[src];
    }
    return out;
}

Dataset gen_synthetic(Rng& rng, size_t n, size_t d, int classes, double margin) {
    FED_CHECK(classes >= 2, "need at least two classes");
    FED_CHECK(d >= static_cast<size_t>(classes), "feature dim must be >= classes");
    FED_CHECK(n >= 1, "need at least one sample");
    FED_CHECK(margin >= 0.0, "margin must be non-negative");

    // One random unit direction per class, scaled to the margin.
    Matrix means(static_cast<size_t>(classes), d);
    for (int c = 0; c < classes; ++c) {
        double norm_sq = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double v = rng.next_gaussian();
            means.at(c, j) = v;
            norm_sq += v * v;
        }
        double inv = margin / std::sqrt(norm_sq);
        for (size_t j = 0; j < d; ++j) {
            means.at(c, j) *= inv;
        }
    }

    Dataset ds;
    ds.num_classes = classes;
    ds.features = Matrix(n, d);
    ds.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int label = static_cast<int>(i % static_cast<size_t>(classes));
        ds.labels[i] = label;
        for (size_t j = 0; j < d; ++j) {
            ds.features.at(i, j) = means.at(label, j) + rng.next_gaussian();
        }
    }
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open dataset file: " + path);
    }
    Dataset ds;
    std::string line;
    size_t line_no = 0;
    size_t dim = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() < 2) {
            throw ParseError("line " + std::to_string(line_no) + ": expected label and features");
        }
        size_t pos = 0;
        int label = 0;
        try {
            label = std::stoi(cells[0], &pos);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(line_no) + ": label is not an integer");
        }
        if (pos != cells[0].size() || label < 0) {
            throw ParseError("line " + std::to_string(line_no) + ": label is not a non-negative integer");
        }
        if (dim == 0) {
            dim = cells.size() - 1;
        } else if (cells.size() - 1 != dim) {
            throw ParseError("line " + std::to_string(line_no) + ": inconsistent feature count");
        }
        for (size_t j = 1; j < cells.size(); ++j) {
            try {
                size_t fpos = 0;
                double v = std::stod(cells[j], &fpos);
                if (fpos != cells[j].size() || !std::isfinite(v)) {
                    throw std::invalid_argument("trailing");
                }
                values.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": bad feature value '" + cells[j] + "'");
            }
        }
        ds.labels.push_back(label);
    }
    if (ds.labels.empty()) {
        throw ParseError("dataset file is empty: " + path);
    }
    ds.features.rows = ds.labels.size();
    ds.features.cols = dim;
    ds.features.data = std::move(values);
    ds.num_classes = 1 + *std::max_element(ds.labels.begin(), ds.labels.end());
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write dataset file: " + path);
    }
    char buf[64];
    for (size_t i = 0; i < ds.size(); ++i) {
        out << ds.labels[i];
        for (size_t j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", ds.features.at(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

namespace {

// Cumulative-floor apportionment of `fraction` across buckets: bucket i gets
// floor(cum_i) - floor(cum_{i-1}) items, so the global total stays within one
// of fraction * total while each bucket stays within +-1 of its exact share.
std::vector<size_t> apportion(const std::vector<size_t>& counts, double fraction) {
    std::vector<size_t> out(counts.size(), 0);
    double cum = 0.0;
    size_t given = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        cum += fraction * static_cast<double>(counts[i]);
        size_t target = static_cast<size_t>(std::floor(cum + 1e-9));
        out[i] = target - given;
        given = target;
    }
    return out;
}

}  // namespace

SplitResult train_val_test_split(const Dataset& ds, Rng& rng) {
    FED_CHECK(ds.size() >= 10, "split needs at least 10 samples");
    SplitResult res;

    std::vector<std::vector<size_t>> by_class(ds.num_classes);
    for (size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.labels[i]].push_back(i);
    }
    bool stratify = true;
    for (int c = 0; c < ds.num_classes; ++c) {
        if (by_class[c].size() < 3) {
            stratify = false;
            res.warnings.push_back("class " + std::to_string(c) +
                                   " has fewer than 3 samples; falling back to unstratified split");
            break;
        }
    }

    std::vector<size_t> train_idx, val_idx, test_idx;
    if (stratify) {
        std::vector<size_t> counts(by_class.size());
        for (size_t c = 0; c < by_class.size(); ++c) {
            counts[c] = by_class[c].size();
        }
        std::vector<size_t> val_counts = apportion(counts, 0.1);
        std::vector<size_t> test_counts = apportion(counts, 0.1);
        for (size_t c = 0; c < by_class.size(); ++c) {
            shuffle(rng, by_class[c]);
            size_t v = val_counts[c];
            size_t e = test_counts[c];
            for (size_t i = 0; i < by_class[c].size(); ++i) {
                if (i < v) {
                    val_idx.push_back(by_class[c][i]);
                } else if (i < v + e) {
                    test_idx.push_back(by_class[c][i]);
                } else {
                    train_idx.push_back(by_class[c][i]);
                }
            }
        }
    } else {
        std::vector<size_t> order(ds.size());
        std::iota(order.begin(), order.end(), 0);
        shuffle(rng, order);
        size_t v = static_cast<size_t>(std::floor(0.1 * static_cast<double>(ds.size()) + 1e-9));
        size_t e = v;
        for (size_t i = 0; i < order.size(); ++i) {
            if (i < v) {
                val_idx.push_back(order[i]);
            } else if (i < v + e) {
                test_idx.push_back(order[i]);
            } else {
                train_idx.push_back(order[i]);
            }
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    res.train = ds.subset(train_idx);
    res.val = ds.subset(val_idx);
    res.test = ds.subset(test_idx);
    return res;
}

namespace {

std::vector<size_t> client_sizes(size_t n, size_t m) {
    std::vector<size_t> sizes(m, n / m);
    for (size_t k = 0; k < n % m; ++k) {
        sizes[k] += 1;
    }
    return sizes;
}

std::vector<std::vector<size_t>> partition_iid(const Dataset& train, size_t m, Rng& rng) {
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(rng, order);
    std::vector<size_t> sizes = client_sizes(train.size(), m);
    std::vector<std::vector<size_t>> shards(m);
    size_t pos = 0;
    for (size_t k = 0; k < m; ++k) {
        shards[k].assign(order.begin() + pos, order.begin() + pos + sizes[k]);
        pos += sizes[k];
    }
    return shards;
}

std::vector<double> dirichlet_mixture(Rng& rng, size_t classes, double alpha) {
    std::vector<double> g(classes);
    double sum = 0.0;
    std::gamma_distribution<double> gamma(alpha, 1.0);
    for (size_t c = 0; c < classes; ++c) {
        g[c] = gamma(rng);
        sum += g[c];
    }
    if (sum <= 0.0) {
        // extreme alpha underflowed every draw; degenerate one-hot mixture
        std::fill(g.begin(), g.end(), 0.0);
        g[rng.next_below(classes)] = 1.0;
        return g;
    }
    for (double& v : g) {
        v /= sum;
    }
    return g;
}

std::vector<std::vector<size_t>> partition_dirichlet(const Dataset& train,
                                                     const PartitionSpec& spec, Rng& rng) {
    size_t m = spec.num_clients;
    size_t classes = static_cast<size_t>(train.num_classes);
    std::vector<size_t> sizes = client_sizes(train.size(), m);

    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<std::vector<size_t>> pools(classes);
        for (size_t i = 0; i < train.size(); ++i) {
            pools[train.labels[i]].push_back(i);
        }
        for (auto& pool : pools) {
            shuffle(rng, pool);
        }

        std::vector<std::vector<size_t>> shards(m);
        for (size_t k = 0; k < m; ++k) {
            std::vector<double> mix = dirichlet_mixture(rng, classes, spec.alpha);
            // largest-remainder apportionment of this client's size over labels
            std::vector<size_t> want(classes, 0);
            std::vector<std::pair<double, size_t>> rema(classes);
            size_t assigned = 0;
            for (size_t c = 0; c < classes; ++c) {
                double exact = mix[c] * static_cast<double>(sizes[k]);
                want[c] = static_cast<size_t>(std::floor(exact));
                rema[c] = {exact - std::floor(exact), c};
                assigned += want[c];
            }
            std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) {
                    return a.first > b.first;
                }
                return a.second < b.second;
            });
            for (size_t i = 0; assigned < sizes[k]; ++i) {
                want[rema[i % classes].second] += 1;
                ++assigned;
            }

            size_t taken = 0;
            for (size_t c = 0; c < classes; ++c) {
                size_t take = std::min(want[c], pools[c].size());
                for (size_t i = 0; i < take; ++i) {
                    shards[k].push_back(pools[c].back());
                    pools[c].pop_back();
                }
                taken += take;
            }
            // deficit: drained pools could not honor the mixture; draw from
            // the largest remaining pools so later clients stay non-empty
            while (taken < sizes[k]) {
                size_t best = classes;
                for (size_t c = 0; c < classes; ++c) {
                    if (!pools[c].empty() && (best == classes || pools[c].size() > pools[best].size())) {
                        best = c;
                    }
                }
                FED_CHECK(best < classes, "partition ran out of samples");
                shards[k].push_back(pools[best].back());
                pools[best].pop_back();
                ++taken;
            }
        }

        bool ok = true;
        for (const auto& shard : shards) {
            if (shard.empty()) {
                ok = false;
                break;
            }
        }
        if (ok) {
            for (auto& shard : shards) {
                std::sort(shard.begin(), shard.end());
            }
            return shards;
        }
    }
    throw ContractViolation("dirichlet partition left a client empty after 100 attempts");
}

std::vector<std::vector<size_t>> partition_pathological(const Dataset& train,
                                                        const PartitionSpec& spec, Rng& rng) {
    FED_CHECK(spec.labels_per_client == 1 || spec.labels_per_client == 2,
              "pathological scheme supports 1 or 2 labels per client");
    size_t m = spec.num_clients;
    size_t shards_per_client = static_cast<size_t>(spec.labels_per_client);
    size_t num_shards = m * shards_per_client;
    FED_CHECK(num_shards <= train.size(), "more shards than samples");

    // sort-and-deal: label-sorted order, equal contiguous shards, shuffled deal
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (train.labels[a] != train.labels[b]) {
            return train.labels[a] < train.labels[b];
        }
        return a < b;
    });

    std::vector<size_t> shard_sizes = client_sizes(train.size(), num_shards);
    std::vector<size_t> shard_ids(num_shards);
    std::iota(shard_ids.begin(), shard_ids.end(), 0);
    shuffle(rng, shard_ids);

    std::vector<size_t> shard_offset(num_shards + 1, 0);
    for (size_t s = 0; s < num_shards; ++s) {
        shard_offset[s + 1] = shard_offset[s] + shard_sizes[s];
    }

    std::vector<std::vector<size_t>> shards(m);
    for (size_t k = 0; k < m; ++k) {
        for (size_t j = 0; j < shards_per_client; ++j) {
            size_t sid = shard_ids[k * shards_per_client + j];
            for (size_t i = shard_offset[sid]; i < shard_offset[sid + 1]; ++i) {
                shards[k].push_back(order[i]);
            }
        }
        std::sort(shards[k].begin(), shards[k].end());
        FED_CHECK(!shards[k].empty(), "pathological partition left a client empty");
    }
    return shards;
}

}  // namespace

std::vector<std::vector<size_t>> partition(const Dataset& train, const PartitionSpec& spec) {
    FED_CHECK(spec.num_clients >= 1, "need at least one client");
    FED_CHECK(spec.num_clients <= train.size(), "more clients than samples");
    Rng rng = Rng(spec.seed).fork("partition");
    switch (spec.scheme) {
        case PartitionScheme::kIid:
            return partition_iid(train, spec.num_clients, rng);
        case PartitionScheme::kDirichlet:
            FED_CHECK(spec.alpha > 0.0, "dirichlet alpha must be positive");
            return partition_dirichlet(train, spec, rng);
        case PartitionScheme::kPathological:
            return partition_pathological(train, spec, rng);
    }
    throw ContractViolation("unknown partition scheme");
}

double label_entropy(const Dataset& ds, const std::vector<size_t>& shard) {
    std::vector<size_t> hist(ds.num_classes, 0);
    for (size_t idx : shard) {
        hist[ds.labels[idx]] += 1;
    }
    double total = static_cast<double>(shard.size());
    double h = 0.0;
    for (size_t c : hist) {
        if (c > 0) {
            double p = static_cast<double>(c) / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace fedara
