#include "fedara/federation.h"

#include <algorithm>
#include <numeric>

#include "fedara/error.h"
#include "fedara/metrics.h"
#include "fedara/model.h"

namespace fedara {

namespace {

uint64_t fnv1a_fold(uint64_t h, const std::vector<uint8_t>& bytes) {
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001B3ull;
    }
    return h;
}

bool uses_rank_masks(Method m) {
    return m != Method::kFedLora;  // LoRA has no triplets to score
}

}  // namespace

uint64_t CommLedger::total_down() const {
    uint64_t t = 0;
    for (const Entry& e : rounds) {
        t += e.bytes_down;
    }
    return t;
}

uint64_t CommLedger::total_up() const {
    uint64_t t = 0;
    for (const Entry& e : rounds) {
        t += e.bytes_up;
    }
    return t;
}

std::vector<size_t> clients_select(Rng& rng, size_t all_clients, size_t k) {
    FED_CHECK(k >= 1, "must select at least one client");
    FED_CHECK(k <= all_clients, "cannot select more clients than exist");
    std::vector<size_t> ids(all_clients);
    std::iota(ids.begin(), ids.end(), 0);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + rng.next_below(all_clients - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<size_t> rank_detect(TinyModel& model, const RankMask& new_mask) {
    FED_CHECK(new_mask.num_sites() == model.sites.size(), "mask site count mismatch");
    std::vector<size_t> newly_frozen;
    for (size_t s = 0; s < model.sites.size(); ++s) {
        apply_mask(model.sites[s], new_mask.site_mask(s));
        if (live_rank(model.sites[s]) == 0 && !model.frozen[s]) {
            model.frozen[s] = 1;
            newly_frozen.push_back(s);
        }
    }
    return newly_frozen;
}

RoundRecord run_round(ServerState& server, std::vector<ClientState>& clients,
                      const Dataset& train, const Dataset& val,
                      const ExperimentConfig& cfg, const Rng& root,
                      uint64_t* payload_digest) {
    size_t t = server.round;
    FED_CHECK(t < cfg.rounds, "experiment already finished");
    PayloadLayout layout = layout_of(server.model);
    Rng round_rng = root.fork("round", t);

    Rng select_rng = server.rng.fork("select", t);
    std::vector<size_t> selected = clients_select(select_rng, clients.size(), cfg.clients_per_round);

    // prune and broadcast under the current global mask
    const RankMask& mask = server.global_mask;
    Payload broadcast = comm_prune_encode(server.model, mask, 0, static_cast<uint32_t>(t));
    std::vector<uint8_t> broadcast_bytes = broadcast.serialize(layout);
    uint64_t bytes_down = static_cast<uint64_t>(broadcast_bytes.size()) * selected.size();
    FED_CHECK(bytes_down == payload_wire_size(mask, layout) * selected.size(),
              "downlink bytes disagree with the closed form");
    if (payload_digest) {
        *payload_digest = fnv1a_fold(*payload_digest, broadcast_bytes);
    }
    Payload received = Payload::deserialize(broadcast_bytes, layout);

    double lr_t = cfg.lr * (1.0 - static_cast<double>(t) / static_cast<double>(cfg.rounds));

    // local training; clients are independent given their forked streams
    uint64_t bytes_up = 0;
    double loss_sum = 0.0;
    std::vector<ClientUpload> uploads;
    std::vector<RankMask> local_masks;
    std::vector<Matrix> local_deltas;
    for (size_t id : selected) {
        ClientState& client = clients[id];
        client.model.frozen.assign(client.model.sites.size(), 0);
        decode_apply(client.model, received, mask);
        rank_detect(client.model, mask);

        Dataset shard = train.subset(client.shard);
        AdamState opt = make_adam_state(client.model);  // optimizer state is per-round
        Rng train_rng = round_rng.fork("client", id);
        loss_sum += local_train(client.model, opt, shard, cfg.epochs_per_round,
                                cfg.batch_size, lr_t, train_rng);

        if (uses_rank_masks(cfg.method)) {
            local_masks.push_back(gen_local_mask(client.model.sites, t, server.schedule));
        }
        local_deltas.push_back(delta_w(client.model.sites[cfg.mag_dir_site]));

        Payload up = comm_prune_encode(client.model, mask,
                                       static_cast<uint32_t>(client.shard.size()),
                                       static_cast<uint32_t>(t));
        std::vector<uint8_t> up_bytes = up.serialize(layout);
        uint64_t mask_bytes = uses_rank_masks(cfg.method) ? local_masks.back().packed_size() : 0;
        bytes_up += up_bytes.size() + mask_bytes;
        if (payload_digest) {
            *payload_digest = fnv1a_fold(*payload_digest, up_bytes);
            if (uses_rank_masks(cfg.method)) {
                *payload_digest = fnv1a_fold(*payload_digest, local_masks.back().packed_bits());
            }
        }
        uploads.push_back({id, Payload::deserialize(up_bytes, layout)});
    }
    FED_CHECK(bytes_up == (payload_wire_size(mask, layout) +
                           (uses_rank_masks(cfg.method) ? mask.packed_size() : 0)) *
                              selected.size(),
              "uplink bytes disagree with the closed form");

    AggregatedParams agg = fedavg(uploads, mask);
    apply_aggregated(server.model, agg, mask);

    RoundRecord rec;
    rec.round = t;
    rec.bytes_down = bytes_down;
    rec.bytes_up = bytes_up;
    rec.train_loss = loss_sum / static_cast<double>(selected.size());
    rec.adapter_param_bytes = broadcast.adapter_param_bytes(layout);

    Matrix global_delta = delta_w(server.model.sites[cfg.mag_dir_site]);
    rec.mag = mag_discrepancy(global_delta, local_deltas);
    try {
        rec.dir = dir_discrepancy(global_delta, local_deltas);
    } catch (const UndefinedMetric&) {
        rec.dir = std::nullopt;
    }

    // arbitration produces the next global mask; pruning stays monotone
    RankMask next_mask = mask;
    if (uses_rank_masks(cfg.method)) {
        next_mask = arbitrate(local_masks, server.threshold, mask);
    }
    rank_detect(server.model, next_mask);
    server.global_mask = next_mask;

    rec.val_acc = evaluate(server.model, val);
    rec.avg_rank = server.model.avg_live_rank();
    rec.frozen_sites = static_cast<size_t>(
        std::count(server.model.frozen.begin(), server.model.frozen.end(), uint8_t{1}));
    rec.managed_params = managed_trainable_params(server.model, cfg.module_pruning);
    rec.effective_params = effective_trainable_params(server.model);

    server.ledger.rounds.push_back({bytes_down, bytes_up});
    server.round += 1;
    return rec;
}

RunArtifact run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Rng root(cfg.seed);
    RunArtifact artifact;

    Dataset full;
    if (cfg.csv_path.empty()) {
        Rng data_rng = root.fork("data");
        full = gen_synthetic(data_rng, cfg.synth_n, cfg.dim, cfg.classes, cfg.margin);
    } else {
        full = load_csv(cfg.csv_path);
        if (full.dim() != cfg.dim) {
            throw ConfigError("dataset feature dim " + std::to_string(full.dim()) +
                              " does not match dim = " + std::to_string(cfg.dim));
        }
        if (full.num_classes != cfg.classes) {
            throw ConfigError("dataset has " + std::to_string(full.num_classes) +
                              " classes but classes = " + std::to_string(cfg.classes));
        }
    }
    Rng split_rng = root.fork("split");
    SplitResult split = train_val_test_split(full, split_rng);
    artifact.warnings = split.warnings;

    // stand-in pretraining corpus: an independent task with the same geometry
    Rng pre_data_rng = root.fork("pretrain-data");
    size_t pre_n = cfg.csv_path.empty() ? cfg.synth_n : 2000;
    Dataset pre = gen_synthetic(pre_data_rng, pre_n, cfg.dim, cfg.classes, cfg.margin);
    Rng pre_rng = root.fork("pretrain");
    PretrainResult pretrained =
        pretrain_base(pre_rng, pre, cfg.pretrain_epochs, cfg.dim, cfg.classes);

    PartitionSpec pspec;
    pspec.scheme = cfg.partition;
    pspec.alpha = cfg.partition_alpha;
    pspec.labels_per_client = cfg.labels_per_client;
    pspec.num_clients = cfg.num_clients;
    pspec.seed = cfg.seed;
    std::vector<std::vector<size_t>> shards = partition(split.train, pspec);

    AdapterConfig acfg;
    acfg.r_init = cfg.r_init;
    acfg.alpha = cfg.alpha_scale;
    acfg.init_std = cfg.init_std;
    acfg.flavor = cfg.method == Method::kFedLora ? AdapterFlavor::kLora
                                                 : AdapterFlavor::kTruncSvd;
    Rng init_rng = root.fork("model-init");
    TinyModel global = make_model(init_rng, pretrained.bases, cfg.classes, acfg);

    size_t sites = TinyModel::kNumSites;
    BudgetSchedule schedule;
    schedule.total_rounds = cfg.rounds;
    schedule.b0 = cfg.r_init * sites;
    if (cfg.method == Method::kFedara) {
        schedule.bT = cfg.resolved_target_rank() * sites;
        schedule.t_w = cfg.warmup_rounds;
        schedule.t_f = cfg.resolved_final_rounds();
    } else {
        // baselines keep the full rank for the whole run
        schedule.bT = schedule.b0;
        schedule.t_w = 0;
        schedule.t_f = 0;
    }
    schedule.validate();

    ServerState server;
    server.model = std::move(global);
    server.global_mask = RankMask(sites, cfg.r_init, true);
    server.schedule = schedule;
    server.threshold = cfg.threshold;
    server.rng = root.fork("server");

    std::vector<ClientState> clients;
    clients.reserve(cfg.num_clients);
    for (size_t id = 0; id < cfg.num_clients; ++id) {
        clients.push_back({id, shards[id], server.model});
    }

    artifact.payload_digest = 0xCBF29CE484222325ull;
    for (size_t t = 0; t < cfg.rounds; ++t) {
        artifact.rounds.push_back(run_round(server, clients, split.train, split.val, cfg,
                                            root, &artifact.payload_digest));
    }

    artifact.final_test_acc = evaluate(server.model, split.test);
    artifact.final_mask = server.global_mask;
    artifact.ledger = server.ledger;
    artifact.final_model = std::move(server.model);
    return artifact;
}

}  // namespace fedara
