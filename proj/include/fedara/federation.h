#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedara/config.h"
#include "fedara/payload.h"
#include "fedara/rank_alloc.h"
#include "fedara/rng.h"

namespace fedara {

struct CommLedger {
    struct Entry {
        uint64_t bytes_down = 0;
        uint64_t bytes_up = 0;
    };
    std::vector<Entry> rounds;

    uint64_t total_down() const;
    uint64_t total_up() const;
};

struct RoundRecord {
    size_t round = 0;
    uint64_t bytes_up = 0;
    uint64_t bytes_down = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double avg_rank = 0.0;
    size_t frozen_sites = 0;
    std::optional<double> mag;  // missing when undefined (zero-norm operand)
    std::optional<double> dir;

    // diagnostics, not part of the CSV schema
    uint64_t adapter_param_bytes = 0;  // broadcast triplet floats, per client
    size_t managed_params = 0;
    size_t effective_params = 0;
};

// Uniform sample of k distinct client ids, ascending.
std::vector<size_t> clients_select(Rng& rng, size_t all_clients, size_t k);

// Apply the new global mask to every site and freeze sites whose live rank
// reached zero; returns the newly frozen site indices.
std::vector<size_t> rank_detect(TinyModel& model, const RankMask& new_mask);

struct ServerState {
    TinyModel model;
    RankMask global_mask;
    BudgetSchedule schedule;
    double threshold = 0.5;
    size_t round = 0;
    CommLedger ledger;
    Rng rng{0};
};

struct ClientState {
    size_t id = 0;
    std::vector<size_t> shard;  // indices into the training split
    TinyModel model;
};

// One full round of the protocol: select, prune/broadcast, parallel local
// training, local mask generation, prune/upload, aggregation, arbitration,
// rank detection. Byte counters are asserted against the closed-form payload
// size every round. Clients are independent given their forked rng streams;
// results do not depend on scheduling order.
RoundRecord run_round(ServerState& server, std::vector<ClientState>& clients,
                      const Dataset& train, const Dataset& val,
                      const ExperimentConfig& cfg, const Rng& root,
                      uint64_t* payload_digest);

struct RunArtifact {
    std::vector<RoundRecord> rounds;
    TinyModel final_model;
    RankMask final_mask;
    double final_test_acc = 0.0;
    CommLedger ledger;
    uint64_t payload_digest = 0;  // FNV-1a over every transmitted byte
    std::vector<std::string> warnings;
};

RunArtifact run_experiment(const ExperimentConfig& cfg);

}  // namespace fedara
