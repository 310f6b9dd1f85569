#pragma once

#include <cstdint>
#include <string>

#include "fedara/dataset.h"
#include "fedara/metrics.h"

namespace fedara {

enum class Method { kFedara, kFedSvd, kFedLora };

const char* method_name(Method m);

struct ExperimentConfig {
    Method method = Method::kFedara;

    // model
    size_t dim = 16;
    int classes = 4;
    size_t r_init = 8;
    double alpha_scale = 16.0;
    double init_std = 0.02;

    // rank allocation
    size_t target_rank = 0;   // T_r; 0 = default r_init / 4 (at least 1)
    double threshold = 0.5;   // T_h
    size_t warmup_rounds = 5; // t_w
    size_t final_rounds = 0;  // t_f; 0 = default T / 2
    bool module_pruning = true;

    // federation
    size_t rounds = 100;  // T
    size_t num_clients = 100;
    size_t clients_per_round = 10;
    PartitionScheme partition = PartitionScheme::kDirichlet;
    double partition_alpha = 0.1;
    int labels_per_client = 2;

    // local training
    double lr = 0.02;
    size_t batch_size = 4;
    size_t epochs_per_round = 1;
    size_t pretrain_epochs = 3;

    // data: CSV path, or synthetic clusters when the path is empty
    std::string csv_path;
    size_t synth_n = 5000;
    double margin = 3.0;

    uint64_t seed = 1;
    size_t mag_dir_site = 2;
    std::string output = "fedara_out";

    // defaults that depend on other fields, resolved after parsing
    size_t resolved_target_rank() const;
    size_t resolved_final_rounds() const;
};

// Flat `key = value` text, one pair per line, '#' comments.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg);  // throws ConfigError

struct DriftConfig {
    DriftParams params;
    std::string output = "drift_out.csv";
};

DriftConfig parse_drift_config(const std::string& text);

std::string read_text_file(const std::string& path);  // throws IoError

}  // namespace fedara
