#include "fedara/cli.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fedara/error.h"
#include "fedara/model.h"

namespace fedara {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    try {
        if (target.has_parent_path()) {
            fs::create_directories(target.parent_path());
        }
        fs::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw IoError("cannot open for writing: " + tmp.string());
            }
            out << content;
            if (!out) {
                throw IoError("write failed: " + tmp.string());
            }
        }
        fs::rename(tmp, target);
    } catch (const fs::filesystem_error& e) {
        throw IoError("cannot write " + path + ": " + e.what());
    }
}

std::string render_rounds_csv(const std::vector<RoundRecord>& rows, Method method) {
    std::ostringstream out;
    out << "round,method,bytes_up,bytes_down,train_loss,val_acc,avg_rank,frozen_sites,mag,dir\n";
    for (const RoundRecord& r : rows) {
        out << r.round << ',' << method_name(method) << ',' << r.bytes_up << ','
            << r.bytes_down << ',' << fmt(r.train_loss) << ',' << fmt(r.val_acc) << ','
            << fmt(r.avg_rank) << ',' << r.frozen_sites << ','
            << (r.mag ? fmt(*r.mag) : "") << ',' << (r.dir ? fmt(*r.dir) : "") << '\n';
    }
    return out.str();
}

std::string render_ranks_csv(const TinyModel& model) {
    std::ostringstream out;
    out << "site,name,live_rank\n";
    for (size_t s = 0; s < model.sites.size(); ++s) {
        out << s << ',' << site_name(s) << ',' << live_rank(model.sites[s]) << '\n';
    }
    return out.str();
}

std::string render_drift_csv(const DriftReport& report) {
    std::ostringstream out;
    out << "flavor,r,mc_mean,stderr,closed_form,slope\n";
    for (const DriftRow& row : report.rows) {
        bool ba = row.flavor == DriftFlavor::kBA;
        out << (ba ? "BA" : "BEA") << ',' << row.r << ',' << fmt(row.mc_mean) << ','
            << fmt(row.std_error) << ',' << fmt(row.closed_form) << ','
            << fmt(ba ? report.slope_ba : report.slope_bea) << '\n';
    }
    return out.str();
}

int cmd_run(const ExperimentConfig& cfg) {
    RunArtifact artifact = run_experiment(cfg);
    for (const std::string& w : artifact.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    write_file_atomic(cfg.output + "_rounds.csv", render_rounds_csv(artifact.rounds, cfg.method));
    write_file_atomic(cfg.output + "_ranks.csv", render_ranks_csv(artifact.final_model));
    double gb_up = static_cast<double>(artifact.ledger.total_up()) / 1e9;
    double gb_down = static_cast<double>(artifact.ledger.total_down()) / 1e9;
    std::cout << "summary: method=" << method_name(cfg.method)
              << " final_test_acc=" << fmt(artifact.final_test_acc)
              << " total_gb=" << fmt(gb_up + gb_down) << " (up=" << fmt(gb_up)
              << " down=" << fmt(gb_down) << ")"
              << " final_live_triplets=" << artifact.final_mask.count_true() << '\n';
    return 0;
}

int cmd_schedule(const ExperimentConfig& cfg) {
    BudgetSchedule schedule;
    schedule.b0 = cfg.r_init * TinyModel::kNumSites;
    schedule.bT = cfg.resolved_target_rank() * TinyModel::kNumSites;
    schedule.t_w = cfg.warmup_rounds;
    schedule.t_f = cfg.resolved_final_rounds();
    schedule.total_rounds = cfg.rounds;
    schedule.validate();
    std::ostringstream out;
    out << "t,budget\n";
    for (size_t t = 0; t <= cfg.rounds; ++t) {
        out << t << ',' << budget(schedule, t) << '\n';
    }
    write_file_atomic(cfg.output + "_schedule.csv", out.str());
    return 0;
}

int cmd_drift(const DriftConfig& cfg) {
    DriftReport report = drift_monte_carlo(cfg.params);
    write_file_atomic(cfg.output, render_drift_csv(report));
    std::cout << "BA slope: " << fmt(report.slope_ba) << '\n';
    std::cout << "BEA slope: " << fmt(report.slope_bea) << '\n';
    return 0;
}

int cmd_partition_stats(const ExperimentConfig& cfg) {
    Rng root(cfg.seed);
    Dataset full;
    if (cfg.csv_path.empty()) {
        Rng data_rng = root.fork("data");
        full = gen_synthetic(data_rng, cfg.synth_n, cfg.dim, cfg.classes, cfg.margin);
    } else {
        full = load_csv(cfg.csv_path);
    }
    Rng split_rng = root.fork("split");
    SplitResult split = train_val_test_split(full, split_rng);
    for (const std::string& w : split.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    PartitionSpec pspec;
    pspec.scheme = cfg.partition;
    pspec.alpha = cfg.partition_alpha;
    pspec.labels_per_client = cfg.labels_per_client;
    pspec.num_clients = cfg.num_clients;
    pspec.seed = cfg.seed;
    std::vector<std::vector<size_t>> shards = partition(split.train, pspec);

    std::ostringstream out;
    out << "client,size,distinct_labels,entropy\n";
    for (size_t k = 0; k < shards.size(); ++k) {
        std::vector<uint8_t> seen(split.train.num_classes, 0);
        for (size_t idx : shards[k]) {
            seen[split.train.labels[idx]] = 1;
        }
        size_t distinct = 0;
        for (uint8_t s : seen) {
            distinct += s;
        }
        out << k << ',' << shards[k].size() << ',' << distinct << ','
            << fmt(label_entropy(split.train, shards[k])) << '\n';
    }
    write_file_atomic(cfg.output + "_partition.csv", out.str());
    return 0;
}

int run_cli(int argc, char** argv) {
    auto usage = []() {
        std::cerr << "usage: fedara <run|schedule|drift|partition-stats> <config-file>\n";
        return 1;
    };
    if (argc < 3) {
        return usage();
    }
    std::string cmd = argv[1];
    std::string path = argv[2];
    try {
        std::string text = read_text_file(path);
        if (cmd == "run") {
            return cmd_run(parse_config(text));
        }
        if (cmd == "schedule") {
            return cmd_schedule(parse_config(text));
        }
        if (cmd == "drift") {
            return cmd_drift(parse_drift_config(text));
        }
        if (cmd == "partition-stats") {
            return cmd_partition_stats(parse_config(text));
        }
        std::cerr << "unknown subcommand '" << cmd << "'\n";
        return usage();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace fedara
