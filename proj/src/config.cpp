#include "fedara/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fedara/error.h"

namespace fedara {

const char* method_name(Method m) {
    switch (m) {
        case Method::kFedara: return "fedara";
        case Method::kFedSvd: return "fedsvd";
        case Method::kFedLora: return "fedlora";
    }
    return "?";
}

size_t ExperimentConfig::resolved_target_rank() const {
    if (target_rank > 0) {
        return target_rank;
    }
    return std::max<size_t>(1, r_init / 4);
}

size_t ExperimentConfig::resolved_final_rounds() const {
    return final_rounds > 0 ? final_rounds : rounds / 2;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// key -> value pairs from `key = value` lines; '#' starts a comment unless
// inside a quoted value.
std::map<std::string, std::string> parse_pairs(const std::string& text) {
    std::map<std::string, std::string> pairs;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string raw = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        std::string value;
        if (!raw.empty() && raw[0] == '"') {
            size_t close = raw.find('"', 1);
            if (close == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated quote");
            }
            value = raw.substr(1, close - 1);
        } else {
            size_t hash = raw.find('#');
            value = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        }
        if (value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty value for '" + key + "'");
        }
        if (pairs.count(key)) {
            throw ConfigError("duplicate key '" + key + "'");
        }
        pairs[key] = value;
    }
    return pairs;
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument("trailing");
        }
        return u;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) {
            throw std::invalid_argument("trailing");
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") {
        return true;
    }
    if (v == "off" || v == "false" || v == "0") {
        return false;
    }
    throw ConfigError("key '" + key + "': expected on/off, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    auto pairs = parse_pairs(text);
    for (const auto& [key, value] : pairs) {
        if (key == "method") {
            if (value == "fedara") {
                cfg.method = Method::kFedara;
            } else if (value == "fedsvd") {
                cfg.method = Method::kFedSvd;
            } else if (value == "fedlora") {
                cfg.method = Method::kFedLora;
            } else {
                throw ConfigError("key 'method': unknown method '" + value + "'");
            }
        } else if (key == "dim") {
            cfg.dim = to_u64(key, value);
        } else if (key == "classes") {
            cfg.classes = static_cast<int>(to_u64(key, value));
        } else if (key == "r_init") {
            cfg.r_init = to_u64(key, value);
        } else if (key == "alpha_scale") {
            cfg.alpha_scale = to_double(key, value);
        } else if (key == "init_std") {
            cfg.init_std = to_double(key, value);
        } else if (key == "T_r") {
            cfg.target_rank = to_u64(key, value);
        } else if (key == "T_h") {
            cfg.threshold = to_double(key, value);
        } else if (key == "t_w") {
            cfg.warmup_rounds = to_u64(key, value);
        } else if (key == "t_f") {
            cfg.final_rounds = to_u64(key, value);
        } else if (key == "module_pruning") {
            cfg.module_pruning = to_bool(key, value);
        } else if (key == "T") {
            cfg.rounds = to_u64(key, value);
        } else if (key == "num_clients") {
            cfg.num_clients = to_u64(key, value);
        } else if (key == "clients_per_round") {
            cfg.clients_per_round = to_u64(key, value);
        } else if (key == "partition") {
            if (value == "iid") {
                cfg.partition = PartitionScheme::kIid;
            } else if (value == "dirichlet") {
                cfg.partition = PartitionScheme::kDirichlet;
            } else if (value == "pathological") {
                cfg.partition = PartitionScheme::kPathological;
            } else {
                throw ConfigError("key 'partition': unknown scheme '" + value + "'");
            }
        } else if (key == "alpha") {
            cfg.partition_alpha = to_double(key, value);
        } else if (key == "labels_per_client") {
            cfg.labels_per_client = static_cast<int>(to_u64(key, value));
        } else if (key == "lr") {
            cfg.lr = to_double(key, value);
        } else if (key == "batch_size") {
            cfg.batch_size = to_u64(key, value);
        } else if (key == "epochs_per_round") {
            cfg.epochs_per_round = to_u64(key, value);
        } else if (key == "pretrain_epochs") {
            cfg.pretrain_epochs = to_u64(key, value);
        } else if (key == "data") {
            if (value != "synthetic") {
                cfg.csv_path = value;
            }
        } else if (key == "n") {
            cfg.synth_n = to_u64(key, value);
        } else if (key == "margin") {
            cfg.margin = to_double(key, value);
        } else if (key == "seed") {
            cfg.seed = to_u64(key, value);
        } else if (key == "mag_dir_site") {
            cfg.mag_dir_site = to_u64(key, value);
        } else if (key == "output") {
            cfg.output = value;
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& constraint) {
        throw ConfigError("constraint violated: " + constraint);
    };
    if (cfg.dim < 4) fail("dim >= 4");
    if (cfg.classes < 2) fail("classes >= 2");
    if (cfg.dim < static_cast<size_t>(cfg.classes)) fail("dim >= classes");
    if (cfg.r_init < 1) fail("r_init >= 1");
    if (cfg.r_init > cfg.dim / 2) fail("r_init <= dim / 2");
    if (cfg.alpha_scale <= 0.0) fail("alpha_scale > 0");
    if (cfg.init_std <= 0.0) fail("init_std > 0");
    if (cfg.resolved_target_rank() > cfg.r_init) fail("T_r <= r_init");
    if (cfg.threshold < 0.0 || cfg.threshold >= 1.0) fail("0 <= T_h < 1");
    if (cfg.rounds < 1) fail("T >= 1");
    if (cfg.warmup_rounds + cfg.resolved_final_rounds() >= cfg.rounds) fail("t_w + t_f < T");
    if (cfg.num_clients < 1) fail("num_clients >= 1");
    if (cfg.clients_per_round < 1) fail("clients_per_round >= 1");
    if (cfg.clients_per_round > cfg.num_clients) fail("clients_per_round <= num_clients");
    if (cfg.partition == PartitionScheme::kDirichlet && cfg.partition_alpha <= 0.0) {
        fail("alpha > 0");
    }
    if (cfg.labels_per_client < 1 || cfg.labels_per_client > 2) fail("labels_per_client in {1, 2}");
    if (cfg.lr <= 0.0) fail("lr > 0");
    if (cfg.batch_size < 1) fail("batch_size >= 1");
    if (cfg.epochs_per_round < 1) fail("epochs_per_round >= 1");
    if (cfg.csv_path.empty() && cfg.synth_n < 10) fail("n >= 10");
    if (cfg.margin < 0.0) fail("margin >= 0");
    if (cfg.mag_dir_site >= 4) fail("mag_dir_site < 4");
    if (cfg.output.empty()) fail("output nonempty");
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "method = " << method_name(cfg.method) << '\n';
    out << "dim = " << cfg.dim << '\n';
    out << "classes = " << cfg.classes << '\n';
    out << "r_init = " << cfg.r_init << '\n';
    out << "alpha_scale = " << num(cfg.alpha_scale) << '\n';
    out << "init_std = " << num(cfg.init_std) << '\n';
    out << "T_r = " << cfg.resolved_target_rank() << '\n';
    out << "T_h = " << num(cfg.threshold) << '\n';
    out << "t_w = " << cfg.warmup_rounds << '\n';
    out << "t_f = " << cfg.resolved_final_rounds() << '\n';
    out << "module_pruning = " << (cfg.module_pruning ? "on" : "off") << '\n';
    out << "T = " << cfg.rounds << '\n';
    out << "num_clients = " << cfg.num_clients << '\n';
    out << "clients_per_round = " << cfg.clients_per_round << '\n';
    switch (cfg.partition) {
        case PartitionScheme::kIid: out << "partition = iid\n"; break;
        case PartitionScheme::kDirichlet: out << "partition = dirichlet\n"; break;
        case PartitionScheme::kPathological: out << "partition = pathological\n"; break;
    }
    out << "alpha = " << num(cfg.partition_alpha) << '\n';
    out << "labels_per_client = " << cfg.labels_per_client << '\n';
    out << "lr = " << num(cfg.lr) << '\n';
    out << "batch_size = " << cfg.batch_size << '\n';
    out << "epochs_per_round = " << cfg.epochs_per_round << '\n';
    out << "pretrain_epochs = " << cfg.pretrain_epochs << '\n';
    if (cfg.csv_path.empty()) {
        out << "data = synthetic\n";
        out << "n = " << cfg.synth_n << '\n';
        out << "margin = " << num(cfg.margin) << '\n';
    } else {
        out << "data = \"" << cfg.csv_path << "\"\n";
    }
    out << "seed = " << cfg.seed << '\n';
    out << "mag_dir_site = " << cfg.mag_dir_site << '\n';
    out << "output = \"" << cfg.output << "\"\n";
    return out.str();
}

DriftConfig parse_drift_config(const std::string& text) {
    DriftConfig cfg;
    auto pairs = parse_pairs(text);
    for (const auto& [key, value] : pairs) {
        if (key == "d") {
            cfg.params.d = to_u64(key, value);
        } else if (key == "r_values") {
            cfg.params.r_values.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) {
                    cfg.params.r_values.push_back(to_u64(key, item));
                }
            }
            if (cfg.params.r_values.empty()) {
                throw ConfigError("key 'r_values': expected a comma-separated list");
            }
        } else if (key == "tau_b") {
            cfg.params.tau_b = to_double(key, value);
        } else if (key == "rho_b") {
            cfg.params.rho_b = to_double(key, value);
        } else if (key == "tau_a") {
            cfg.params.tau_a = to_double(key, value);
        } else if (key == "rho_a") {
            cfg.params.rho_a = to_double(key, value);
        } else if (key == "tau_e") {
            cfg.params.tau_e = to_double(key, value);
        } else if (key == "trials") {
            cfg.params.trials = to_u64(key, value);
        } else if (key == "seed") {
            cfg.params.seed = to_u64(key, value);
        } else if (key == "output") {
            cfg.output = value;
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    try {
        cfg.params.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fedara
