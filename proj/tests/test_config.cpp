#include "doctest.h"
#include "fedara/config.h"
#include "fedara/error.h"

using namespace fedara;

TEST_SUITE_BEGIN("config");

TEST_CASE("minimal config fills the documented defaults") {
    ExperimentConfig cfg = parse_config("method = fedara\nr_init = 8\nT = 100\nseed = 3\n");
    CHECK(cfg.method == Method::kFedara);
    CHECK(cfg.threshold == 0.5);
    CHECK(cfg.resolved_target_rank() == 2);  // r_init / 4
    CHECK(cfg.alpha_scale == 16.0);
    CHECK(cfg.warmup_rounds == 5);
    CHECK(cfg.resolved_final_rounds() == 50);  // T / 2
    CHECK(cfg.seed == 3);
    CHECK(cfg.batch_size == 4);
    CHECK(cfg.epochs_per_round == 1);
}

TEST_CASE("target rank above the initial rank is rejected") {
    CHECK_THROWS_WITH_AS(parse_config("method = fedara\nr_init = 8\nT_r = 20\nT = 100\n"),
                         doctest::Contains("T_r <= r_init"), ConfigError);
}

TEST_CASE("unknown keys are named in the error") {
    CHECK_THROWS_WITH_AS(parse_config("method = fedara\nbogus_key = 3\n"),
                         doctest::Contains("bogus_key"), ConfigError);
}

TEST_CASE("malformed values are rejected") {
    CHECK_THROWS_AS(parse_config("method = warp\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("T = ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("lr = \n"), ConfigError);
    CHECK_THROWS_AS(parse_config("lr 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("seed = 1\nseed = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("output = \"unterminated\n"), ConfigError);
}

TEST_CASE("comments and quoted paths") {
    ExperimentConfig cfg = parse_config(
        "# experiment\n"
        "method = fedsvd   # trailing comment\n"
        "\n"
        "data = \"/tmp/my data#1.csv\"\n"
        "dim = 12\n"
        "r_init = 6\n"
        "classes = 3\n");
    CHECK(cfg.method == Method::kFedSvd);
    CHECK(cfg.csv_path == "/tmp/my data#1.csv");
    CHECK(cfg.dim == 12);
}

TEST_CASE("constraint violations name the constraint") {
    CHECK_THROWS_WITH_AS(parse_config("clients_per_round = 200\nnum_clients = 100\n"),
                         doctest::Contains("clients_per_round <= num_clients"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("T = 10\nt_w = 5\nt_f = 5\n"),
                         doctest::Contains("t_w + t_f < T"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("T_h = 1.0\n"), doctest::Contains("T_h"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("r_init = 10\ndim = 16\n"),
                         doctest::Contains("r_init <= dim / 2"), ConfigError);
}

TEST_CASE("serialize then parse is a fixed point") {
    ExperimentConfig cfg = parse_config(
        "method = fedara\nr_init = 6\nT = 40\nt_f = 20\nseed = 9\nlr = 0.0125\n"
        "partition = pathological\nlabels_per_client = 1\noutput = \"out/x\"\n"
        "module_pruning = off\n");
    std::string text = serialize_config(cfg);
    ExperimentConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.method == cfg.method);
    CHECK(back.lr == cfg.lr);
    CHECK(back.partition == cfg.partition);
    CHECK(back.labels_per_client == cfg.labels_per_client);
    CHECK(back.module_pruning == cfg.module_pruning);
    CHECK(back.output == cfg.output);
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("drift config parsing") {
    DriftConfig cfg = parse_drift_config(
        "d = 64\nr_values = 2, 4, 8, 16, 32\ntau_b = 1\nrho_b = 0.8\ntau_a = 1\n"
        "rho_a = 0.8\ntau_e = 1\ntrials = 2000\nseed = 5\noutput = \"d.csv\"\n");
    CHECK(cfg.params.r_values == std::vector<size_t>{2, 4, 8, 16, 32});
    CHECK(cfg.params.rho_b == 0.8);
    CHECK(cfg.params.trials == 2000);
    CHECK(cfg.output == "d.csv");

    CHECK_THROWS_AS(parse_drift_config("trials = 50\n"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_drift_config("margin = 3\n"), doctest::Contains("margin"),
                         ConfigError);
}

TEST_SUITE_END();
