#pragma once

#include <string>
#include <vector>

#include "fedara/config.h"
#include "fedara/federation.h"

namespace fedara {

// Subcommands. Each returns a process exit status: 0 success, 1 config
// error, 2 runtime error. File outputs are written atomically (temp file,
// then rename) so a rerun always replaces them wholesale.
int cmd_run(const ExperimentConfig& cfg);
int cmd_schedule(const ExperimentConfig& cfg);
int cmd_drift(const DriftConfig& cfg);
int cmd_partition_stats(const ExperimentConfig& cfg);

int run_cli(int argc, char** argv);

void write_file_atomic(const std::string& path, const std::string& content);

std::string render_rounds_csv(const std::vector<RoundRecord>& rows, Method method);
std::string render_ranks_csv(const TinyModel& model);
std::string render_drift_csv(const DriftReport& report);

}  // namespace fedara
