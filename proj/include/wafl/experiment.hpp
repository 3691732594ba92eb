#pragma once

#include <filesystem>
#include <vector>

#include "wafl/config.hpp"
#include "wafl/metrics.hpp"

namespace wafl {

struct RunSummary {
    std::vector<MetricsRecord> records;
    std::filesystem::path metrics_csv;
    std::filesystem::path manifest_json;
};

struct RunOptions {
    bool progress = false;  // progress lines on stderr
};

// Executes the configured run: partitions the training data, runs
// total_epochs synchronous epochs, evaluates every eval_interval epochs
// (plus the initial and final models) and writes metrics.csv, confusion
// matrices, optional snapshots and manifest.json into output_dir.
// Holds a .lock file in output_dir for the duration of the run.
RunSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

}  // namespace wafl
