#pragma once

#include <string>
#include <vector>

#include "harness/config.hpp"

namespace forager::harness {

struct RepeatResult {
    std::string run_dir;
    std::string checkpoint;
    uint64_t seed = 0;
    double lifespan = 0; // smoothed-history summary of the final 500 episodes
    bool lifespan_warned = false;
};

struct TrainSummary {
    std::vector<RepeatResult> repeats;
    double median_lifespan = 0, min_lifespan = 0, max_lifespan = 0;
};

// One training run per repeat under <log_dir>/r<k>, seeds base+k. With
// `resume`, repeats whose manifest reads complete are skipped and partial
// ones continue from their checkpoint.
TrainSummary cmd_train(const Config& cfg, bool resume = false);

struct RecordResult {
    std::string log_path;
    std::string frames_path; // empty when stride disabled
    size_t records = 0;
    int64_t frames = 0;
    size_t viewports = 0;
};

// Runs the frozen policy (sampling on) for `frames` env frames, logging every
// agent step; viewports every `stride` steps (0 disables).
RecordResult cmd_record(const std::string& checkpoint_path, int64_t frames, int stride,
                        const std::string& out_path, uint64_t seed);

struct AnalyzeResult {
    std::vector<std::string> artifacts;
};

// analyses: comma list of frequencies|regression|behavior|ig|export, or
// "all" (ig runs only when a checkpoint is supplied).
AnalyzeResult cmd_analyze(const std::string& log_path, const std::string& analyses,
                          const std::string& out_dir, const std::string& checkpoint_path = "");

struct BenchCell {
    std::string name;
    Config cfg;
    TrainSummary summary;
    bool complete = false;
};

struct BenchResult {
    std::vector<BenchCell> cells;
    std::string table_path;
};

// Cross-product of the [bench] lists; each cell is a cmd_train under
// <log_dir>/<cell>. Finished cells are skipped on rerun.
BenchResult cmd_bench(const Config& cfg);

// Human-readable checkpoint meta + tensor table as JSON text.
std::string cmd_inspect(const std::string& checkpoint_path);

// history.csv -> Gaussian-smoothed lifespan summary over the final 500
// episodes (the benchmark reporting metric).
std::pair<double, bool> history_lifespan_summary(const std::string& history_csv);

} // namespace forager::harness
