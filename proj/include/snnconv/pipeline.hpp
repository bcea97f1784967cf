#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snnconv/analysis.hpp"
#include "snnconv/convert.hpp"
#include "snnconv/data.hpp"

namespace snnconv {

constexpr int kReportSchemaVersion = 1;

struct ExperimentConfig {
    std::string task = "spirals";  // blobs | spirals | idx_images
    uint64_t seed = 1;
    std::vector<int> net = {32, 32};  // hidden layer sizes
    int L = 4;
    int epochs = 400;
    double lr = 0.2;
    int batch = 32;
    std::vector<int> T_list = {2, 4, 8};
    std::vector<NeuronMode> mode_list = {NeuronMode::IF, NeuronMode::DTN};
    V0Policy v0_policy = V0Policy::half_theta();
    std::string output_dir = "out";
    std::vector<int> L_list;  // sweep axis; empty means {L}
    int n_samples = 400;
    int classes = 2;  // blobs only
    std::string idx_images;
    std::string idx_labels;
    float theta_neg = -1e-3f;
};

/// Parses and validates a config; unknown keys are rejected.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Builds the task dataset and the deterministic 75/25 split.
SplitPair prepare_data(const ExperimentConfig& cfg);

struct RunResult {
    int L = 0;
    int T = 0;
    NeuronMode mode = NeuronMode::IF;
    double accuracy = 0.0;
    ErrorReport report;
};

struct AnnResult {
    int L = 0;
    double accuracy = 0.0;
    int64_t flops_per_sample = 0;
    std::vector<double> train_loss;
};

struct ReportBundle {
    std::vector<AnnResult> ann;   // one entry per trained L
    std::vector<RunResult> runs;  // sorted by (L, T, mode)
};

/// Train -> convert -> simulate -> analyze over every (T, mode) cell; writes
/// reports.json, reports.csv, ann.ckpt and per-cell error reports into
/// cfg.output_dir. Byte-identical outputs for identical configs.
ReportBundle run_pipeline(const ExperimentConfig& cfg);

/// run_pipeline repeated over cfg.L_list (falling back to {L}), merged into
/// one report ordered by (L, T, mode).
ReportBundle run_sweep(const ExperimentConfig& cfg);

std::string reports_to_csv(const ExperimentConfig& cfg, const ReportBundle& bundle);
std::string reports_to_json(const ExperimentConfig& cfg, const ReportBundle& bundle);

/// Replays the hard-coded neuron and spike-ordering scenarios and asserts
/// their exact rates; prints one line per scenario. Returns the number of
/// mismatches (0 means all reproduced).
int repro_figures(std::ostream& out);

}  // namespace snnconv
