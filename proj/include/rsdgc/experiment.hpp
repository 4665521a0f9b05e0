#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsdgc/baselines.hpp"
#include "rsdgc/models.hpp"

namespace rsdgc {

// Everything a training run depends on, as a flat key=value config. Field
// order here is the canonical serialization order.
struct ExperimentConfig {
    Architecture architecture = Architecture::mlp;
    int32_t hidden = 32;
    int32_t image_side = 12;
    int32_t conv_filters = 8;
    int32_t num_classes = 2;
    DatasetKind dataset = DatasetKind::concentric_rings;
    int32_t dataset_size = 1024;
    uint64_t dataset_seed = 0;  // 0: derived from master_seed
    int32_t nodes = 4;
    CompressorKind compressor = CompressorKind::dense;
    double density = 1.0;
    double alpha = 0.5;
    int32_t patch_size = 3;
    bool dynamic_schedule = true;
    int32_t recompute_period = 1;
    int32_t warmup_epochs = 0;
    double momentum = 0.9;
    double learning_rate = 0.1;
    OptimizerConfig::LrSchedule lr_schedule = OptimizerConfig::LrSchedule::constant;
    double lr_decay_factor = 0.1;
    int32_t lr_decay_period = 10;
    int32_t epochs = 10;
    int32_t batch_size = 16;
    bool parallel_nodes = true;
    std::string output_dir = "out";
    uint64_t master_seed = 1;

    void validate() const;  // ConfigError naming the offending key

    ModelSpec model_spec() const;
    OptimizerConfig optimizer_config() const;
};

// Assigns one key. Both the file parser and CLI overrides go through here so
// they accept exactly the same keys and value syntax. ConfigError on unknown
// keys or unparseable values.
void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// key=value lines; blank lines and #-comments ignored.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical form: every key once, fixed order, shortest round-trip numbers.
// serialize_config(parse_config(text)) is stable.
std::string serialize_config(const ExperimentConfig& cfg);

struct ExperimentResult {
    double final_train_acc = 0.0;
    double final_test_acc = 0.0;
    uint64_t cumulative_bytes = 0;
    uint64_t dense_bytes = 0;
    double compression_ratio = 0.0;     // dense-equivalent bytes / sent bytes
    double sparsification_ratio = 0.0;  // gradient elements / transmitted values
    std::string steps_csv_path;
    std::string summary_json_path;
};

// Full training run: writes <output_dir>/steps.csv (one row per step,
// cumulative byte columns) and <output_dir>/summary.json, returns the
// headline numbers. Same config + seed gives byte-identical outputs.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct ComparisonRow {
    std::string method;
    double accuracy = 0.0;  // final test accuracy
    std::optional<double> accuracy_delta_vs_dense;
    double sparsification_ratio = 0.0;
    double byte_ratio = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::string csv;  // header + one line per row
};

// Runs every config (each writes into its own output_dir) and tabulates the
// final metrics. The delta column is relative to the first dense row, empty
// when no config uses the dense compressor.
ComparisonTable compare_experiments(std::span<const ExperimentConfig> configs);

// Shortest representation that parses back to the same double.
std::string format_double(double x);

}  // namespace rsdgc
