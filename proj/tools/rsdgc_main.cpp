#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "rsdgc/errors.hpp"
#include "rsdgc/experiment.hpp"

namespace {

// One CLI override flag per config key; values go through the same
// set_config_key path as the config file.
struct Overrides {
    std::vector<std::pair<std::string, std::string>> values;

    void attach(CLI::App& cmd) {
        static const char* keys[] = {
            "architecture", "hidden",          "image_side",     "conv_filters",  "num_classes",
            "dataset",      "dataset_size",    "dataset_seed",   "nodes",         "compressor",
            "density",      "alpha",           "patch_size",     "dynamic_schedule",
            "recompute_period", "warmup_epochs", "momentum",     "learning_rate", "lr_schedule",
            "lr_decay_factor",  "lr_decay_period", "epochs",     "batch_size",    "parallel_nodes",
            "output_dir",   "master_seed",
        };
        for (const char* key : keys) {
            cmd.add_option_function<std::string>(
                std::string("--") + key,
                [this, key](const std::string& v) { values.emplace_back(key, v); },
                std::string("override config key ") + key);
        }
    }

    void apply(rsdgc::ExperimentConfig& cfg) const {
        for (const auto& [key, value] : values) rsdgc::set_config_key(cfg, key, value);
    }
};

rsdgc::ExperimentConfig build_config(const std::string& config_path, const std::string& out_dir,
                                     uint64_t seed, bool seed_given, const Overrides& overrides) {
    rsdgc::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = rsdgc::load_config_file(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed_given) cfg.master_seed = seed;
    overrides.apply(cfg);
    return cfg;
}

int cmd_run(const rsdgc::ExperimentConfig& cfg) {
    const auto res = rsdgc::run_experiment(cfg);
    std::printf("final_train_acc      %s\n", rsdgc::format_double(res.final_train_acc).c_str());
    std::printf("final_test_acc       %s\n", rsdgc::format_double(res.final_test_acc).c_str());
    std::printf("cumulative_bytes     %llu\n", static_cast<unsigned long long>(res.cumulative_bytes));
    std::printf("compression_ratio    %s\n", rsdgc::format_double(res.compression_ratio).c_str());
    std::printf("sparsification_ratio %s\n", rsdgc::format_double(res.sparsification_ratio).c_str());
    std::printf("wrote %s\n", res.steps_csv_path.c_str());
    std::printf("wrote %s\n", res.summary_json_path.c_str());
    return 0;
}

int cmd_compare(const rsdgc::ExperimentConfig& base, const std::vector<std::string>& methods) {
    namespace fs = std::filesystem;
    std::vector<rsdgc::ExperimentConfig> configs;
    configs.reserve(methods.size());
    for (const auto& m : methods) {
        rsdgc::ExperimentConfig cfg = base;
        rsdgc::set_config_key(cfg, "compressor", m);
        cfg.output_dir = (fs::path(base.output_dir) / m).string();
        configs.push_back(std::move(cfg));
    }
    const auto table = rsdgc::compare_experiments(configs);

    fs::create_directories(base.output_dir);
    const std::string csv_path = (fs::path(base.output_dir) / "compare.csv").string();
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw rsdgc::ConfigError("cannot open for writing: " + csv_path);
    f << table.csv;
    f.close();

    std::fputs(table.csv.c_str(), stdout);
    std::printf("wrote %s\n", csv_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RS-DGC gradient-compression training simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run one training experiment");
    run->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    auto* run_seed = run->add_option("--seed", seed, "master seed (overrides master_seed)");
    Overrides run_overrides;
    run_overrides.attach(*run);

    std::vector<std::string> methods;
    auto* compare = app.add_subcommand("compare", "run several compressors on one config");
    compare->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    compare->add_option("--out", out_dir, "output directory (overrides output_dir)");
    auto* cmp_seed = compare->add_option("--seed", seed, "master seed (overrides master_seed)");
    compare->add_option("--methods", methods, "comma-separated compressor list")
        ->delimiter(',')
        ->required();
    Overrides cmp_overrides;
    cmp_overrides.attach(*compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) {
            return cmd_run(
                build_config(config_path, out_dir, seed, run_seed->count() > 0, run_overrides));
        }
        return cmd_compare(
            build_config(config_path, out_dir, seed, cmp_seed->count() > 0, cmp_overrides), methods);
    } catch (const rsdgc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const rsdgc::DivergedLoss& e) {
        std::fprintf(stderr, "diverged: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
