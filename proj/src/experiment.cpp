#include "rsdgc/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "rsdgc/dyn_ratio.hpp"
#include "rsdgc/errors.hpp"
#include "rsdgc/rng.hpp"
#include "rsdgc/simnet.hpp"

namespace rsdgc {

namespace {

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

int32_t parse_i32(std::string_view key, std::string_view v) {
    int32_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("key '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
    return out;
}

uint64_t parse_u64(std::string_view key, std::string_view v) {
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("key '" + std::string(key) + "': not an unsigned integer: '" + std::string(v) +
                          "'");
    return out;
}

double parse_f64(std::string_view key, std::string_view v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("key '" + std::string(key) + "': not a number: '" + std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("key '" + std::string(key) + "': expected true/false: '" + std::string(v) + "'");
}

std::string to_string(OptimizerConfig::LrSchedule s) {
    return s == OptimizerConfig::LrSchedule::constant ? "constant" : "step";
}

OptimizerConfig::LrSchedule lr_schedule_from_string(std::string_view v) {
    if (v == "constant") return OptimizerConfig::LrSchedule::constant;
    if (v == "step") return OptimizerConfig::LrSchedule::step;
    throw ConfigError("key 'lr_schedule': unknown schedule '" + std::string(v) + "'");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ConfigError("write failed: " + path);
}

std::vector<int32_t> all_indices(int32_t n) {
    std::vector<int32_t> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, p);
}

void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    const std::string_view v = trim(value);
    if (key == "architecture") cfg.architecture = architecture_from_string(v);
    else if (key == "hidden") cfg.hidden = parse_i32(key, v);
    else if (key == "image_side") cfg.image_side = parse_i32(key, v);
    else if (key == "conv_filters") cfg.conv_filters = parse_i32(key, v);
    else if (key == "num_classes") cfg.num_classes = parse_i32(key, v);
    else if (key == "dataset") cfg.dataset = dataset_from_string(v);
    else if (key == "dataset_size") cfg.dataset_size = parse_i32(key, v);
    else if (key == "dataset_seed") cfg.dataset_seed = parse_u64(key, v);
    else if (key == "nodes") cfg.nodes = parse_i32(key, v);
    else if (key == "compressor") cfg.compressor = compressor_from_string(v);
    else if (key == "density") cfg.density = parse_f64(key, v);
    else if (key == "alpha") cfg.alpha = parse_f64(key, v);
    else if (key == "patch_size") cfg.patch_size = parse_i32(key, v);
    else if (key == "dynamic_schedule") cfg.dynamic_schedule = parse_bool(key, v);
    else if (key == "recompute_period") cfg.recompute_period = parse_i32(key, v);
    else if (key == "warmup_epochs") cfg.warmup_epochs = parse_i32(key, v);
    else if (key == "momentum") cfg.momentum = parse_f64(key, v);
    else if (key == "learning_rate") cfg.learning_rate = parse_f64(key, v);
    else if (key == "lr_schedule") cfg.lr_schedule = lr_schedule_from_string(v);
    else if (key == "lr_decay_factor") cfg.lr_decay_factor = parse_f64(key, v);
    else if (key == "lr_decay_period") cfg.lr_decay_period = parse_i32(key, v);
    else if (key == "epochs") cfg.epochs = parse_i32(key, v);
    else if (key == "batch_size") cfg.batch_size = parse_i32(key, v);
    else if (key == "parallel_nodes") cfg.parallel_nodes = parse_bool(key, v);
    else if (key == "output_dir") cfg.output_dir = std::string(v);
    else if (key == "master_seed") cfg.master_seed = parse_u64(key, v);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        set_config_key(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    auto add = [&](std::string_view key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    add("architecture", to_string(cfg.architecture));
    add("hidden", std::to_string(cfg.hidden));
    add("image_side", std::to_string(cfg.image_side));
    add("conv_filters", std::to_string(cfg.conv_filters));
    add("num_classes", std::to_string(cfg.num_classes));
    add("dataset", to_string(cfg.dataset));
    add("dataset_size", std::to_string(cfg.dataset_size));
    add("dataset_seed", std::to_string(cfg.dataset_seed));
    add("nodes", std::to_string(cfg.nodes));
    add("compressor", to_string(cfg.compressor));
    add("density", format_double(cfg.density));
    add("alpha", format_double(cfg.alpha));
    add("patch_size", std::to_string(cfg.patch_size));
    add("dynamic_schedule", cfg.dynamic_schedule ? "true" : "false");
    add("recompute_period", std::to_string(cfg.recompute_period));
    add("warmup_epochs", std::to_string(cfg.warmup_epochs));
    add("momentum", format_double(cfg.momentum));
    add("learning_rate", format_double(cfg.learning_rate));
    add("lr_schedule", to_string(cfg.lr_schedule));
    add("lr_decay_factor", format_double(cfg.lr_decay_factor));
    add("lr_decay_period", std::to_string(cfg.lr_decay_period));
    add("epochs", std::to_string(cfg.epochs));
    add("batch_size", std::to_string(cfg.batch_size));
    add("parallel_nodes", cfg.parallel_nodes ? "true" : "false");
    add("output_dir", cfg.output_dir);
    add("master_seed", std::to_string(cfg.master_seed));
    return out;
}

void ExperimentConfig::validate() const {
    auto fail = [](std::string_view key, std::string_view why) {
        throw ConfigError("key '" + std::string(key) + "': " + std::string(why));
    };
    if (hidden < 1) fail("hidden", "must be >= 1");
    if (architecture == Architecture::tiny_cnn) {
        if (image_side < 4 || image_side % 2 != 0) fail("image_side", "must be even and >= 4");
        if (conv_filters < 1) fail("conv_filters", "must be >= 1");
    }
    if (num_classes < 2) fail("num_classes", "must be >= 2");
    if (dataset_size < 2) fail("dataset_size", "must be >= 2");
    if (nodes < 1) fail("nodes", "must be >= 1");
    if (!(density >= 0.0 && density <= 1.0)) fail("density", "must be in [0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha", "must be in [0, 1]");
    if (patch_size < 1) fail("patch_size", "must be >= 1");
    if (recompute_period < 1) fail("recompute_period", "must be >= 1");
    if (warmup_epochs < 0) fail("warmup_epochs", "must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must be in [0, 1)");
    if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
    if (!(lr_decay_factor > 0.0)) fail("lr_decay_factor", "must be > 0");
    if (lr_decay_period < 1) fail("lr_decay_period", "must be >= 1");
    if (epochs < 1) fail("epochs", "must be >= 1");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (output_dir.empty()) fail("output_dir", "must not be empty");

    const int32_t train = dataset_size - static_cast<int32_t>(std::floor(0.2 * dataset_size));
    if (train / nodes < batch_size)
        fail("dataset_size", "80% train split leaves less than one batch per node");
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec;
    spec.arch = architecture;
    spec.input_dim = 2;
    spec.hidden = hidden;
    spec.image_side = image_side;
    spec.conv_filters = conv_filters;
    spec.num_classes = num_classes;
    spec.patch_size = patch_size;
    return spec;
}

OptimizerConfig ExperimentConfig::optimizer_config() const {
    OptimizerConfig opt;
    opt.learning_rate = learning_rate;
    opt.momentum = momentum;
    opt.schedule = lr_schedule;
    opt.decay_factor = lr_decay_factor;
    opt.decay_period = lr_decay_period;
    return opt;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    const uint64_t data_seed =
        cfg.dataset_seed != 0 ? cfg.dataset_seed : mix_seed(cfg.master_seed, 0xD47Au);
    DatasetShard data = make_dataset(cfg.dataset, data_seed, cfg.dataset_size, cfg.num_classes);
    if (cfg.architecture == Architecture::tiny_cnn) data = rasterize_images(data, cfg.image_side);

    auto [train, test] = split_train_test(data, 0.2, cfg.master_seed);

    const int32_t per_node = train.size / cfg.nodes;
    std::vector<DatasetShard> shards;
    shards.reserve(static_cast<size_t>(cfg.nodes));
    for (int32_t n = 0; n < cfg.nodes; ++n) shards.push_back(slice(train, n * per_node, per_node));

    CompressorConfig comp;
    comp.kind = cfg.compressor;
    comp.density = cfg.density;
    comp.alpha = cfg.alpha;
    comp.patch_size = cfg.patch_size;
    comp.dynamic_schedule = cfg.dynamic_schedule;
    comp.warmup_epochs = cfg.warmup_epochs;

    const ModelSpec spec = cfg.model_spec();
    Simulator sim(spec, cfg.optimizer_config(), comp, std::move(shards), cfg.master_seed,
                  cfg.parallel_nodes);

    std::string csv = "epoch,step,loss,train_acc,bytes_sent_total,dense_bytes_total,ratio\n";
    const int32_t steps = sim.steps_per_epoch(cfg.batch_size);
    for (int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (should_recompute(epoch, RecomputePolicy{cfg.recompute_period})) sim.recompute_schedules(epoch);
        for (int32_t step = 0; step < steps; ++step) {
            const StepReport rep = sim.train_step(epoch, step, cfg.batch_size);
            const auto& led = sim.ledger();
            csv += std::to_string(epoch);
            csv += ',';
            csv += std::to_string(step);
            csv += ',';
            csv += format_double(rep.loss);
            csv += ',';
            csv += format_double(rep.train_accuracy);
            csv += ',';
            csv += std::to_string(led.cumulative_bytes_sent());
            csv += ',';
            csv += std::to_string(led.cumulative_dense_bytes());
            csv += ',';
            csv += format_double(led.ratio());
            csv += '\n';
        }
    }

    const auto train_idx = all_indices(train.size);
    const auto test_idx = all_indices(test.size);
    const EvalResult train_eval = evaluate(spec, sim.weights(), train, train_idx);
    const EvalResult test_eval = evaluate(spec, sim.weights(), test, test_idx);

    ExperimentResult res;
    res.final_train_acc = static_cast<double>(train_eval.correct) / train.size;
    res.final_test_acc = static_cast<double>(test_eval.correct) / test.size;
    res.cumulative_bytes = sim.ledger().cumulative_bytes_sent();
    res.dense_bytes = sim.ledger().cumulative_dense_bytes();
    res.compression_ratio = sim.ledger().ratio();
    res.sparsification_ratio = sim.ledger().sparsification_ratio();

    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output_dir: " + cfg.output_dir + ": " + ec.message());

    nlohmann::json summary;
    summary["final_train_acc"] = res.final_train_acc;
    summary["final_test_acc"] = res.final_test_acc;
    summary["cumulative_bytes"] = res.cumulative_bytes;
    summary["compression_ratio"] = res.compression_ratio;
    summary["config_echo"] = serialize_config(cfg);

    res.steps_csv_path = (out_dir / "steps.csv").string();
    res.summary_json_path = (out_dir / "summary.json").string();
    write_file(res.steps_csv_path, csv);
    write_file(res.summary_json_path, summary.dump(2) + "\n");
    return res;
}

ComparisonTable compare_experiments(std::span<const ExperimentConfig> configs) {
    ComparisonTable table;
    table.rows.reserve(configs.size());

    std::optional<double> dense_acc;
    for (const auto& cfg : configs) {
        const ExperimentResult res = run_experiment(cfg);
        ComparisonRow row;
        row.method = to_string(cfg.compressor);
        row.accuracy = res.final_test_acc;
        row.sparsification_ratio = res.sparsification_ratio;
        row.byte_ratio = res.compression_ratio;
        if (cfg.compressor == CompressorKind::dense && !dense_acc) dense_acc = res.final_test_acc;
        table.rows.push_back(std::move(row));
    }
    if (dense_acc)
        for (auto& row : table.rows) row.accuracy_delta_vs_dense = row.accuracy - *dense_acc;

    table.csv = "method,accuracy,accuracy_delta_vs_dense,sparsification_ratio,byte_ratio\n";
    for (const auto& row : table.rows) {
        table.csv += row.method;
        table.csv += ',';
        table.csv += format_double(row.accuracy);
        table.csv += ',';
        if (row.accuracy_delta_vs_dense) table.csv += format_double(*row.accuracy_delta_vs_dense);
        table.csv += ',';
        table.csv += format_double(row.sparsification_ratio);
        table.csv += ',';
        table.csv += format_double(row.byte_ratio);
        table.csv += '\n';
    }
    return table;
}

}  // namespace rsdgc
