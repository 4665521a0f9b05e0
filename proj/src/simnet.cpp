#include "rsdgc/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "rsdgc/rng.hpp"

namespace rsdgc {

double CompressorConfig::effective_density(int32_t epoch) const {
    if (warmup_epochs <= 0 || epoch >= warmup_epochs || kind == CompressorKind::dense ||
        kind == CompressorKind::sign_1bit || density >= 1.0)
        return density;
    const double exponent = static_cast<double>(epoch + 1) / static_cast<double>(warmup_epochs);
    return std::pow(density, exponent);
}

void CompressorConfig::validate() const {
    if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in [0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
    if (patch_size < 1) throw std::invalid_argument("patch_size must be >= 1");
    if (warmup_epochs < 0) throw std::invalid_argument("warmup_epochs must be >= 0");
}

void CommLedger::add(const CommRecord& rec) {
    records_.push_back(rec);
    bytes_sent_ += rec.bytes_sent;
    dense_bytes_ += rec.dense_equivalent_bytes;
    values_sent_ += rec.values_sent;
    elements_ += rec.total_elements;
}

double CommLedger::ratio() const {
    if (records_.empty()) throw EmptyLedger("no communication recorded");
    return static_cast<double>(dense_bytes_) / static_cast<double>(bytes_sent_);
}

double CommLedger::sparsification_ratio() const {
    if (records_.empty()) throw EmptyLedger("no communication recorded");
    if (values_sent_ == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(elements_) / static_cast<double>(values_sent_);
}

ModelGradient sync(std::span<const SparseModelGradient> sparse_grads,
                   std::span<const PatchPartition> partitions, int32_t node_count) {
    if (node_count < 1 || static_cast<size_t>(node_count) != sparse_grads.size())
        throw std::invalid_argument("sync: node_count does not match gradient list");
    ModelGradient total = densify(sparse_grads[0], partitions);
    for (int32_t n = 1; n < node_count; ++n) total.axpy(1.0, densify(sparse_grads[static_cast<size_t>(n)], partitions));
    total.scale(1.0 / static_cast<double>(node_count));
    return total;
}

Simulator::Simulator(const ModelSpec& model, const OptimizerConfig& optimizer,
                     const CompressorConfig& comp, std::vector<DatasetShard> shards,
                     uint64_t master_seed, bool parallel_nodes)
    : model_(model),
      optimizer_(optimizer),
      comp_(comp),
      master_seed_(master_seed),
      parallel_nodes_(parallel_nodes) {
    optimizer_.validate();
    comp_.validate();
    if (shards.empty()) throw std::invalid_argument("at least one node required");

    ModelSpec stamped = model_;
    stamped.patch_size = comp_.patch_size;
    layer_specs_ = stamped.layer_specs();
    partitions_ = build_partitions(layer_specs_);
    unit_partitions_ = unit_partitions(layer_specs_);
    server_momentum_ = ModelGradient::zeros_like(layer_specs_);

    const ModelWeights w0 = init_weights(stamped, mix_seed(master_seed_, 0x1217u));
    nodes_.reserve(shards.size());
    for (size_t n = 0; n < shards.size(); ++n) {
        NodeState node;
        node.node_id = static_cast<int32_t>(n);
        node.weights = w0;
        node.accumulator =
            AccumulatorState::make(node.node_id, layer_specs_, optimizer_.momentum);
        node.shard = std::move(shards[n]);
        node.schedule = uniform_schedule(layer_specs_, comp_.density, 0);
        if (node.shard.size < 1) throw std::invalid_argument("empty shard");
        nodes_.push_back(std::move(node));
    }
}

std::vector<int64_t> Simulator::epoch_permutation(uint64_t master_seed, int32_t node_id, int32_t epoch,
                                                  int32_t shard_size) {
    auto perm = identity_permutation(shard_size);
    auto eng = make_engine(mix_seed(master_seed, 0xBA7C4u, node_id, epoch));
    shuffle(perm, eng);
    return perm;
}

std::vector<int32_t> Simulator::batch_indices(uint64_t master_seed, int32_t node_id, int32_t epoch,
                                              int32_t step, int32_t shard_size, int32_t batch_size) {
    const auto perm = epoch_permutation(master_seed, node_id, epoch, shard_size);
    const int64_t begin = static_cast<int64_t>(step) * batch_size;
    if (begin + batch_size > shard_size)
        throw std::invalid_argument("step exceeds the shard's full batches");
    std::vector<int32_t> out;
    out.reserve(static_cast<size_t>(batch_size));
    for (int64_t i = begin; i < begin + batch_size; ++i)
        out.push_back(static_cast<int32_t>(perm[static_cast<size_t>(i)]));
    return out;
}

int32_t Simulator::steps_per_epoch(int32_t batch_size) const {
    int32_t min_shard = nodes_.front().shard.size;
    for (const auto& n : nodes_) min_shard = std::min(min_shard, n.shard.size);
    return min_shard / batch_size;
}

void Simulator::assert_replicas_identical() const {
    const auto& ref = nodes_.front().weights;
    for (size_t n = 1; n < nodes_.size(); ++n) {
        const auto& w = nodes_[n].weights;
        for (size_t li = 0; li < ref.layers.size(); ++li)
            if (w.layers[li].values != ref.layers[li].values)
                throw std::logic_error("replica weights diverged at node " + std::to_string(n));
    }
}

void Simulator::recompute_schedules(int32_t epoch) {
    const double density = comp_.effective_density(epoch);
    const bool ranked = comp_.kind == CompressorKind::rs_dgc && comp_.dynamic_schedule;
    for (auto& node : nodes_) {
        node.schedule = ranked ? compute_schedule(node.weights, density, epoch)
                               : uniform_schedule(layer_specs_, density, epoch);
    }
    // Identical inputs must give identical schedules on every node.
    for (size_t n = 1; n < nodes_.size(); ++n)
        if (!(nodes_[n].schedule == nodes_.front().schedule))
            throw std::logic_error("schedule mismatch across nodes");
}

void Simulator::node_compute(int32_t node_index, int32_t epoch, int32_t step, int32_t batch_size,
                             NodeOutput& out) {
    NodeState& node = nodes_[static_cast<size_t>(node_index)];
    const auto batch =
        batch_indices(master_seed_, node.node_id, epoch, step, node.shard.size, batch_size);
    auto fb = forward_backward(model_, node.weights, node.shard, batch);
    out.loss = fb.loss;
    out.correct = fb.correct;

    const double density = comp_.effective_density(epoch);
    const uint64_t elements = static_cast<uint64_t>(fb.grad.element_count());
    out.kept_patches.assign(layer_specs_.size(), 0);

    auto note_kept = [&](const SparseModelGradient& sp) {
        for (size_t li = 0; li < sp.layers.size(); ++li)
            out.kept_patches[li] = static_cast<int64_t>(sp.layers[li].kept.size());
        out.values_sent = static_cast<uint64_t>(sp.kept_value_count());
    };

    switch (comp_.kind) {
        case CompressorKind::dense: {
            out.contribution = std::move(fb.grad);
            out.bytes_sent = dense_wire_size_bytes(layer_specs_);
            out.values_sent = elements;
            for (size_t li = 0; li < layer_specs_.size(); ++li)
                out.kept_patches[li] = partitions_[li].num_patches;
            break;
        }
        case CompressorKind::sign_1bit: {
            const auto q = sign_quantize(fb.grad, iteration_);
            out.contribution = dequantize(q, layer_specs_);
            out.bytes_sent = wire_size_bytes(q);
            out.values_sent = elements;
            break;
        }
        case CompressorKind::top_k: {
            const auto sp = topk_sparsify(fb.grad, unit_partitions_, density, iteration_);
            note_kept(sp);
            out.contribution = densify(sp, unit_partitions_);
            out.bytes_sent = wire_size_bytes(sp);
            break;
        }
        case CompressorKind::random_k: {
            const auto sp = randomk_sparsify(
                fb.grad, unit_partitions_, density,
                mix_seed(master_seed_, 0x7A2Du, node.node_id, iteration_), iteration_);
            note_kept(sp);
            out.contribution = densify(sp, unit_partitions_);
            out.bytes_sent = wire_size_bytes(sp);
            break;
        }
        case CompressorKind::dgc: {
            const auto sp = dgc_sparsify(node.accumulator, fb.grad, unit_partitions_, density, iteration_);
            note_kept(sp);
            out.contribution = densify(sp, unit_partitions_);
            out.bytes_sent = wire_size_bytes(sp);
            break;
        }
        case CompressorKind::rs_dgc: {
            const ModelGradient v = accumulate(node.accumulator, fb.grad);
            NsiConfig nsi{comp_.alpha, comp_.patch_size};
            const auto sp = sparsify_model(v, partitions_, node.schedule, nsi, iteration_);
            commit_transmitted(node.accumulator, sp, partitions_);
            note_kept(sp);
            out.contribution = densify(sp, partitions_);
            out.bytes_sent = wire_size_bytes(sp);
            break;
        }
    }
    out.dense_equivalent = dense_value_bytes(layer_specs_);
}

StepReport Simulator::train_step(int32_t epoch, int32_t step, int32_t batch_size) {
    assert_replicas_identical();

    const int32_t N = static_cast<int32_t>(nodes_.size());
    std::vector<NodeOutput> outputs(static_cast<size_t>(N));

    // The compute phase is embarrassingly parallel: each node touches only its
    // own state, and batch selection depends on (seed, node, epoch, step)
    // alone, so thread scheduling cannot change any result.
    if (parallel_nodes_ && N > 1) {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(N));
        for (int32_t n = 0; n < N; ++n)
            workers.emplace_back([this, n, epoch, step, batch_size, &outputs] {
                node_compute(n, epoch, step, batch_size, outputs[static_cast<size_t>(n)]);
            });
        for (auto& w : workers) w.join();
    } else {
        for (int32_t n = 0; n < N; ++n)
            node_compute(n, epoch, step, batch_size, outputs[static_cast<size_t>(n)]);
    }

    StepReport report;
    report.kept_patches_per_layer.assign(layer_specs_.size(), 0);
    const uint64_t elements = static_cast<uint64_t>(nodes_.front().weights.element_count());
    for (int32_t n = 0; n < N; ++n) {
        auto& out = outputs[static_cast<size_t>(n)];
        if (!std::isfinite(out.loss))
            throw DivergedLoss("node " + std::to_string(n) + " loss is not finite at iteration " +
                               std::to_string(iteration_));
        report.loss += out.loss;
        report.train_accuracy += out.correct;
        report.bytes_sent += out.bytes_sent;
        for (size_t li = 0; li < out.kept_patches.size(); ++li)
            report.kept_patches_per_layer[li] += out.kept_patches[li];
        ledger_.add({iteration_, n, out.bytes_sent, out.dense_equivalent, out.values_sent, elements});
    }
    report.loss /= N;
    report.train_accuracy /= static_cast<double>(N) * batch_size;

    // Fixed reduction order: node 0 first, then += node 1, 2, ...
    ModelGradient mean = std::move(outputs[0].contribution);
    for (int32_t n = 1; n < N; ++n) mean.axpy(1.0, outputs[static_cast<size_t>(n)].contribution);
    mean.scale(1.0 / static_cast<double>(N));

    const bool local_momentum =
        comp_.kind == CompressorKind::rs_dgc || comp_.kind == CompressorKind::dgc;
    const double lr = optimizer_.lr_at(epoch);
    const ModelGradient* update = &mean;
    if (!local_momentum) {
        // One server-side buffer, applied identically on every replica.
        server_momentum_.scale(optimizer_.momentum);
        server_momentum_.axpy(1.0, mean);
        update = &server_momentum_;
    }
    for (auto& node : nodes_) node.weights.axpy(-lr, *update);

    ++iteration_;
    return report;
}

}  // namespace rsdgc
