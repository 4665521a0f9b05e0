#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsdgc/accumulator.hpp"
#include "rsdgc/baselines.hpp"
#include "rsdgc/dyn_ratio.hpp"
#include "rsdgc/grad_core.hpp"
#include "rsdgc/models.hpp"
#include "rsdgc/nsi.hpp"

namespace rsdgc {

// What a node sends each step and how it is selected.
struct CompressorConfig {
    CompressorKind kind = CompressorKind::dense;
    double density = 1.0;
    double alpha = 0.5;
    int32_t patch_size = 3;
    bool dynamic_schedule = true;  // rs_dgc: magnitude-ranked per-layer densities
    int32_t warmup_epochs = 0;     // 0 = off; ramps density down to the target

    // During warm-up the keep fraction decays exponentially from
    // density^(1/warmup) to the target, mirroring common sparsity ramps.
    double effective_density(int32_t epoch) const;
    void validate() const;
};

struct CommRecord {
    int64_t iteration = 0;
    int32_t node_id = 0;
    uint64_t bytes_sent = 0;
    uint64_t dense_equivalent_bytes = 0;  // value payload of a dense send
    uint64_t values_sent = 0;
    uint64_t total_elements = 0;
};

// Append-only per-(iteration, node) byte accounting.
class CommLedger {
  public:
    void add(const CommRecord& rec);

    const std::vector<CommRecord>& records() const { return records_; }
    uint64_t cumulative_bytes_sent() const { return bytes_sent_; }
    uint64_t cumulative_dense_bytes() const { return dense_bytes_; }
    uint64_t cumulative_values_sent() const { return values_sent_; }
    uint64_t cumulative_elements() const { return elements_; }

    // dense_equivalent / sent. EmptyLedger before the first record.
    double ratio() const;
    // elements / transmitted values; how sparse the selection itself is.
    double sparsification_ratio() const;

  private:
    std::vector<CommRecord> records_;
    uint64_t bytes_sent_ = 0;
    uint64_t dense_bytes_ = 0;
    uint64_t values_sent_ = 0;
    uint64_t elements_ = 0;
};

// Gather-densify-average in ascending node order; the fixed reduction order
// keeps replicas bit-identical.
ModelGradient sync(std::span<const SparseModelGradient> sparse_grads,
                   std::span<const PatchPartition> partitions, int32_t node_count);

struct NodeState {
    int32_t node_id = 0;
    ModelWeights weights;
    AccumulatorState accumulator;
    DatasetShard shard;
    RatioSchedule schedule;
};

struct StepReport {
    double loss = 0.0;            // mean of node losses
    double train_accuracy = 0.0;  // over the union minibatch
    uint64_t bytes_sent = 0;      // all nodes, this step
    std::vector<int64_t> kept_patches_per_layer;  // summed over nodes
};

// Synchronous data-parallel trainer over N identical replicas. Each node owns
// a disjoint shard, draws its minibatch from a private seeded stream,
// compresses its gradient, and applies the averaged update; weights stay
// bit-identical across nodes by construction (and are asserted to).
class Simulator {
  public:
    Simulator(const ModelSpec& model, const OptimizerConfig& optimizer, const CompressorConfig& comp,
              std::vector<DatasetShard> shards, uint64_t master_seed, bool parallel_nodes);

    // Deterministic sample order for (node, epoch); batches are consecutive
    // windows of this permutation.
    static std::vector<int64_t> epoch_permutation(uint64_t master_seed, int32_t node_id, int32_t epoch,
                                                  int32_t shard_size);
    static std::vector<int32_t> batch_indices(uint64_t master_seed, int32_t node_id, int32_t epoch,
                                              int32_t step, int32_t shard_size, int32_t batch_size);

    // Re-ranks per-layer densities from the current weights (identical on
    // every node; asserted). Uniform compressors keep a flat schedule.
    void recompute_schedules(int32_t epoch);

    StepReport train_step(int32_t epoch, int32_t step, int32_t batch_size);

    int32_t steps_per_epoch(int32_t batch_size) const;
    const CommLedger& ledger() const { return ledger_; }
    const ModelWeights& weights() const { return nodes_.front().weights; }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    std::span<const LayerSpec> layer_specs() const { return layer_specs_; }
    int64_t iterations_run() const { return iteration_; }

  private:
    struct NodeOutput {
        double loss = 0.0;
        int32_t correct = 0;
        ModelGradient contribution;  // densified payload
        uint64_t bytes_sent = 0;
        uint64_t dense_equivalent = 0;
        uint64_t values_sent = 0;
        std::vector<int64_t> kept_patches;
    };

    void node_compute(int32_t node_index, int32_t epoch, int32_t step, int32_t batch_size,
                      NodeOutput& out);
    void assert_replicas_identical() const;

    ModelSpec model_;
    OptimizerConfig optimizer_;
    CompressorConfig comp_;
    std::vector<LayerSpec> layer_specs_;
    std::vector<PatchPartition> partitions_;       // at the compressor's patch size
    std::vector<PatchPartition> unit_partitions_;  // p = 1 for element compressors
    std::vector<NodeState> nodes_;
    ModelGradient server_momentum_;  // for compressors without a local accumulator
    CommLedger ledger_;
    uint64_t master_seed_ = 0;
    bool parallel_nodes_ = false;
    int64_t iteration_ = 0;
};

}  // namespace rsdgc
