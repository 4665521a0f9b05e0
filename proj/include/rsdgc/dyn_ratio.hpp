#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rsdgc/grad_core.hpp"

namespace rsdgc {

// Per-layer keep densities for one recompute round. kept counts are the
// ground truth (sum of kept across layers equals the rounded global budget
// exactly); density is the ratio kept / weight_count stored for reporting and
// for feeding keep_count.
struct RatioSchedule {
    struct LayerRatio {
        int32_t layer_id = 0;
        int64_t weight_count = 0;
        int64_t kept = 0;
        double density = 0.0;

        bool operator==(const LayerRatio&) const = default;
    };

    std::vector<LayerRatio> layers;  // model order
    double global_density = 1.0;
    int32_t computed_at_epoch = 0;

    double density_for(int32_t layer_id) const;  // IndexMismatch if unknown
    int64_t total_kept() const;

    bool operator==(const RatioSchedule&) const = default;
};

// Ranks all weights of the model by |w| descending and keeps the top
// round(global_density * total), ties broken toward lower (layer_id, flat
// index). Layer densities are the per-layer shares of that cut. Throws
// EmptyModel when there are no weights, std::invalid_argument when
// global_density is outside (0, 1].
RatioSchedule compute_schedule(const ModelWeights& weights, double global_density, int32_t epoch);

// Every layer at the same density; the ablation reference and the schedule
// used by compressors that take no per-layer ratios.
RatioSchedule uniform_schedule(std::span<const LayerSpec> specs, double density, int32_t epoch);

struct RecomputePolicy {
    int32_t period_epochs = 1;  // >= 1
};

bool should_recompute(int32_t epoch, const RecomputePolicy& policy);

// Diagnostic dump, one row per layer: epoch,layer_id,weight_count,kept,density
void dump_schedule_csv(std::ostream& os, const RatioSchedule& schedule, bool header);

}  // namespace rsdgc
