#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rsdgc/dyn_ratio.hpp"
#include "rsdgc/grad_core.hpp"

namespace rsdgc {

// Patch scoring configuration. alpha blends the two neighborhood statistics:
// score = alpha * mean(|g|) + (1 - alpha) * std(g). alpha = 1 scores by
// magnitude alone, alpha = 0 by dispersion alone.
struct NsiConfig {
    double alpha = 0.5;
    int32_t patch_size = 3;

    void validate() const;  // alpha in [0, 1], patch_size >= 1
};

struct PatchScore {
    int64_t patch_index = 0;
    double mean_abs = 0.0;
    double std_dev = 0.0;
    double nsi = 0.0;
};

// One score per patch, in patch-index order. Statistics use the patch's true
// element count n (edge patches are smaller): mean_abs = (1/n) sum |g_i|,
// std_dev = population standard deviation of the raw values. Throws NonFinite
// if any value is NaN/Inf.
std::vector<PatchScore> score_patches(const LayerTensor& grad, const PatchPartition& part,
                                      const NsiConfig& cfg);

// Patch budget for one layer at the given density (fraction of elements to
// keep). min(num_patches, ceil(element_count / p^2 * density)); exactly 0 iff
// density == 0, all patches at density == 1.
int64_t keep_count(const PatchPartition& part, double density);

// Keeps the keep_count highest-NSI patches; equal scores break toward the
// lower patch index. Kept list is ordered by ascending patch index and
// carries raw gradient values.
SparseLayerGradient sparsify_layer(const LayerTensor& grad, const PatchPartition& part,
                                   const NsiConfig& cfg, double density);

// Applies sparsify_layer per layer with that layer's density from the
// schedule. The schedule must cover every layer.
SparseModelGradient sparsify_model(const ModelGradient& grad, std::span<const PatchPartition> partitions,
                                   const RatioSchedule& schedule, const NsiConfig& cfg, int64_t iteration);

}  // namespace rsdgc
