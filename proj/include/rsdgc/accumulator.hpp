#pragma once

#include <cstdint>
#include <span>

#include "rsdgc/grad_core.hpp"

namespace rsdgc {

// Per-node gradient memory. u is the momentum recurrence, v the residual of
// everything not yet transmitted:
//   u <- m * u + g
//   v <- v + u
// Transmitting a patch clears its v entries; u keeps running so that at full
// density the transmitted v is exactly the classical momentum buffer and the
// pipeline degenerates to momentum SGD.
struct AccumulatorState {
    int32_t node_id = 0;
    double momentum = 0.0;  // in [0, 1)
    ModelGradient momentum_buf;
    ModelGradient residual_buf;

    static AccumulatorState make(int32_t node_id, std::span<const LayerSpec> specs, double momentum);
};

// Advances both buffers with a fresh gradient and returns a copy of v (the
// candidate transmission). ShapeMismatch if the gradient layout differs from
// the buffers.
ModelGradient accumulate(AccumulatorState& state, const ModelGradient& grad);

// Clears v at every flat index covered by a kept patch. Idempotent.
void commit_transmitted(AccumulatorState& state, const SparseModelGradient& transmitted,
                        std::span<const PatchPartition> partitions);

}  // namespace rsdgc
