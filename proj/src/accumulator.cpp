#include "rsdgc/accumulator.hpp"

#include <stdexcept>

namespace rsdgc {

AccumulatorState AccumulatorState::make(int32_t node_id, std::span<const LayerSpec> specs,
                                        double momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("momentum must be in [0, 1)");
    AccumulatorState s;
    s.node_id = node_id;
    s.momentum = momentum;
    s.momentum_buf = ModelGradient::zeros_like(specs);
    s.residual_buf = ModelGradient::zeros_like(specs);
    return s;
}

ModelGradient accumulate(AccumulatorState& state, const ModelGradient& grad) {
    if (!state.momentum_buf.same_shape_as(grad))
        throw ShapeMismatch("accumulate: gradient layout differs from accumulator buffers");
    const double m = state.momentum;
    for (size_t li = 0; li < grad.layers.size(); ++li) {
        auto& u = state.momentum_buf.layers[li].values;
        auto& v = state.residual_buf.layers[li].values;
        const auto& g = grad.layers[li].values;
        for (size_t j = 0; j < g.size(); ++j) {
            u[j] = m * u[j] + g[j];
            v[j] += u[j];
        }
    }
    return state.residual_buf;
}

void commit_transmitted(AccumulatorState& state, const SparseModelGradient& transmitted,
                        std::span<const PatchPartition> partitions) {
    if (transmitted.layers.size() != partitions.size() ||
        partitions.size() != state.residual_buf.layers.size())
        throw ShapeMismatch("commit_transmitted: layer counts disagree");
    for (size_t li = 0; li < partitions.size(); ++li) {
        const auto& part = partitions[li];
        const auto& sl = transmitted.layers[li];
        if (sl.layer_id != part.spec.layer_id)
            throw IndexMismatch("commit_transmitted: layer_id mismatch");
        auto& v = state.residual_buf.layers[li].values;
        for (const auto& kp : sl.kept) {
            if (kp.patch_index < 0 || kp.patch_index >= part.num_patches)
                throw IndexMismatch("commit_transmitted: patch index out of range");
            for (int64_t f : part.patch_element_indices[static_cast<size_t>(kp.patch_index)])
                v[static_cast<size_t>(f)] = 0.0;
        }
    }
}

}  // namespace rsdgc
