#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rsdgc/accumulator.hpp"
#include "rsdgc/grad_core.hpp"

namespace rsdgc {

enum class CompressorKind { rs_dgc, top_k, random_k, dgc, sign_1bit, dense };

std::string to_string(CompressorKind kind);
CompressorKind compressor_from_string(std::string_view name);  // ConfigError on unknown

// Element-granular magnitude top-k per layer. k = ceil(density * element
// count); ties break toward the lower flat index. Selected elements are
// emitted as singleton patches of the unit (p = 1) partition so every
// compressor shares the same wire format and byte meter.
SparseModelGradient topk_sparsify(const ModelGradient& grad, std::span<const PatchPartition> units,
                                  double density, int64_t iteration);

// Same budget, uniformly random distinct elements per layer; fully
// deterministic for a given rng_seed.
SparseModelGradient randomk_sparsify(const ModelGradient& grad, std::span<const PatchPartition> units,
                                     double density, uint64_t rng_seed, int64_t iteration);

// 1-bit sign quantization with a per-layer mean-|g| scale. Zeros quantize to
// +1. Wire layout per layer: u32 layer_id, f32 scale, u32 bit_count, packed
// sign bits (LSB-first within each byte); 8 + 4 + ceil(n/8) bytes total.
struct QuantizedLayer {
    int32_t layer_id = 0;
    double scale = 0.0;
    int64_t bit_count = 0;
    std::vector<uint8_t> sign_bits;  // bit set = +1, clear = -1

    bool operator==(const QuantizedLayer&) const = default;
};

struct QuantizedModelGradient {
    int64_t iteration = 0;
    std::vector<QuantizedLayer> layers;
};

QuantizedModelGradient sign_quantize(const ModelGradient& grad, int64_t iteration);
ModelGradient dequantize(const QuantizedModelGradient& quant, std::span<const LayerSpec> specs);
uint64_t wire_size_bytes(const QuantizedModelGradient& quant);
std::vector<uint8_t> encode_wire(const QuantizedModelGradient& quant);

// Momentum-corrected element top-k: accumulate into the state, select the
// largest-|v| elements per layer at a uniform density, clear what was sent.
// Coincides with rs_dgc at p = 1, alpha = 1, uniform schedule.
SparseModelGradient dgc_sparsify(AccumulatorState& state, const ModelGradient& grad,
                                 std::span<const PatchPartition> units, double density,
                                 int64_t iteration);

}  // namespace rsdgc
