#include "rsdgc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rsdgc/rng.hpp"

namespace rsdgc {

std::string to_string(CompressorKind kind) {
    switch (kind) {
        case CompressorKind::rs_dgc: return "rs_dgc";
        case CompressorKind::top_k: return "top_k";
        case CompressorKind::random_k: return "random_k";
        case CompressorKind::dgc: return "dgc";
        case CompressorKind::sign_1bit: return "sign_1bit";
        case CompressorKind::dense: return "dense";
    }
    return "?";
}

CompressorKind compressor_from_string(std::string_view name) {
    if (name == "rs_dgc") return CompressorKind::rs_dgc;
    if (name == "top_k") return CompressorKind::top_k;
    if (name == "random_k") return CompressorKind::random_k;
    if (name == "dgc") return CompressorKind::dgc;
    if (name == "sign_1bit") return CompressorKind::sign_1bit;
    if (name == "dense") return CompressorKind::dense;
    throw ConfigError("unknown compressor '" + std::string(name) + "'");
}

static int64_t element_keep_count(int64_t element_count, double density) {
    if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in [0, 1]");
    if (density == 0.0) return 0;
    const int64_t k = static_cast<int64_t>(std::ceil(density * static_cast<double>(element_count)));
    return std::min(k, element_count);
}

// Packs a sorted flat-index selection into singleton kept patches. The unit
// partition's patch order is its 2-D view order, which for conv differs from
// flat order, so indices are mapped and re-sorted.
static SparseLayerGradient pack_singletons(const LayerTensor& grad, const PatchPartition& unit,
                                           std::vector<int64_t> flat_selection) {
    std::vector<int64_t> patches;
    patches.reserve(flat_selection.size());
    for (int64_t f : flat_selection)
        patches.push_back(unit.flat_to_patch[static_cast<size_t>(f)]);
    std::sort(patches.begin(), patches.end());

    SparseLayerGradient out;
    out.layer_id = grad.spec.layer_id;
    out.kept.reserve(patches.size());
    for (int64_t pi : patches) {
        const int64_t f = unit.patch_element_indices[static_cast<size_t>(pi)][0];
        out.kept.push_back({pi, {grad.values[static_cast<size_t>(f)]}});
    }
    return out;
}

static void check_model(const ModelGradient& grad, std::span<const PatchPartition> units) {
    if (grad.layers.size() != units.size())
        throw ShapeMismatch("layer count does not match unit partitions");
    for (const auto& l : grad.layers)
        if (!l.all_finite())
            throw NonFinite("non-finite gradient in layer " + std::to_string(l.spec.layer_id));
}

SparseModelGradient topk_sparsify(const ModelGradient& grad, std::span<const PatchPartition> units,
                                  double density, int64_t iteration) {
    check_model(grad, units);
    SparseModelGradient out;
    out.iteration = iteration;
    out.layers.reserve(grad.layers.size());
    for (size_t li = 0; li < grad.layers.size(); ++li) {
        const auto& g = grad.layers[li].values;
        const int64_t k = element_keep_count(static_cast<int64_t>(g.size()), density);

        std::vector<int64_t> order(g.size());
        for (size_t i = 0; i < g.size(); ++i) order[i] = static_cast<int64_t>(i);
        std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
            const double ma = std::fabs(g[static_cast<size_t>(a)]);
            const double mb = std::fabs(g[static_cast<size_t>(b)]);
            if (ma != mb) return ma > mb;
            return a < b;  // equal magnitudes: lower flat index wins
        });
        order.resize(static_cast<size_t>(k));
        out.layers.push_back(pack_singletons(grad.layers[li], units[li], std::move(order)));
    }
    return out;
}

SparseModelGradient randomk_sparsify(const ModelGradient& grad, std::span<const PatchPartition> units,
                                     double density, uint64_t rng_seed, int64_t iteration) {
    check_model(grad, units);
    SparseModelGradient out;
    out.iteration = iteration;
    out.layers.reserve(grad.layers.size());
    for (size_t li = 0; li < grad.layers.size(); ++li) {
        const int64_t n = static_cast<int64_t>(grad.layers[li].values.size());
        const int64_t k = element_keep_count(n, density);
        auto eng = make_engine(mix_seed(rng_seed, grad.layers[li].spec.layer_id));
        out.layers.push_back(pack_singletons(grad.layers[li], units[li], sample_distinct(eng, n, k)));
    }
    return out;
}

QuantizedModelGradient sign_quantize(const ModelGradient& grad, int64_t iteration) {
    QuantizedModelGradient q;
    q.iteration = iteration;
    q.layers.reserve(grad.layers.size());
    for (const auto& l : grad.layers) {
        if (!l.all_finite())
            throw NonFinite("sign_quantize: non-finite gradient in layer " +
                            std::to_string(l.spec.layer_id));
        QuantizedLayer ql;
        ql.layer_id = l.spec.layer_id;
        ql.bit_count = static_cast<int64_t>(l.values.size());
        double sum_abs = 0.0;
        for (double v : l.values) sum_abs += std::fabs(v);
        ql.scale = sum_abs / static_cast<double>(l.values.size());
        ql.sign_bits.assign(static_cast<size_t>((ql.bit_count + 7) / 8), 0);
        for (size_t i = 0; i < l.values.size(); ++i)
            if (!(l.values[i] < 0.0))  // negatives map to -1, everything else (zero included) to +1
                ql.sign_bits[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
        q.layers.push_back(std::move(ql));
    }
    return q;
}

ModelGradient dequantize(const QuantizedModelGradient& quant, std::span<const LayerSpec> specs) {
    if (quant.layers.size() != specs.size())
        throw ShapeMismatch("dequantize: layer count does not match specs");
    ModelGradient out = ModelGradient::zeros_like(specs);
    for (size_t li = 0; li < specs.size(); ++li) {
        const auto& ql = quant.layers[li];
        if (ql.layer_id != specs[li].layer_id) throw IndexMismatch("dequantize: layer_id mismatch");
        if (ql.bit_count != specs[li].element_count())
            throw ShapeMismatch("dequantize: bit count does not match layer size");
        auto& v = out.layers[li].values;
        for (size_t i = 0; i < v.size(); ++i) {
            const bool positive = ql.sign_bits[i / 8] >> (i % 8) & 1u;
            v[i] = positive ? ql.scale : -ql.scale;
        }
    }
    return out;
}

uint64_t wire_size_bytes(const QuantizedModelGradient& quant) {
    uint64_t total = 0;
    for (const auto& l : quant.layers)
        total += 8 + 4 + static_cast<uint64_t>((l.bit_count + 7) / 8);
    return total;
}

static void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

std::vector<uint8_t> encode_wire(const QuantizedModelGradient& quant) {
    std::vector<uint8_t> out;
    for (const auto& l : quant.layers) {
        put_u32(out, static_cast<uint32_t>(l.layer_id));
        const float scale = static_cast<float>(l.scale);
        uint32_t bits;
        static_assert(sizeof bits == sizeof scale);
        std::memcpy(&bits, &scale, sizeof bits);
        put_u32(out, bits);
        put_u32(out, static_cast<uint32_t>(l.bit_count));
        out.insert(out.end(), l.sign_bits.begin(), l.sign_bits.end());
    }
    return out;
}

SparseModelGradient dgc_sparsify(AccumulatorState& state, const ModelGradient& grad,
                                 std::span<const PatchPartition> units, double density,
                                 int64_t iteration) {
    check_model(grad, units);
    const ModelGradient v = accumulate(state, grad);
    SparseModelGradient out = topk_sparsify(v, units, density, iteration);
    commit_transmitted(state, out, units);
    return out;
}

}  // namespace rsdgc
