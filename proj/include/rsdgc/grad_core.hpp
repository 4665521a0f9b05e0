#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rsdgc/errors.hpp"

namespace rsdgc {

enum class LayerKind { conv, dense, bias };

std::string to_string(LayerKind kind);

// Static description of one layer's gradient tensor and how it is tiled into
// patches. Patches are the unit of selection and of wire transmission.
//
// Every layer has a 2-D view that the p x p tiling runs over:
//   conv  (shape N,C,Kh,Kw): kernels laid out in an N x C grid of Kh x Kw
//                            blocks, i.e. a (N*Kh) x (C*Kw) plane. With
//                            p == Kh == Kw each tile is exactly one kernel.
//   dense (shape rows,cols): the natural matrix.
//   bias  (shape len):       a 1 x len strip, tiled into runs of p*p elements
//                            so a bias patch amortizes its index the same as
//                            a square patch.
struct LayerSpec {
    int32_t layer_id = 0;  // 1-based position in the model
    LayerKind kind = LayerKind::dense;
    std::vector<int64_t> shape;
    int32_t patch_size = 1;

    int64_t element_count() const;
    int64_t view_rows() const;
    int64_t view_cols() const;

    // Throws std::invalid_argument on malformed specs (wrong rank for the
    // kind, non-positive dims, patch_size < 1, layer_id < 1).
    void validate() const;

    bool operator==(const LayerSpec&) const = default;
};

// A tensor bound to its layer spec, values flat in row-major order of
// LayerSpec::shape. Used both for gradients and for weights.
struct LayerTensor {
    LayerSpec spec;
    std::vector<double> values;

    bool all_finite() const;
};

struct ModelTensors {
    std::vector<LayerTensor> layers;

    int64_t element_count() const;
    bool same_shape_as(const ModelTensors& other) const;

    static ModelTensors zeros_like(std::span<const LayerSpec> specs);

    // this += a * other, elementwise across all layers. ShapeMismatch if the
    // layouts differ.
    void axpy(double a, const ModelTensors& other);
    void scale(double a);
};

using ModelGradient = ModelTensors;
using ModelWeights = ModelTensors;
using LayerGradient = LayerTensor;

// Disjoint tiling of one layer's 2-D view. Patch order is row-major over the
// tile grid; element order inside a patch is row-major over the view. Edge
// patches keep their true (smaller) element count; no padding anywhere.
struct PatchPartition {
    LayerSpec spec;
    int64_t grid_rows = 0;
    int64_t grid_cols = 0;
    int64_t num_patches = 0;
    std::vector<std::vector<int64_t>> patch_element_indices;  // flat indices per patch
    std::vector<int64_t> flat_to_patch;                       // inverse map, one entry per element

    int64_t patch_element_count(int64_t patch_index) const {
        return static_cast<int64_t>(patch_element_indices[static_cast<size_t>(patch_index)].size());
    }
};

PatchPartition build_partition(const LayerSpec& spec);
std::vector<PatchPartition> build_partitions(std::span<const LayerSpec> specs);

// Same layers with patch_size forced to 1: every patch is a single element.
// Element-granular compressors (top_k, random_k, dgc) share the patch wire
// format through this partition.
std::vector<PatchPartition> unit_partitions(std::span<const LayerSpec> specs);

struct SparseLayerGradient {
    struct KeptPatch {
        int64_t patch_index = 0;
        std::vector<double> values;  // patch-local order

        bool operator==(const KeptPatch&) const = default;
    };

    int32_t layer_id = 0;
    std::vector<KeptPatch> kept;  // patch_index strictly increasing

    bool operator==(const SparseLayerGradient&) const = default;
};

struct SparseModelGradient {
    int64_t iteration = 0;
    std::vector<SparseLayerGradient> layers;  // one entry per model layer, model order

    int64_t kept_value_count() const;
};

// Scatters kept patch values into a zero tensor per layer. IndexMismatch if a
// patch index is out of range, a value count does not match the partition's
// patch, layer ids disagree, or the layer lists are not aligned.
ModelGradient densify(const SparseModelGradient& sparse, std::span<const PatchPartition> partitions);

// Byte accounting for the sparse wire format. Per layer: an 8-byte header
// (u32 layer_id, u32 kept_count) then per kept patch one u32 index plus the
// patch's values. Headers are charged even for empty layers.
struct EncodingConfig {
    int32_t value_bytes = 4;
    int32_t index_bytes = 4;
    static constexpr int32_t header_bytes = 8;
};

uint64_t wire_size_bytes(const SparseModelGradient& sparse, const EncodingConfig& enc = {});

// Dense reference costs used by the communication meter: value payload alone,
// and a dense send (per-layer header + values).
uint64_t dense_value_bytes(std::span<const LayerSpec> specs, const EncodingConfig& enc = {});
uint64_t dense_wire_size_bytes(std::span<const LayerSpec> specs, const EncodingConfig& enc = {});

// Little-endian encoding of the default wire format (u32 ids/counts, f32
// values). decode needs the partitions to know each patch's element count.
// The byte stream exists for dump files and meter cross-checks; in-memory
// sync paths keep full double precision.
std::vector<uint8_t> encode_wire(const SparseModelGradient& sparse);
SparseModelGradient decode_wire(std::span<const uint8_t> bytes, std::span<const PatchPartition> partitions);

}  // namespace rsdgc
