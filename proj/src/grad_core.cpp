#include "rsdgc/grad_core.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rsdgc {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::dense: return "dense";
        case LayerKind::bias: return "bias";
    }
    return "?";
}

static size_t expected_rank(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return 4;
        case LayerKind::dense: return 2;
        case LayerKind::bias: return 1;
    }
    return 0;
}

int64_t LayerSpec::element_count() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

int64_t LayerSpec::view_rows() const {
    switch (kind) {
        case LayerKind::conv: return shape[0] * shape[2];  // N * Kh
        case LayerKind::dense: return shape[0];
        case LayerKind::bias: return 1;
    }
    return 0;
}

int64_t LayerSpec::view_cols() const {
    switch (kind) {
        case LayerKind::conv: return shape[1] * shape[3];  // C * Kw
        case LayerKind::dense: return shape[1];
        case LayerKind::bias: return shape[0];
    }
    return 0;
}

void LayerSpec::validate() const {
    if (layer_id < 1) throw std::invalid_argument("layer_id must be >= 1");
    if (shape.size() != expected_rank(kind))
        throw std::invalid_argument("layer " + std::to_string(layer_id) + ": " + to_string(kind) +
                                    " expects rank " + std::to_string(expected_rank(kind)));
    for (int64_t d : shape)
        if (d < 1) throw std::invalid_argument("layer " + std::to_string(layer_id) + ": non-positive dim");
    if (patch_size < 1) throw std::invalid_argument("patch_size must be >= 1");
}

bool LayerTensor::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

int64_t ModelTensors::element_count() const {
    int64_t n = 0;
    for (const auto& l : layers) n += static_cast<int64_t>(l.values.size());
    return n;
}

bool ModelTensors::same_shape_as(const ModelTensors& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (size_t i = 0; i < layers.size(); ++i) {
        // patch_size is partition metadata, not tensor layout; gradients that
        // went through a p=1 element partition still combine with p>1 buffers.
        const LayerSpec& a = layers[i].spec;
        const LayerSpec& b = other.layers[i].spec;
        if (a.layer_id != b.layer_id || a.kind != b.kind || a.shape != b.shape) return false;
        if (layers[i].values.size() != other.layers[i].values.size()) return false;
    }
    return true;
}

ModelTensors ModelTensors::zeros_like(std::span<const LayerSpec> specs) {
    ModelTensors t;
    t.layers.reserve(specs.size());
    for (const auto& s : specs) {
        LayerTensor lt;
        lt.spec = s;
        lt.values.assign(static_cast<size_t>(s.element_count()), 0.0);
        t.layers.push_back(std::move(lt));
    }
    return t;
}

void ModelTensors::axpy(double a, const ModelTensors& other) {
    if (!same_shape_as(other)) throw ShapeMismatch("axpy: tensor layouts differ");
    for (size_t i = 0; i < layers.size(); ++i) {
        auto& dst = layers[i].values;
        const auto& src = other.layers[i].values;
        for (size_t j = 0; j < dst.size(); ++j) dst[j] += a * src[j];
    }
}

void ModelTensors::scale(double a) {
    for (auto& l : layers)
        for (double& v : l.values) v *= a;
}

// Maps a 2-D view coordinate back to the flat row-major index of the stored
// tensor. Only conv needs real work: view row r = n*Kh + kh, col c = ch*Kw + kw.
static int64_t view_to_flat(const LayerSpec& s, int64_t r, int64_t c) {
    switch (s.kind) {
        case LayerKind::conv: {
            const int64_t C = s.shape[1], Kh = s.shape[2], Kw = s.shape[3];
            const int64_t n = r / Kh, kh = r % Kh;
            const int64_t ch = c / Kw, kw = c % Kw;
            return ((n * C + ch) * Kh + kh) * Kw + kw;
        }
        case LayerKind::dense: return r * s.shape[1] + c;
        case LayerKind::bias: return c;
    }
    return 0;
}

PatchPartition build_partition(const LayerSpec& spec) {
    spec.validate();
    const int64_t p = spec.patch_size;
    // Bias strips use runs of p*p so every full patch carries p*p elements
    // regardless of kind.
    const int64_t block_h = spec.kind == LayerKind::bias ? 1 : p;
    const int64_t block_w = spec.kind == LayerKind::bias ? p * p : p;
    const int64_t rows = spec.view_rows();
    const int64_t cols = spec.view_cols();

    PatchPartition part;
    part.spec = spec;
    part.grid_rows = (rows + block_h - 1) / block_h;
    part.grid_cols = (cols + block_w - 1) / block_w;
    part.num_patches = part.grid_rows * part.grid_cols;
    part.patch_element_indices.resize(static_cast<size_t>(part.num_patches));
    part.flat_to_patch.assign(static_cast<size_t>(spec.element_count()), -1);

    for (int64_t gr = 0; gr < part.grid_rows; ++gr) {
        const int64_t r0 = gr * block_h;
        const int64_t r1 = std::min(r0 + block_h, rows);
        for (int64_t gc = 0; gc < part.grid_cols; ++gc) {
            const int64_t c0 = gc * block_w;
            const int64_t c1 = std::min(c0 + block_w, cols);
            const int64_t patch = gr * part.grid_cols + gc;
            auto& idx = part.patch_element_indices[static_cast<size_t>(patch)];
            idx.reserve(static_cast<size_t>((r1 - r0) * (c1 - c0)));
            for (int64_t r = r0; r < r1; ++r)
                for (int64_t c = c0; c < c1; ++c) {
                    const int64_t flat = view_to_flat(spec, r, c);
                    idx.push_back(flat);
                    part.flat_to_patch[static_cast<size_t>(flat)] = patch;
                }
        }
    }
    return part;
}

std::vector<PatchPartition> build_partitions(std::span<const LayerSpec> specs) {
    std::vector<PatchPartition> parts;
    parts.reserve(specs.size());
    for (const auto& s : specs) parts.push_back(build_partition(s));
    return parts;
}

std::vector<PatchPartition> unit_partitions(std::span<const LayerSpec> specs) {
    std::vector<PatchPartition> parts;
    parts.reserve(specs.size());
    for (auto s : specs) {
        s.patch_size = 1;
        parts.push_back(build_partition(s));
    }
    return parts;
}

int64_t SparseModelGradient::kept_value_count() const {
    int64_t n = 0;
    for (const auto& l : layers)
        for (const auto& k : l.kept) n += static_cast<int64_t>(k.values.size());
    return n;
}

ModelGradient densify(const SparseModelGradient& sparse, std::span<const PatchPartition> partitions) {
    if (sparse.layers.size() != partitions.size())
        throw IndexMismatch("densify: layer count differs from partition count");

    ModelGradient out;
    out.layers.reserve(partitions.size());
    for (size_t li = 0; li < partitions.size(); ++li) {
        const auto& part = partitions[li];
        const auto& sl = sparse.layers[li];
        if (sl.layer_id != part.spec.layer_id)
            throw IndexMismatch("densify: layer_id mismatch at position " + std::to_string(li));

        LayerTensor lt;
        lt.spec = part.spec;
        lt.values.assign(static_cast<size_t>(part.spec.element_count()), 0.0);
        int64_t prev = -1;
        for (const auto& kp : sl.kept) {
            if (kp.patch_index <= prev)
                throw IndexMismatch("densify: patch indices not strictly increasing in layer " +
                                    std::to_string(sl.layer_id));
            prev = kp.patch_index;
            if (kp.patch_index < 0 || kp.patch_index >= part.num_patches)
                throw IndexMismatch("densify: patch index " + std::to_string(kp.patch_index) +
                                    " out of range in layer " + std::to_string(sl.layer_id));
            const auto& idx = part.patch_element_indices[static_cast<size_t>(kp.patch_index)];
            if (idx.size() != kp.values.size())
                throw IndexMismatch("densify: value count " + std::to_string(kp.values.size()) +
                                    " != patch size " + std::to_string(idx.size()) + " in layer " +
                                    std::to_string(sl.layer_id));
            for (size_t j = 0; j < idx.size(); ++j)
                lt.values[static_cast<size_t>(idx[j])] = kp.values[j];
        }
        out.layers.push_back(std::move(lt));
    }
    return out;
}

uint64_t wire_size_bytes(const SparseModelGradient& sparse, const EncodingConfig& enc) {
    uint64_t total = 0;
    for (const auto& l : sparse.layers) {
        total += EncodingConfig::header_bytes;
        for (const auto& kp : l.kept)
            total += static_cast<uint64_t>(enc.index_bytes) +
                     static_cast<uint64_t>(kp.values.size()) * static_cast<uint64_t>(enc.value_bytes);
    }
    return total;
}

uint64_t dense_value_bytes(std::span<const LayerSpec> specs, const EncodingConfig& enc) {
    uint64_t total = 0;
    for (const auto& s : specs)
        total += static_cast<uint64_t>(s.element_count()) * static_cast<uint64_t>(enc.value_bytes);
    return total;
}

uint64_t dense_wire_size_bytes(std::span<const LayerSpec> specs, const EncodingConfig& enc) {
    return dense_value_bytes(specs, enc) +
           static_cast<uint64_t>(specs.size()) * EncodingConfig::header_bytes;
}

static void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 24));
}

static void put_f32(std::vector<uint8_t>& out, float v) {
    put_u32(out, std::bit_cast<uint32_t>(v));
}

namespace {
struct ByteReader {
    std::span<const uint8_t> bytes;
    size_t pos = 0;

    uint32_t u32() {
        if (pos + 4 > bytes.size()) throw IndexMismatch("decode_wire: truncated stream");
        uint32_t v = static_cast<uint32_t>(bytes[pos]) | static_cast<uint32_t>(bytes[pos + 1]) << 8 |
                     static_cast<uint32_t>(bytes[pos + 2]) << 16 |
                     static_cast<uint32_t>(bytes[pos + 3]) << 24;
        pos += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }
};
}  // namespace

std::vector<uint8_t> encode_wire(const SparseModelGradient& sparse) {
    std::vector<uint8_t> out;
    for (const auto& l : sparse.layers) {
        put_u32(out, static_cast<uint32_t>(l.layer_id));
        put_u32(out, static_cast<uint32_t>(l.kept.size()));
        for (const auto& kp : l.kept) {
            put_u32(out, static_cast<uint32_t>(kp.patch_index));
            for (double v : kp.values) put_f32(out, static_cast<float>(v));
        }
    }
    return out;
}

SparseModelGradient decode_wire(std::span<const uint8_t> bytes, std::span<const PatchPartition> partitions) {
    ByteReader rd{bytes};
    SparseModelGradient sparse;
    sparse.layers.reserve(partitions.size());
    for (const auto& part : partitions) {
        SparseLayerGradient sl;
        sl.layer_id = static_cast<int32_t>(rd.u32());
        if (sl.layer_id != part.spec.layer_id)
            throw IndexMismatch("decode_wire: unexpected layer_id " + std::to_string(sl.layer_id));
        const uint32_t kept_count = rd.u32();
        sl.kept.resize(kept_count);
        for (auto& kp : sl.kept) {
            kp.patch_index = rd.u32();
            if (kp.patch_index >= part.num_patches)
                throw IndexMismatch("decode_wire: patch index out of range");
            kp.values.resize(static_cast<size_t>(part.patch_element_count(kp.patch_index)));
            for (double& v : kp.values) v = rd.f32();
        }
        sparse.layers.push_back(std::move(sl));
    }
    if (rd.pos != bytes.size()) throw IndexMismatch("decode_wire: trailing bytes");
    return sparse;
}

}  // namespace rsdgc
