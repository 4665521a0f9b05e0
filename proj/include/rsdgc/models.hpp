#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsdgc/grad_core.hpp"

namespace rsdgc {

enum class Architecture { mlp, tiny_cnn };
enum class DatasetKind { gaussian_blobs, concentric_rings };

std::string to_string(Architecture arch);
Architecture architecture_from_string(std::string_view name);
std::string to_string(DatasetKind kind);
DatasetKind dataset_from_string(std::string_view name);

// Model family and instance sizes. layer_specs() fixes the layer order the
// rest of the pipeline sees:
//   mlp:      dense h x in, bias h, dense h x h, bias h, dense C x h, bias C
//   tiny_cnn: conv F x 1 x 3 x 3, bias F, dense C x (F*5*5), bias C
// tiny_cnn runs on 1 x side x side inputs: valid 3x3 conv, ReLU, 2x2 mean
// pooling (stride 2), then the dense softmax head.
struct ModelSpec {
    Architecture arch = Architecture::mlp;
    int32_t input_dim = 2;    // mlp
    int32_t hidden = 32;      // mlp
    int32_t image_side = 12;  // tiny_cnn
    int32_t conv_filters = 8; // tiny_cnn
    int32_t num_classes = 2;
    int32_t patch_size = 3;   // stamped on every LayerSpec

    std::vector<LayerSpec> layer_specs() const;
    int32_t feature_dim() const;  // expected flat input size per sample
};

// He-uniform weights, zero biases. Each layer draws from its own seeded
// stream so layouts can grow without disturbing earlier layers.
ModelWeights init_weights(const ModelSpec& spec, uint64_t seed);

struct DatasetShard {
    DatasetKind generator = DatasetKind::gaussian_blobs;
    uint64_t seed = 0;
    int32_t size = 0;
    int32_t num_classes = 2;
    int32_t dim = 2;
    std::vector<double> features;  // size * dim, row-major
    std::vector<int32_t> labels;

    std::span<const double> sample(int32_t i) const {
        return {features.data() + static_cast<size_t>(i) * static_cast<size_t>(dim),
                static_cast<size_t>(dim)};
    }
};

// Deterministic synthetic 2-D point sets, class-balanced within one sample
// and standardized to zero mean / unit variance per dimension.
//   gaussian_blobs:    unit-variance Gaussians, centers 6 sigma apart on a ring
//   concentric_rings:  classes on nested circles around the origin (not
//                      linearly separable by construction)
DatasetShard make_dataset(DatasetKind kind, uint64_t seed, int32_t size, int32_t num_classes);

// Renders each 2-D point as a Gaussian bump on a side x side grid and
// re-standardizes per pixel; the tiny_cnn consumes these.
DatasetShard rasterize_images(const DatasetShard& points, int32_t side);

// Seed-stable shuffled split; the test fraction is taken from the tail of the
// permutation.
std::pair<DatasetShard, DatasetShard> split_train_test(const DatasetShard& data, double test_fraction,
                                                       uint64_t seed);

DatasetShard slice(const DatasetShard& data, int32_t begin, int32_t count);

struct OptimizerConfig {
    enum class LrSchedule { constant, step };

    double learning_rate = 0.1;
    double momentum = 0.9;  // consumed by the accumulator or the server-side buffer
    LrSchedule schedule = LrSchedule::constant;
    double decay_factor = 0.1;
    int32_t decay_period = 10;  // epochs per decay step

    double lr_at(int32_t epoch) const;
    void validate() const;
};

struct ForwardBackwardResult {
    double loss = 0.0;          // mean cross-entropy over the batch
    int32_t correct = 0;        // argmax hits
    uint64_t activation_hash = 0;  // FNV-1a over all ReLU gate bits
    ModelGradient grad;         // mean gradient, same layout as the weights
};

struct EvalResult {
    double loss = 0.0;
    int32_t correct = 0;
    uint64_t activation_hash = 0;
};

// Batch forward + analytic backward. Indices select samples from the shard.
ForwardBackwardResult forward_backward(const ModelSpec& spec, const ModelWeights& weights,
                                       const DatasetShard& data, std::span<const int32_t> indices);

// Forward only; used for test-set metrics and by finite-difference checks
// (the activation hash tells a checker when a perturbation crossed a ReLU
// kink, where central differences stop approximating the derivative).
EvalResult evaluate(const ModelSpec& spec, const ModelWeights& weights, const DatasetShard& data,
                    std::span<const int32_t> indices);

}  // namespace rsdgc
