#include "rsdgc/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsdgc/rng.hpp"

namespace rsdgc {

std::string to_string(Architecture arch) {
    return arch == Architecture::mlp ? "mlp" : "tiny_cnn";
}

Architecture architecture_from_string(std::string_view name) {
    if (name == "mlp") return Architecture::mlp;
    if (name == "tiny_cnn") return Architecture::tiny_cnn;
    throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

std::string to_string(DatasetKind kind) {
    return kind == DatasetKind::gaussian_blobs ? "gaussian_blobs" : "concentric_rings";
}

DatasetKind dataset_from_string(std::string_view name) {
    if (name == "gaussian_blobs") return DatasetKind::gaussian_blobs;
    if (name == "concentric_rings") return DatasetKind::concentric_rings;
    throw ConfigError("unknown dataset '" + std::string(name) + "'");
}

static int32_t pooled_side(const ModelSpec& s) { return (s.image_side - 2) / 2; }

std::vector<LayerSpec> ModelSpec::layer_specs() const {
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    std::vector<LayerSpec> specs;
    auto add = [&](LayerKind kind, std::vector<int64_t> shape) {
        LayerSpec s;
        s.layer_id = static_cast<int32_t>(specs.size()) + 1;
        s.kind = kind;
        s.shape = std::move(shape);
        s.patch_size = patch_size;
        s.validate();
        specs.push_back(std::move(s));
    };
    if (arch == Architecture::mlp) {
        add(LayerKind::dense, {hidden, input_dim});
        add(LayerKind::bias, {hidden});
        add(LayerKind::dense, {hidden, hidden});
        add(LayerKind::bias, {hidden});
        add(LayerKind::dense, {num_classes, hidden});
        add(LayerKind::bias, {num_classes});
    } else {
        if (image_side < 4 || (image_side - 2) % 2 != 0)
            throw std::invalid_argument("image_side must be even and >= 4");
        const int64_t ps = pooled_side(*this);
        add(LayerKind::conv, {conv_filters, 1, 3, 3});
        add(LayerKind::bias, {conv_filters});
        add(LayerKind::dense, {num_classes, conv_filters * ps * ps});
        add(LayerKind::bias, {num_classes});
    }
    return specs;
}

int32_t ModelSpec::feature_dim() const {
    return arch == Architecture::mlp ? input_dim : image_side * image_side;
}

ModelWeights init_weights(const ModelSpec& spec, uint64_t seed) {
    const auto specs = spec.layer_specs();
    ModelWeights w = ModelWeights::zeros_like(specs);
    for (auto& layer : w.layers) {
        if (layer.spec.kind == LayerKind::bias) continue;  // biases start at zero
        const int64_t fan_in = layer.spec.kind == LayerKind::dense
                                   ? layer.spec.shape[1]
                                   : layer.spec.shape[1] * layer.spec.shape[2] * layer.spec.shape[3];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        auto eng = make_engine(mix_seed(seed, 0x1717u, layer.spec.layer_id));
        for (double& v : layer.values) v = uniform_range(eng, -bound, bound);
    }
    return w;
}

// ---------------------------------------------------------------- datasets

static void standardize_per_dim(std::vector<double>& features, int32_t size, int32_t dim) {
    for (int32_t d = 0; d < dim; ++d) {
        double mean = 0.0;
        for (int32_t i = 0; i < size; ++i) mean += features[static_cast<size_t>(i) * dim + d];
        mean /= size;
        double var = 0.0;
        for (int32_t i = 0; i < size; ++i) {
            const double c = features[static_cast<size_t>(i) * dim + d] - mean;
            var += c * c;
        }
        var /= size;
        const double sd = std::sqrt(var);
        const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;  // constant dims stay centered
        for (int32_t i = 0; i < size; ++i) {
            double& v = features[static_cast<size_t>(i) * dim + d];
            v = (v - mean) * inv;
        }
    }
}

DatasetShard make_dataset(DatasetKind kind, uint64_t seed, int32_t size, int32_t num_classes) {
    if (size < 1) throw std::invalid_argument("dataset size must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");

    DatasetShard d;
    d.generator = kind;
    d.seed = seed;
    d.size = size;
    d.num_classes = num_classes;
    d.dim = 2;
    d.labels.resize(static_cast<size_t>(size));
    for (int32_t i = 0; i < size; ++i) d.labels[static_cast<size_t>(i)] = i % num_classes;
    auto label_eng = make_engine(mix_seed(seed, 0xBA1Au));
    shuffle(d.labels, label_eng);  // balanced within 1 by construction, order mixed

    d.features.resize(static_cast<size_t>(size) * 2);
    auto eng = make_engine(mix_seed(seed, 0xFEA7u));
    const double two_pi = 6.283185307179586477;
    if (kind == DatasetKind::gaussian_blobs) {
        // Unit-variance blobs with neighboring centers 6 sigma apart.
        const double ring_radius =
            num_classes == 2 ? 3.0 : 3.0 / std::sin(two_pi / 2.0 / num_classes);
        for (int32_t i = 0; i < size; ++i) {
            const int32_t c = d.labels[static_cast<size_t>(i)];
            const double angle = two_pi * c / num_classes;
            d.features[static_cast<size_t>(i) * 2] = ring_radius * std::cos(angle) + normal01(eng);
            d.features[static_cast<size_t>(i) * 2 + 1] = ring_radius * std::sin(angle) + normal01(eng);
        }
    } else {
        // Class c lives on a circle of radius 1 + 1.5 c with mild radial
        // noise; every class surrounds the origin, so no half-plane does well.
        for (int32_t i = 0; i < size; ++i) {
            const int32_t c = d.labels[static_cast<size_t>(i)];
            const double radius = (1.0 + 1.5 * c) * (1.0 + 0.05 * normal01(eng));
            const double theta = uniform_range(eng, 0.0, two_pi);
            d.features[static_cast<size_t>(i) * 2] = radius * std::cos(theta);
            d.features[static_cast<size_t>(i) * 2 + 1] = radius * std::sin(theta);
        }
    }
    standardize_per_dim(d.features, size, 2);
    return d;
}

DatasetShard rasterize_images(const DatasetShard& points, int32_t side) {
    if (points.dim != 2) throw ShapeMismatch("rasterize_images expects 2-D points");
    DatasetShard d;
    d.generator = points.generator;
    d.seed = points.seed;
    d.size = points.size;
    d.num_classes = points.num_classes;
    d.labels = points.labels;
    d.dim = side * side;
    d.features.resize(static_cast<size_t>(points.size) * static_cast<size_t>(d.dim));

    // Standardized points live almost entirely in [-3.5, 3.5]; map that square
    // onto the pixel grid and stamp a Gaussian bump at each point.
    const double span = 7.0;
    const double sigma = 0.09 * side;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int32_t i = 0; i < points.size; ++i) {
        const double px = (points.features[static_cast<size_t>(i) * 2] + 3.5) / span * side;
        const double py = (points.features[static_cast<size_t>(i) * 2 + 1] + 3.5) / span * side;
        double* img = d.features.data() + static_cast<size_t>(i) * static_cast<size_t>(d.dim);
        for (int32_t r = 0; r < side; ++r)
            for (int32_t c = 0; c < side; ++c) {
                const double dx = c + 0.5 - px;
                const double dy = r + 0.5 - py;
                img[r * side + c] = std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
    }
    standardize_per_dim(d.features, d.size, d.dim);
    return d;
}

static DatasetShard gather(const DatasetShard& data, std::span<const int64_t> indices) {
    DatasetShard out;
    out.generator = data.generator;
    out.seed = data.seed;
    out.size = static_cast<int32_t>(indices.size());
    out.num_classes = data.num_classes;
    out.dim = data.dim;
    out.features.reserve(indices.size() * static_cast<size_t>(data.dim));
    out.labels.reserve(indices.size());
    for (int64_t i : indices) {
        const auto s = data.sample(static_cast<int32_t>(i));
        out.features.insert(out.features.end(), s.begin(), s.end());
        out.labels.push_back(data.labels[static_cast<size_t>(i)]);
    }
    return out;
}

std::pair<DatasetShard, DatasetShard> split_train_test(const DatasetShard& data, double test_fraction,
                                                       uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must be in [0, 1)");
    auto perm = identity_permutation(data.size);
    auto eng = make_engine(mix_seed(seed, 0x5917u));
    shuffle(perm, eng);
    const int32_t test_count = static_cast<int32_t>(std::floor(test_fraction * data.size));
    const int32_t train_count = data.size - test_count;
    return {gather(data, std::span(perm).subspan(0, static_cast<size_t>(train_count))),
            gather(data, std::span(perm).subspan(static_cast<size_t>(train_count)))};
}

DatasetShard slice(const DatasetShard& data, int32_t begin, int32_t count) {
    if (begin < 0 || count < 0 || begin + count > data.size)
        throw std::invalid_argument("slice out of range");
    std::vector<int64_t> idx(static_cast<size_t>(count));
    for (int32_t i = 0; i < count; ++i) idx[static_cast<size_t>(i)] = begin + i;
    return gather(data, idx);
}

double OptimizerConfig::lr_at(int32_t epoch) const {
    if (schedule == LrSchedule::constant) return learning_rate;
    return learning_rate * std::pow(decay_factor, epoch / decay_period);
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    if (!(decay_factor > 0.0)) throw std::invalid_argument("decay_factor must be > 0");
    if (decay_period < 1) throw std::invalid_argument("decay_period must be >= 1");
}

// ------------------------------------------------------------ forward paths

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline void hash_gate(uint64_t& h, bool open) {
    h ^= static_cast<uint64_t>(open);
    h *= kFnvPrime;
}

// Numerically stable softmax cross-entropy. Fills probs, returns the sample
// loss, and reports the argmax for the accuracy counter.
double softmax_ce(std::span<const double> logits, int32_t label, std::vector<double>& probs,
                  int32_t& argmax) {
    const size_t n = logits.size();
    double max_logit = logits[0];
    argmax = 0;
    for (size_t k = 1; k < n; ++k)
        if (logits[k] > max_logit) {
            max_logit = logits[k];
            argmax = static_cast<int32_t>(k);
        }
    double sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
        probs[k] = std::exp(logits[k] - max_logit);
        sum += probs[k];
    }
    for (size_t k = 0; k < n; ++k) probs[k] /= sum;
    return std::log(sum) - (logits[static_cast<size_t>(label)] - max_logit);
}

struct MlpBuffers {
    std::vector<double> z1, a1, z2, a2, logits, probs, dz1, dz2, dlogits;
};

void mlp_forward(const ModelSpec& spec, const ModelWeights& w, std::span<const double> x,
                 MlpBuffers& b, uint64_t& hash) {
    const int32_t H = spec.hidden, D = spec.input_dim, C = spec.num_classes;
    const auto& W1 = w.layers[0].values;
    const auto& b1 = w.layers[1].values;
    const auto& W2 = w.layers[2].values;
    const auto& b2 = w.layers[3].values;
    const auto& W3 = w.layers[4].values;
    const auto& b3 = w.layers[5].values;

    b.z1.resize(static_cast<size_t>(H));
    b.a1.resize(static_cast<size_t>(H));
    for (int32_t h = 0; h < H; ++h) {
        double z = b1[static_cast<size_t>(h)];
        const double* row = W1.data() + static_cast<size_t>(h) * D;
        for (int32_t i = 0; i < D; ++i) z += row[i] * x[static_cast<size_t>(i)];
        b.z1[static_cast<size_t>(h)] = z;
        const bool open = z > 0.0;
        hash_gate(hash, open);
        b.a1[static_cast<size_t>(h)] = open ? z : 0.0;
    }
    b.z2.resize(static_cast<size_t>(H));
    b.a2.resize(static_cast<size_t>(H));
    for (int32_t h = 0; h < H; ++h) {
        double z = b2[static_cast<size_t>(h)];
        const double* row = W2.data() + static_cast<size_t>(h) * H;
        for (int32_t i = 0; i < H; ++i) z += row[i] * b.a1[static_cast<size_t>(i)];
        b.z2[static_cast<size_t>(h)] = z;
        const bool open = z > 0.0;
        hash_gate(hash, open);
        b.a2[static_cast<size_t>(h)] = open ? z : 0.0;
    }
    b.logits.resize(static_cast<size_t>(C));
    for (int32_t k = 0; k < C; ++k) {
        double z = b3[static_cast<size_t>(k)];
        const double* row = W3.data() + static_cast<size_t>(k) * H;
        for (int32_t i = 0; i < H; ++i) z += row[i] * b.a2[static_cast<size_t>(i)];
        b.logits[static_cast<size_t>(k)] = z;
    }
}

struct CnnBuffers {
    std::vector<double> z, a, pooled, logits, probs, dz, dpooled, dlogits;
};

void cnn_forward(const ModelSpec& spec, const ModelWeights& w, std::span<const double> x,
                 CnnBuffers& b, uint64_t& hash) {
    const int32_t side = spec.image_side, F = spec.conv_filters, C = spec.num_classes;
    const int32_t co = side - 2;        // valid 3x3 conv output side
    const int32_t ps = co / 2;          // after 2x2 mean pooling
    const auto& Wc = w.layers[0].values;
    const auto& bc = w.layers[1].values;
    const auto& Wh = w.layers[2].values;
    const auto& bh = w.layers[3].values;

    b.z.resize(static_cast<size_t>(F) * co * co);
    b.a.resize(b.z.size());
    for (int32_t f = 0; f < F; ++f) {
        const double* k = Wc.data() + static_cast<size_t>(f) * 9;
        for (int32_t i = 0; i < co; ++i)
            for (int32_t j = 0; j < co; ++j) {
                double z = bc[static_cast<size_t>(f)];
                for (int32_t u = 0; u < 3; ++u) {
                    const double* xr = x.data() + static_cast<size_t>(i + u) * side + j;
                    z += k[u * 3] * xr[0] + k[u * 3 + 1] * xr[1] + k[u * 3 + 2] * xr[2];
                }
                const size_t at = (static_cast<size_t>(f) * co + i) * co + j;
                b.z[at] = z;
                const bool open = z > 0.0;
                hash_gate(hash, open);
                b.a[at] = open ? z : 0.0;
            }
    }
    b.pooled.resize(static_cast<size_t>(F) * ps * ps);
    for (int32_t f = 0; f < F; ++f)
        for (int32_t q = 0; q < ps; ++q)
            for (int32_t r = 0; r < ps; ++r) {
                const size_t base = (static_cast<size_t>(f) * co + 2 * q) * co + 2 * r;
                b.pooled[(static_cast<size_t>(f) * ps + q) * ps + r] =
                    0.25 * (b.a[base] + b.a[base + 1] + b.a[base + co] + b.a[base + co + 1]);
            }
    const int32_t feat = F * ps * ps;
    b.logits.resize(static_cast<size_t>(C));
    for (int32_t k = 0; k < C; ++k) {
        double z = bh[static_cast<size_t>(k)];
        const double* row = Wh.data() + static_cast<size_t>(k) * feat;
        for (int32_t i = 0; i < feat; ++i) z += row[i] * b.pooled[static_cast<size_t>(i)];
        b.logits[static_cast<size_t>(k)] = z;
    }
}

}  // namespace

ForwardBackwardResult forward_backward(const ModelSpec& spec, const ModelWeights& weights,
                                       const DatasetShard& data, std::span<const int32_t> indices) {
    if (data.dim != spec.feature_dim()) throw ShapeMismatch("dataset dim does not match model input");
    if (indices.empty()) throw std::invalid_argument("empty batch");

    ForwardBackwardResult res;
    res.activation_hash = kFnvOffset;
    res.grad = ModelGradient::zeros_like(spec.layer_specs());

    if (spec.arch == Architecture::mlp) {
        const int32_t H = spec.hidden, D = spec.input_dim, C = spec.num_classes;
        const auto& W2 = weights.layers[2].values;
        const auto& W3 = weights.layers[4].values;
        auto& gW1 = res.grad.layers[0].values;
        auto& gb1 = res.grad.layers[1].values;
        auto& gW2 = res.grad.layers[2].values;
        auto& gb2 = res.grad.layers[3].values;
        auto& gW3 = res.grad.layers[4].values;
        auto& gb3 = res.grad.layers[5].values;

        MlpBuffers b;
        b.probs.resize(static_cast<size_t>(C));
        b.dlogits.resize(static_cast<size_t>(C));
        b.dz1.resize(static_cast<size_t>(H));
        b.dz2.resize(static_cast<size_t>(H));
        for (int32_t idx : indices) {
            const auto x = data.sample(idx);
            const int32_t y = data.labels[static_cast<size_t>(idx)];
            mlp_forward(spec, weights, x, b, res.activation_hash);
            int32_t argmax = 0;
            res.loss += softmax_ce(b.logits, y, b.probs, argmax);
            if (argmax == y) ++res.correct;

            for (int32_t k = 0; k < C; ++k)
                b.dlogits[static_cast<size_t>(k)] = b.probs[static_cast<size_t>(k)] - (k == y ? 1.0 : 0.0);
            for (int32_t k = 0; k < C; ++k) {
                const double d = b.dlogits[static_cast<size_t>(k)];
                gb3[static_cast<size_t>(k)] += d;
                double* row = gW3.data() + static_cast<size_t>(k) * H;
                for (int32_t i = 0; i < H; ++i) row[i] += d * b.a2[static_cast<size_t>(i)];
            }
            for (int32_t h = 0; h < H; ++h) {
                double d = 0.0;
                for (int32_t k = 0; k < C; ++k)
                    d += W3[static_cast<size_t>(k) * H + h] * b.dlogits[static_cast<size_t>(k)];
                b.dz2[static_cast<size_t>(h)] = b.z2[static_cast<size_t>(h)] > 0.0 ? d : 0.0;
            }
            for (int32_t h = 0; h < H; ++h) {
                const double d = b.dz2[static_cast<size_t>(h)];
                if (d == 0.0) continue;
                gb2[static_cast<size_t>(h)] += d;
                double* row = gW2.data() + static_cast<size_t>(h) * H;
                for (int32_t i = 0; i < H; ++i) row[i] += d * b.a1[static_cast<size_t>(i)];
            }
            for (int32_t h = 0; h < H; ++h) {
                double d = 0.0;
                for (int32_t k = 0; k < H; ++k)
                    d += W2[static_cast<size_t>(k) * H + h] * b.dz2[static_cast<size_t>(k)];
                b.dz1[static_cast<size_t>(h)] = b.z1[static_cast<size_t>(h)] > 0.0 ? d : 0.0;
            }
            for (int32_t h = 0; h < H; ++h) {
                const double d = b.dz1[static_cast<size_t>(h)];
                if (d == 0.0) continue;
                gb1[static_cast<size_t>(h)] += d;
                double* row = gW1.data() + static_cast<size_t>(h) * D;
                for (int32_t i = 0; i < D; ++i) row[i] += d * x[static_cast<size_t>(i)];
            }
        }
    } else {
        const int32_t side = spec.image_side, F = spec.conv_filters, C = spec.num_classes;
        const int32_t co = side - 2, ps = co / 2, feat = F * ps * ps;
        const auto& Wh = weights.layers[2].values;
        auto& gWc = res.grad.layers[0].values;
        auto& gbc = res.grad.layers[1].values;
        auto& gWh = res.grad.layers[2].values;
        auto& gbh = res.grad.layers[3].values;

        CnnBuffers b;
        b.probs.resize(static_cast<size_t>(C));
        b.dlogits.resize(static_cast<size_t>(C));
        b.dpooled.resize(static_cast<size_t>(feat));
        b.dz.resize(static_cast<size_t>(F) * co * co);
        for (int32_t idx : indices) {
            const auto x = data.sample(idx);
            const int32_t y = data.labels[static_cast<size_t>(idx)];
            cnn_forward(spec, weights, x, b, res.activation_hash);
            int32_t argmax = 0;
            res.loss += softmax_ce(b.logits, y, b.probs, argmax);
            if (argmax == y) ++res.correct;

            for (int32_t k = 0; k < C; ++k)
                b.dlogits[static_cast<size_t>(k)] = b.probs[static_cast<size_t>(k)] - (k == y ? 1.0 : 0.0);
            for (int32_t k = 0; k < C; ++k) {
                const double d = b.dlogits[static_cast<size_t>(k)];
                gbh[static_cast<size_t>(k)] += d;
                double* row = gWh.data() + static_cast<size_t>(k) * feat;
                for (int32_t i = 0; i < feat; ++i) row[i] += d * b.pooled[static_cast<size_t>(i)];
            }
            for (int32_t i = 0; i < feat; ++i) {
                double d = 0.0;
                for (int32_t k = 0; k < C; ++k)
                    d += Wh[static_cast<size_t>(k) * feat + i] * b.dlogits[static_cast<size_t>(k)];
                b.dpooled[static_cast<size_t>(i)] = d;
            }
            // Mean pooling spreads each pooled gradient evenly over its 2x2
            // window; the ReLU gate then clips it against the stored z sign.
            for (int32_t f = 0; f < F; ++f)
                for (int32_t q = 0; q < ps; ++q)
                    for (int32_t r = 0; r < ps; ++r) {
                        const double d = 0.25 * b.dpooled[(static_cast<size_t>(f) * ps + q) * ps + r];
                        const size_t base = (static_cast<size_t>(f) * co + 2 * q) * co + 2 * r;
                        b.dz[base] = b.z[base] > 0.0 ? d : 0.0;
                        b.dz[base + 1] = b.z[base + 1] > 0.0 ? d : 0.0;
                        b.dz[base + co] = b.z[base + co] > 0.0 ? d : 0.0;
                        b.dz[base + co + 1] = b.z[base + co + 1] > 0.0 ? d : 0.0;
                    }
            for (int32_t f = 0; f < F; ++f) {
                double db = 0.0;
                double* gk = gWc.data() + static_cast<size_t>(f) * 9;
                for (int32_t i = 0; i < co; ++i)
                    for (int32_t j = 0; j < co; ++j) {
                        const double d = b.dz[(static_cast<size_t>(f) * co + i) * co + j];
                        if (d == 0.0) continue;
                        db += d;
                        for (int32_t u = 0; u < 3; ++u) {
                            const double* xr = x.data() + static_cast<size_t>(i + u) * side + j;
                            gk[u * 3] += d * xr[0];
                            gk[u * 3 + 1] += d * xr[1];
                            gk[u * 3 + 2] += d * xr[2];
                        }
                    }
                gbc[static_cast<size_t>(f)] += db;
            }
        }
    }

    const double inv_n = 1.0 / static_cast<double>(indices.size());
    res.loss *= inv_n;
    res.grad.scale(inv_n);
    return res;
}

EvalResult evaluate(const ModelSpec& spec, const ModelWeights& weights, const DatasetShard& data,
                    std::span<const int32_t> indices) {
    if (data.dim != spec.feature_dim()) throw ShapeMismatch("dataset dim does not match model input");
    if (indices.empty()) throw std::invalid_argument("empty batch");

    EvalResult res;
    res.activation_hash = kFnvOffset;
    if (spec.arch == Architecture::mlp) {
        MlpBuffers b;
        b.probs.resize(static_cast<size_t>(spec.num_classes));
        for (int32_t idx : indices) {
            mlp_forward(spec, weights, data.sample(idx), b, res.activation_hash);
            int32_t argmax = 0;
            res.loss += softmax_ce(b.logits, data.labels[static_cast<size_t>(idx)], b.probs, argmax);
            if (argmax == data.labels[static_cast<size_t>(idx)]) ++res.correct;
        }
    } else {
        CnnBuffers b;
        b.probs.resize(static_cast<size_t>(spec.num_classes));
        for (int32_t idx : indices) {
            cnn_forward(spec, weights, data.sample(idx), b, res.activation_hash);
            int32_t argmax = 0;
            res.loss += softmax_ce(b.logits, data.labels[static_cast<size_t>(idx)], b.probs, argmax);
            if (argmax == data.labels[static_cast<size_t>(idx)]) ++res.correct;
        }
    }
    res.loss /= static_cast<double>(indices.size());
    return res;
}

}  // namespace rsdgc
