#include "rsdgc/nsi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsdgc {

void NsiConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
    if (patch_size < 1) throw std::invalid_argument("patch_size must be >= 1");
}

std::vector<PatchScore> score_patches(const LayerTensor& grad, const PatchPartition& part,
                                      const NsiConfig& cfg) {
    cfg.validate();
    if (static_cast<int64_t>(grad.values.size()) != part.spec.element_count())
        throw ShapeMismatch("score_patches: gradient size does not match partition");
    if (!grad.all_finite())
        throw NonFinite("score_patches: non-finite gradient in layer " +
                        std::to_string(grad.spec.layer_id));

    std::vector<PatchScore> scores;
    scores.reserve(static_cast<size_t>(part.num_patches));
    for (int64_t pi = 0; pi < part.num_patches; ++pi) {
        const auto& idx = part.patch_element_indices[static_cast<size_t>(pi)];
        const double n = static_cast<double>(idx.size());
        double sum_abs = 0.0, sum = 0.0;
        for (int64_t f : idx) {
            const double v = grad.values[static_cast<size_t>(f)];
            sum_abs += std::fabs(v);
            sum += v;
        }
        const double mean_abs = sum_abs / n;
        const double mean = sum / n;
        double var = 0.0;
        for (int64_t f : idx) {
            const double d = grad.values[static_cast<size_t>(f)] - mean;
            var += d * d;
        }
        // Population variance over the true element count.
        var /= n;
        const double sd = std::sqrt(var);
        scores.push_back({pi, mean_abs, sd, cfg.alpha * mean_abs + (1.0 - cfg.alpha) * sd});
    }
    return scores;
}

int64_t keep_count(const PatchPartition& part, double density) {
    if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in [0, 1]");
    if (density == 0.0) return 0;
    if (density == 1.0) return part.num_patches;  // identity round trip regardless of edge patches

    const double p2 = static_cast<double>(part.spec.patch_size) * static_cast<double>(part.spec.patch_size);
    const double equivalent = static_cast<double>(part.spec.element_count()) / p2;
    double x = equivalent * density;
    // Guard the ceil against values that land a hair above an integer from
    // rounding; budgets here are rationals whose true value is never inside
    // (n, n + 1e-9].
    const double r = x - std::floor(x);
    int64_t k = r > 0.0 && r < 1e-9 ? static_cast<int64_t>(std::floor(x))
                                    : static_cast<int64_t>(std::ceil(x));
    if (k < 1) k = 1;  // any positive density transmits something
    return std::min(k, part.num_patches);
}

SparseLayerGradient sparsify_layer(const LayerTensor& grad, const PatchPartition& part,
                                   const NsiConfig& cfg, double density) {
    const auto scores = score_patches(grad, part, cfg);
    const int64_t k = keep_count(part, density);

    std::vector<int64_t> order(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) order[i] = static_cast<int64_t>(i);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        const double sa = scores[static_cast<size_t>(a)].nsi;
        const double sb = scores[static_cast<size_t>(b)].nsi;
        if (sa != sb) return sa > sb;
        return a < b;  // equal scores: keep the lower patch index
    });
    order.resize(static_cast<size_t>(k));
    std::sort(order.begin(), order.end());

    SparseLayerGradient out;
    out.layer_id = grad.spec.layer_id;
    out.kept.reserve(order.size());
    for (int64_t pi : order) {
        SparseLayerGradient::KeptPatch kp;
        kp.patch_index = pi;
        const auto& idx = part.patch_element_indices[static_cast<size_t>(pi)];
        kp.values.reserve(idx.size());
        for (int64_t f : idx) kp.values.push_back(grad.values[static_cast<size_t>(f)]);
        out.kept.push_back(std::move(kp));
    }
    return out;
}

SparseModelGradient sparsify_model(const ModelGradient& grad, std::span<const PatchPartition> partitions,
                                   const RatioSchedule& schedule, const NsiConfig& cfg, int64_t iteration) {
    if (grad.layers.size() != partitions.size())
        throw ShapeMismatch("sparsify_model: layer count does not match partitions");

    SparseModelGradient out;
    out.iteration = iteration;
    out.layers.reserve(grad.layers.size());
    for (size_t li = 0; li < grad.layers.size(); ++li) {
        const double density = schedule.density_for(grad.layers[li].spec.layer_id);
        out.layers.push_back(sparsify_layer(grad.layers[li], partitions[li], cfg, density));
    }
    return out;
}

}  // namespace rsdgc
