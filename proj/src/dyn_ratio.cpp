#include "rsdgc/dyn_ratio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace rsdgc {

double RatioSchedule::density_for(int32_t layer_id) const {
    for (const auto& l : layers)
        if (l.layer_id == layer_id) return l.density;
    throw IndexMismatch("schedule has no layer " + std::to_string(layer_id));
}

int64_t RatioSchedule::total_kept() const {
    int64_t n = 0;
    for (const auto& l : layers) n += l.kept;
    return n;
}

RatioSchedule compute_schedule(const ModelWeights& weights, double global_density, int32_t epoch) {
    if (!(global_density > 0.0 && global_density <= 1.0))
        throw std::invalid_argument("global_density must be in (0, 1]");
    if (weights.layers.empty() || weights.element_count() == 0)
        throw EmptyModel("compute_schedule: model has no weights");

    struct Entry {
        double mag;
        int32_t layer_pos;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<size_t>(weights.element_count()));
    for (size_t li = 0; li < weights.layers.size(); ++li)
        for (double w : weights.layers[li].values)
            entries.push_back({std::fabs(w), static_cast<int32_t>(li)});

    // Entries start in (layer_id, flat index) order, so a stable sort by
    // magnitude gives exactly the mandated tie-break: equal magnitudes rank
    // in ascending (layer_id, flat index).
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.mag > b.mag; });

    const int64_t total = static_cast<int64_t>(entries.size());
    const int64_t budget = std::llround(global_density * static_cast<double>(total));

    std::vector<int64_t> kept_per_layer(weights.layers.size(), 0);
    for (int64_t i = 0; i < budget; ++i)
        ++kept_per_layer[static_cast<size_t>(entries[static_cast<size_t>(i)].layer_pos)];

    RatioSchedule sched;
    sched.global_density = global_density;
    sched.computed_at_epoch = epoch;
    sched.layers.reserve(weights.layers.size());
    for (size_t li = 0; li < weights.layers.size(); ++li) {
        const auto& lt = weights.layers[li];
        RatioSchedule::LayerRatio r;
        r.layer_id = lt.spec.layer_id;
        r.weight_count = static_cast<int64_t>(lt.values.size());
        r.kept = kept_per_layer[li];
        r.density = static_cast<double>(r.kept) / static_cast<double>(r.weight_count);
        sched.layers.push_back(r);
    }
    return sched;
}

RatioSchedule uniform_schedule(std::span<const LayerSpec> specs, double density, int32_t epoch) {
    RatioSchedule sched;
    sched.global_density = density;
    sched.computed_at_epoch = epoch;
    sched.layers.reserve(specs.size());
    for (const auto& s : specs) {
        RatioSchedule::LayerRatio r;
        r.layer_id = s.layer_id;
        r.weight_count = s.element_count();
        r.density = density;
        r.kept = std::llround(density * static_cast<double>(r.weight_count));
        sched.layers.push_back(r);
    }
    return sched;
}

bool should_recompute(int32_t epoch, const RecomputePolicy& policy) {
    if (policy.period_epochs < 1) throw std::invalid_argument("period_epochs must be >= 1");
    return epoch % policy.period_epochs == 0;
}

void dump_schedule_csv(std::ostream& os, const RatioSchedule& schedule, bool header) {
    if (header) os << "epoch,layer_id,weight_count,kept,density\n";
    char buf[64];
    for (const auto& l : schedule.layers) {
        std::snprintf(buf, sizeof buf, "%.10g", l.density);
        os << schedule.computed_at_epoch << ',' << l.layer_id << ',' << l.weight_count << ','
           << l.kept << ',' << buf << '\n';
    }
}

}  // namespace rsdgc
