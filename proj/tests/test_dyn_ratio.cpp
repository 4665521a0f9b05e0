#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "rsdgc/dyn_ratio.hpp"
#include "rsdgc/grad_core.hpp"
#include "rsdgc/rng.hpp"

using namespace rsdgc;

namespace {

// Independent re-derivation of the per-layer keep counts: explicit three-key
// sort of (magnitude desc, layer asc, flat asc) over every weight, then count
// how many of the first round(density * total) land in each layer.
std::vector<int64_t> oracle_kept_per_layer(const ModelWeights& w, double density) {
    struct Key {
        double mag;
        size_t layer;
        size_t flat;
    };
    std::vector<Key> keys;
    for (size_t li = 0; li < w.layers.size(); ++li)
        for (size_t f = 0; f < w.layers[li].values.size(); ++f)
            keys.push_back({std::fabs(w.layers[li].values[f]), li, f});
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.mag != b.mag) return a.mag > b.mag;
        if (a.layer != b.layer) return a.layer < b.layer;
        return a.flat < b.flat;
    });

    const auto budget =
        static_cast<size_t>(std::llround(density * static_cast<double>(keys.size())));
    std::vector<int64_t> kept(w.layers.size(), 0);
    for (size_t i = 0; i < budget; ++i) ++kept[keys[i].layer];
    return kept;
}

ModelWeights random_model(std::mt19937_64& eng) {
    const size_t num_layers = 2 + uniform_below(eng, 9);
    std::vector<LayerSpec> specs;
    for (size_t li = 0; li < num_layers; ++li) {
        const int32_t id = static_cast<int32_t>(li + 1);
        if (uniform_below(eng, 3) == 0) {
            specs.push_back({id, LayerKind::bias, {static_cast<int64_t>(1 + uniform_below(eng, 24))}, 3});
        } else {
            specs.push_back({id, LayerKind::dense,
                             {static_cast<int64_t>(1 + uniform_below(eng, 12)),
                              static_cast<int64_t>(1 + uniform_below(eng, 12))},
                             3});
        }
    }
    ModelWeights w = ModelWeights::zeros_like(specs);
    for (auto& layer : w.layers)
        for (double& v : layer.values) v = normal01(eng);
    return w;
}

ModelWeights two_layer_example() {
    std::vector<LayerSpec> specs = {{1, LayerKind::bias, {2}, 3}, {2, LayerKind::bias, {3}, 3}};
    ModelWeights w = ModelWeights::zeros_like(specs);
    w.layers[0].values = {0.5, 0.4};
    w.layers[1].values = {0.3, 0.2, 0.1};
    return w;
}

}  // namespace

TEST_SUITE("dyn_ratio") {

TEST_CASE("two-layer cut puts the whole budget in the stronger layer") {
    const auto sched = compute_schedule(two_layer_example(), 0.4, 0);
    REQUIRE(sched.layers.size() == 2);
    CHECK(sched.layers[0].kept == 2);
    CHECK(sched.layers[0].density == 1.0);
    CHECK(sched.layers[1].kept == 0);
    CHECK(sched.layers[1].density == 0.0);
    CHECK(sched.total_kept() == 2);
    CHECK(sched.global_density == 0.4);
    CHECK(sched.computed_at_epoch == 0);
}

TEST_CASE("full density keeps every weight in every layer") {
    auto eng = make_engine(3001);
    const ModelWeights w = random_model(eng);
    const auto sched = compute_schedule(w, 1.0, 2);
    for (size_t li = 0; li < w.layers.size(); ++li) {
        CHECK(sched.layers[li].kept == static_cast<int64_t>(w.layers[li].values.size()));
        CHECK(sched.layers[li].density == 1.0);
    }
    CHECK(sched.computed_at_epoch == 2);
}

TEST_CASE("all-equal weights resolve by layer then flat index") {
    std::vector<LayerSpec> specs = {{1, LayerKind::bias, {2}, 3}, {2, LayerKind::bias, {3}, 3}};
    ModelWeights w = ModelWeights::zeros_like(specs);
    for (auto& layer : w.layers) std::fill(layer.values.begin(), layer.values.end(), 0.7);
    const auto sched = compute_schedule(w, 0.4, 0);
    CHECK(sched.total_kept() == 2);
    CHECK(sched.layers[0].kept == 2);
    CHECK(sched.layers[1].kept == 0);
}

TEST_CASE("budget equals the rounded global target exactly") {
    auto eng = make_engine(3002);
    const double densities[] = {0.001, 0.01, 0.1, 0.5};
    for (int trial = 0; trial < 120; ++trial) {
        const ModelWeights w = random_model(eng);
        const double total = static_cast<double>(w.element_count());
        for (double d : densities) {
            const auto sched = compute_schedule(w, d, trial);
            CHECK(sched.total_kept() == std::llround(d * total));
        }
    }
}

TEST_CASE("schedule matches the explicit three-key sort oracle") {
    auto eng = make_engine(3003);
    const double densities[] = {0.001, 0.01, 0.1, 0.5, 1.0};
    for (int trial = 0; trial < 40; ++trial) {
        const ModelWeights w = random_model(eng);
        for (double d : densities) {
            const auto sched = compute_schedule(w, d, 0);
            const auto want = oracle_kept_per_layer(w, d);
            REQUIRE(sched.layers.size() == want.size());
            for (size_t li = 0; li < want.size(); ++li) {
                CHECK(sched.layers[li].kept == want[li]);
                CHECK(sched.layers[li].density ==
                      static_cast<double>(want[li]) /
                          static_cast<double>(w.layers[li].values.size()));
            }
        }
    }
}

TEST_CASE("raising the global density never shrinks a layer's share") {
    auto eng = make_engine(3004);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelWeights w = random_model(eng);
        const double ladder[] = {0.05, 0.1, 0.25, 0.5, 0.75, 1.0};
        auto prev = compute_schedule(w, ladder[0], 0);
        for (size_t i = 1; i < std::size(ladder); ++i) {
            const auto next = compute_schedule(w, ladder[i], 0);
            for (size_t li = 0; li < prev.layers.size(); ++li)
                CHECK(next.layers[li].kept >= prev.layers[li].kept);
            prev = next;
        }
    }
}

TEST_CASE("permuting weights inside one layer leaves the shares alone") {
    auto eng = make_engine(3005);
    ModelWeights w = random_model(eng);
    const auto before = compute_schedule(w, 0.3, 0);
    for (auto& layer : w.layers) shuffle(layer.values, eng);
    const auto after = compute_schedule(w, 0.3, 0);
    for (size_t li = 0; li < w.layers.size(); ++li) {
        CHECK(after.layers[li].kept == before.layers[li].kept);
        CHECK(after.layers[li].density == before.layers[li].density);
    }
}

TEST_CASE("positive rescaling of all weights keeps the same cut") {
    auto eng = make_engine(3006);
    const ModelWeights w = random_model(eng);
    const auto base = compute_schedule(w, 0.3, 0);
    for (double c : {0.25, 4.0, 3.7}) {
        ModelWeights scaled = w;
        scaled.scale(c);
        const auto sched = compute_schedule(scaled, 0.3, 0);
        for (size_t li = 0; li < w.layers.size(); ++li)
            CHECK(sched.layers[li].kept == base.layers[li].kept);
    }
}

TEST_CASE("density_for answers by layer id and rejects strangers") {
    const auto sched = compute_schedule(two_layer_example(), 0.4, 0);
    CHECK(sched.density_for(1) == 1.0);
    CHECK(sched.density_for(2) == 0.0);
    CHECK_THROWS_AS(sched.density_for(7), IndexMismatch);
}

TEST_CASE("uniform schedule gives every layer the same density") {
    std::vector<LayerSpec> specs = {{1, LayerKind::dense, {4, 5}, 3},
                                    {2, LayerKind::bias, {4}, 3}};
    const auto sched = uniform_schedule(specs, 0.25, 3);
    REQUIRE(sched.layers.size() == 2);
    CHECK(sched.global_density == 0.25);
    CHECK(sched.computed_at_epoch == 3);
    CHECK(sched.layers[0].density == 0.25);
    CHECK(sched.layers[0].kept == 5);  // round(0.25 * 20)
    CHECK(sched.layers[1].density == 0.25);
    CHECK(sched.layers[1].kept == 1);  // round(0.25 * 4)
}

TEST_CASE("compute_schedule rejects empty models and bad densities") {
    CHECK_THROWS_AS(compute_schedule(ModelWeights{}, 0.5, 0), EmptyModel);
    const ModelWeights w = two_layer_example();
    CHECK_THROWS_AS(compute_schedule(w, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(compute_schedule(w, -0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(compute_schedule(w, 1.5, 0), std::invalid_argument);
}

TEST_CASE("recompute fires on multiples of the period") {
    for (int32_t epoch : {0, 1, 2, 7}) CHECK(should_recompute(epoch, {1}));
    CHECK(should_recompute(0, {5}));
    CHECK_FALSE(should_recompute(3, {5}));
    CHECK(should_recompute(10, {5}));
    CHECK_THROWS_AS(should_recompute(0, {0}), std::invalid_argument);
}

TEST_CASE("schedule dump is one csv row per layer") {
    const auto sched = compute_schedule(two_layer_example(), 0.4, 2);
    std::ostringstream os;
    dump_schedule_csv(os, sched, true);
    CHECK(os.str() ==
          "epoch,layer_id,weight_count,kept,density\n"
          "2,1,2,2,1\n"
          "2,2,3,0,0\n");
}

}  // TEST_SUITE
