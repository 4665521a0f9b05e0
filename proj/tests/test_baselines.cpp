#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "rsdgc/baselines.hpp"
#include "rsdgc/dyn_ratio.hpp"
#include "rsdgc/grad_core.hpp"
#include "rsdgc/nsi.hpp"
#include "rsdgc/rng.hpp"

using namespace rsdgc;

namespace {

// Flat indices actually kept, recovered through the unit partition so the
// comparison is independent of the patch ordering convention.
std::set<int64_t> kept_flats(const SparseLayerGradient& sl, const PatchPartition& unit) {
    std::set<int64_t> flats;
    for (const auto& kp : sl.kept)
        flats.insert(unit.patch_element_indices[static_cast<size_t>(kp.patch_index)][0]);
    return flats;
}

// Full-sort selection oracle: |g| descending, lower flat index on ties.
std::set<int64_t> oracle_topk_flats(const std::vector<double>& g, double density) {
    std::vector<int64_t> order(g.size());
    for (size_t i = 0; i < g.size(); ++i) order[i] = static_cast<int64_t>(i);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        const double ma = std::fabs(g[static_cast<size_t>(a)]);
        const double mb = std::fabs(g[static_cast<size_t>(b)]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    size_t k = 0;
    if (density > 0.0)
        k = std::min(g.size(),
                     static_cast<size_t>(std::ceil(density * static_cast<double>(g.size()))));
    return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k)};
}

ModelGradient three_element_layer() {
    ModelGradient mg = ModelGradient::zeros_like(std::vector<LayerSpec>{{1, LayerKind::bias, {3}, 1}});
    mg.layers[0].values = {3.0, -5.0, 1.0};
    return mg;
}

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("compressor names round trip") {
    for (auto kind : {CompressorKind::rs_dgc, CompressorKind::top_k, CompressorKind::random_k,
                      CompressorKind::dgc, CompressorKind::sign_1bit, CompressorKind::dense})
        CHECK(compressor_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(compressor_from_string("qsgd"), ConfigError);
}

TEST_CASE("top-k keeps the single largest magnitude") {
    const ModelGradient mg = three_element_layer();
    const auto units = unit_partitions(std::vector<LayerSpec>{mg.layers[0].spec});
    const auto out = topk_sparsify(mg, units, 0.3, 5);  // ceil(0.3 * 3) = 1
    CHECK(out.iteration == 5);
    REQUIRE(out.layers.size() == 1);
    REQUIRE(out.layers[0].kept.size() == 1);
    CHECK(out.layers[0].kept[0].patch_index == 1);
    CHECK(out.layers[0].kept[0].values == std::vector<double>{-5.0});
}

TEST_CASE("top-k at density one is the identity through densify") {
    const ModelGradient mg = three_element_layer();
    const std::vector<LayerSpec> specs = {mg.layers[0].spec};
    const auto units = unit_partitions(specs);
    const auto dense = densify(topk_sparsify(mg, units, 1.0, 0), units);
    CHECK(dense.layers[0].values == mg.layers[0].values);
}

TEST_CASE("equal magnitudes keep the lowest flat indices") {
    ModelGradient mg = ModelGradient::zeros_like(std::vector<LayerSpec>{{1, LayerKind::bias, {4}, 1}});
    mg.layers[0].values = {0.5, 0.5, 0.5, 0.5};
    const auto units = unit_partitions(std::vector<LayerSpec>{mg.layers[0].spec});
    const auto out = topk_sparsify(mg, units, 0.5, 0);
    CHECK(kept_flats(out.layers[0], units[0]) == std::set<int64_t>{0, 1});
}

TEST_CASE("top-k matches the full-sort oracle across layer kinds") {
    auto eng = make_engine(5001);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<LayerSpec> specs;
        if (trial % 3 == 0) {
            specs.push_back({1, LayerKind::conv,
                             {static_cast<int64_t>(1 + uniform_below(eng, 4)),
                              static_cast<int64_t>(1 + uniform_below(eng, 4)), 3, 3},
                             1});
        } else {
            specs.push_back({1, LayerKind::dense,
                             {static_cast<int64_t>(1 + uniform_below(eng, 32)),
                              static_cast<int64_t>(1 + uniform_below(eng, 32))},
                             1});
        }
        ModelGradient mg = ModelGradient::zeros_like(specs);
        for (double& v : mg.layers[0].values) v = normal01(eng);
        const auto units = unit_partitions(specs);
        for (double d : {0.0, 0.0625, 0.25, 1.0}) {
            const auto out = topk_sparsify(mg, units, d, 0);
            CHECK(kept_flats(out.layers[0], units[0]) == oracle_topk_flats(mg.layers[0].values, d));
        }
    }
}

TEST_CASE("top-k rejects non-finite gradients and bad densities") {
    ModelGradient mg = three_element_layer();
    const auto units = unit_partitions(std::vector<LayerSpec>{mg.layers[0].spec});
    mg.layers[0].values[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(topk_sparsify(mg, units, 0.5, 0), NonFinite);
    CHECK_THROWS_AS(topk_sparsify(three_element_layer(), units, 1.5, 0), std::invalid_argument);
}

TEST_CASE("random-k replays exactly and keeps distinct indices") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::dense, {8, 8}, 1}};
    ModelGradient mg = ModelGradient::zeros_like(specs);
    auto eng = make_engine(5002);
    for (double& v : mg.layers[0].values) v = normal01(eng);
    const auto units = unit_partitions(specs);

    const auto a = randomk_sparsify(mg, units, 0.25, 99, 3);
    const auto b = randomk_sparsify(mg, units, 0.25, 99, 3);
    CHECK(a.layers[0] == b.layers[0]);
    CHECK(a.iteration == 3);

    const auto flats = kept_flats(a.layers[0], units[0]);
    CHECK(flats.size() == 16);  // ceil(0.25 * 64), distinct by set construction
    for (int64_t f : flats) {
        CHECK(f >= 0);
        CHECK(f < 64);
    }

    CHECK(randomk_sparsify(mg, units, 0.0, 99, 0).layers[0].kept.empty());
    CHECK(randomk_sparsify(mg, units, 1.0, 99, 0).layers[0].kept.size() == 64);
}

TEST_CASE("random-k picks each index at the uniform rate") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {10}, 1}};
    ModelGradient mg = ModelGradient::zeros_like(specs);
    for (size_t i = 0; i < 10; ++i) mg.layers[0].values[i] = static_cast<double>(i);
    const auto units = unit_partitions(specs);

    std::vector<int> counts(10, 0);
    for (uint64_t seed = 0; seed < 10000; ++seed) {
        const auto out = randomk_sparsify(mg, units, 0.1, seed, 0);  // k = 1
        REQUIRE(out.layers[0].kept.size() == 1);
        ++counts[static_cast<size_t>(out.layers[0].kept[0].patch_index)];
    }
    for (int c : counts) {
        CHECK(c >= 800);
        CHECK(c <= 1200);
    }
}

TEST_CASE("random-k draws separate streams per layer") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {100}, 1},
                                          {2, LayerKind::bias, {100}, 1}};
    ModelGradient mg = ModelGradient::zeros_like(specs);
    const auto units = unit_partitions(specs);
    bool any_differ = false;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        const auto out = randomk_sparsify(mg, units, 0.01, seed, 0);
        if (out.layers[0].kept[0].patch_index != out.layers[1].kept[0].patch_index)
            any_differ = true;
    }
    CHECK(any_differ);
}

TEST_CASE("sign quantization scales by the mean magnitude") {
    ModelGradient mg = ModelGradient::zeros_like(std::vector<LayerSpec>{{3, LayerKind::bias, {2}, 1}});
    mg.layers[0].values = {0.5, -0.2};
    const auto q = sign_quantize(mg, 7);
    CHECK(q.iteration == 7);
    REQUIRE(q.layers.size() == 1);
    CHECK(q.layers[0].layer_id == 3);
    CHECK(q.layers[0].scale == (0.5 + 0.2) / 2.0);
    CHECK(q.layers[0].bit_count == 2);
    REQUIRE(q.layers[0].sign_bits.size() == 1);
    CHECK(q.layers[0].sign_bits[0] == 0x01);  // bit 0 set (+), bit 1 clear (-)

    const auto back = dequantize(q, std::vector<LayerSpec>{{3, LayerKind::bias, {2}, 1}});
    CHECK(back.layers[0].values[0] == q.layers[0].scale);
    CHECK(back.layers[0].values[1] == -q.layers[0].scale);
}

TEST_CASE("zero gradients quantize to plus one at zero scale") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {3}, 1}};
    const auto q = sign_quantize(ModelGradient::zeros_like(specs), 0);
    CHECK(q.layers[0].scale == 0.0);
    CHECK(q.layers[0].sign_bits[0] == 0x07);  // all three map to +1
    const auto back = dequantize(q, specs);
    for (double v : back.layers[0].values) CHECK(v == 0.0);
}

TEST_CASE("constant positive layer survives the round trip exactly") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {3}, 1}};
    ModelGradient mg = ModelGradient::zeros_like(specs);
    std::fill(mg.layers[0].values.begin(), mg.layers[0].values.end(), 0.7);
    const auto q = sign_quantize(mg, 0);
    CHECK(q.layers[0].scale == doctest::Approx(0.7).epsilon(1e-15));
    const auto back = dequantize(q, specs);
    for (double v : back.layers[0].values) CHECK(v == q.layers[0].scale);
}

TEST_CASE("quantized wire layout is id, scale, count, packed bits") {
    ModelGradient mg = ModelGradient::zeros_like(std::vector<LayerSpec>{{3, LayerKind::bias, {2}, 1}});
    mg.layers[0].values = {0.5, -0.2};
    const auto q = sign_quantize(mg, 0);
    CHECK(wire_size_bytes(q) == 13);  // 8 header + 4 scale + ceil(2/8)

    const auto bytes = encode_wire(q);
    REQUIRE(bytes.size() == 13);
    CHECK(bytes[0] == 0x03);  // layer_id 3, little-endian
    CHECK(bytes[1] == 0x00);
    CHECK(bytes[2] == 0x00);
    CHECK(bytes[3] == 0x00);
    float scale;
    std::memcpy(&scale, bytes.data() + 4, 4);
    CHECK(scale == static_cast<float>(q.layers[0].scale));
    CHECK(bytes[8] == 0x02);  // bit_count 2, little-endian
    CHECK(bytes[9] == 0x00);
    CHECK(bytes[10] == 0x00);
    CHECK(bytes[11] == 0x00);
    CHECK(bytes[12] == 0x01);  // LSB-first sign bits

    // Per-layer bytes: 8 + 4 + ceil(n/8), summed across layers.
    const std::vector<LayerSpec> wide = {{1, LayerKind::bias, {9}, 1},
                                         {2, LayerKind::bias, {8}, 1}};
    const auto qw = sign_quantize(ModelGradient::zeros_like(wide), 0);
    CHECK(wire_size_bytes(qw) == (8 + 4 + 2) + (8 + 4 + 1));
}

TEST_CASE("dequantize validates layer identity and width") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {3}, 1}};
    auto q = sign_quantize(ModelGradient::zeros_like(specs), 0);
    CHECK_THROWS_AS(dequantize(q, std::vector<LayerSpec>{{2, LayerKind::bias, {3}, 1}}),
                    IndexMismatch);
    CHECK_THROWS_AS(dequantize(q, std::vector<LayerSpec>{{1, LayerKind::bias, {4}, 1}}),
                    ShapeMismatch);
    q.layers.clear();
    CHECK_THROWS_AS(dequantize(q, specs), ShapeMismatch);
}

TEST_CASE("momentum top-k transmits the largest residual and clears it") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {2}, 1}};
    const auto units = unit_partitions(specs);
    auto state = AccumulatorState::make(0, specs, 0.9);
    ModelGradient g = ModelGradient::zeros_like(specs);
    g.layers[0].values = {2.0, -3.0};

    const auto out = dgc_sparsify(state, g, units, 0.5, 0);  // k = 1
    REQUIRE(out.layers[0].kept.size() == 1);
    CHECK(out.layers[0].kept[0].patch_index == 1);
    CHECK(out.layers[0].kept[0].values == std::vector<double>{-3.0});
    CHECK(state.residual_buf.layers[0].values == std::vector<double>{2.0, 0.0});
    CHECK(state.momentum_buf.layers[0].values == std::vector<double>{2.0, -3.0});
}

TEST_CASE("momentum top-k at full density with momentum off is dense SGD") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::dense, {3, 4}, 1}};
    const auto units = unit_partitions(specs);
    auto state = AccumulatorState::make(0, specs, 0.0);
    ModelGradient g = ModelGradient::zeros_like(specs);
    auto eng = make_engine(5003);
    for (double& v : g.layers[0].values) v = normal01(eng);

    const auto dense = densify(dgc_sparsify(state, g, units, 1.0, 0), units);
    CHECK(dense.layers[0].values == g.layers[0].values);
}

TEST_CASE("a single-element model always transmits its element") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::bias, {1}, 1}};
    const auto units = unit_partitions(specs);
    auto state = AccumulatorState::make(0, specs, 0.9);
    for (int step = 0; step < 5; ++step) {
        ModelGradient g = ModelGradient::zeros_like(specs);
        g.layers[0].values[0] = 0.1 * (step + 1);
        const auto out = dgc_sparsify(state, g, units, 0.4, step);
        CHECK(out.layers[0].kept.size() == 1);
        CHECK(state.residual_buf.layers[0].values[0] == 0.0);
    }
}

TEST_CASE("momentum top-k coincides with rs_dgc at unit patches and alpha one") {
    const std::vector<LayerSpec> specs = {{1, LayerKind::dense, {5, 7}, 1},
                                          {2, LayerKind::bias, {5}, 1},
                                          {3, LayerKind::conv, {2, 3, 3, 3}, 1}};
    const auto units = unit_partitions(specs);
    const auto parts = build_partitions(specs);
    auto dgc_state = AccumulatorState::make(0, specs, 0.9);
    auto rs_state = AccumulatorState::make(0, specs, 0.9);
    const auto schedule = uniform_schedule(specs, 0.25, 0);

    auto eng = make_engine(5004);
    for (int step = 0; step < 10; ++step) {
        ModelGradient g = ModelGradient::zeros_like(specs);
        for (auto& layer : g.layers)
            for (double& v : layer.values) v = normal01(eng);

        const auto via_dgc = dgc_sparsify(dgc_state, g, units, 0.25, step);

        const auto v = accumulate(rs_state, g);
        const auto via_rs = sparsify_model(v, parts, schedule, {1.0, 1}, step);
        commit_transmitted(rs_state, via_rs, parts);

        REQUIRE(via_dgc.layers.size() == via_rs.layers.size());
        for (size_t li = 0; li < specs.size(); ++li) {
            CHECK(kept_flats(via_dgc.layers[li], units[li]) ==
                  kept_flats(via_rs.layers[li], parts[li]));
            CHECK(via_dgc.layers[li] == via_rs.layers[li]);
        }
    }
}

}  // TEST_SUITE
