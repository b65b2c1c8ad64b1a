#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "prunekit/errors.hpp"
#include "prunekit/model_graph.hpp"
#include "prunekit/nin.hpp"
#include "test_helpers.hpp"

using namespace prunekit;
namespace fs = std::filesystem;

namespace {

ModelGraph toy_two_conv(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LayerSpec> layers;
    std::map<std::string, ConvWeights> weights;

    LayerSpec c1;
    c1.name = "c1";
    c1.kind = LayerKind::conv;
    c1.in_channels = 2;
    c1.out_channels = 3;
    c1.kernel_size = 3;
    c1.stride = 1;
    c1.pad = 1;
    layers.push_back(c1);
    weights["c1"] = {pktest::random_tensor(rng, {3, 2, 3, 3}), {0.1f, -0.2f, 0.3f}};

    LayerSpec r;
    r.name = "r1";
    r.kind = LayerKind::relu;
    layers.push_back(r);

    LayerSpec c2 = c1;
    c2.name = "c2";
    c2.in_channels = 3;
    c2.out_channels = 2;
    c2.kernel_size = 1;
    c2.pad = 0;
    layers.push_back(c2);
    weights["c2"] = {pktest::random_tensor(rng, {2, 3, 1, 1}), {0.0f, 0.0f}};

    ModelGraph g({2, 4, 4}, std::move(layers), std::move(weights));
    g.validate();
    return g;
}

}  // namespace

TEST_CASE("save/load round-trips bit-exactly") {
    const fs::path dir = fs::temp_directory_path() / "prunekit_mg_rt";
    fs::create_directories(dir);
    ModelGraph g = toy_two_conv(3);
    const std::string path = (dir / "toy.json").string();
    save_model(g, path);
    ModelGraph back = load_model(path);

    CHECK(back.input_dims() == g.input_dims());
    REQUIRE(back.layers().size() == g.layers().size());
    for (const auto& [name, w] : g.weights()) {
        const auto& bw = back.conv_weights(name);
        REQUIRE(bw.kernel.dims() == w.kernel.dims());
        CHECK(std::memcmp(bw.kernel.data(), w.kernel.data(), w.kernel.size() * 4) == 0);
        CHECK(std::memcmp(bw.bias.data(), w.bias.data(), w.bias.size() * 4) == 0);
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest referencing a missing blob fails cleanly") {
    const fs::path dir = fs::temp_directory_path() / "prunekit_mg_noblob";
    fs::create_directories(dir);
    ModelGraph g = toy_two_conv(4);
    const std::string path = (dir / "toy.json").string();
    save_model(g, path);
    fs::remove(blob_path_for(path));
    CHECK_THROWS_AS(load_model(path), format_error);
    fs::remove_all(dir);
}

TEST_CASE("out-of-bounds weight offsets are rejected") {
    const fs::path dir = fs::temp_directory_path() / "prunekit_mg_oob";
    fs::create_directories(dir);
    ModelGraph g = toy_two_conv(5);
    const std::string path = (dir / "toy.json").string();
    save_model(g, path);
    fs::resize_file(blob_path_for(path), 16);
    CHECK_THROWS_AS(load_model(path), format_error);
    fs::remove_all(dir);
}

TEST_CASE("NIN-style graph validates with block input sizes 32/16/8") {
    ModelGraph g = make_nin_style_graph(1);
    CHECK(g.input_shape_of("conv1")[1] == 32);
    CHECK(g.input_shape_of("conv2")[1] == 16);
    CHECK(g.input_shape_of("conv3")[1] == 8);
    CHECK(g.layer("conv1").out_channels == 192);
    CHECK(g.layer("conv2").out_channels == 192);
    CHECK(g.layer("conv3").out_channels == 192);
    // final score vector covers 100 classes
    const auto shapes = g.propagate_shapes();
    CHECK(shapes.back() == Shape3{100, 1, 1});
}

TEST_CASE("forward: single relu with capture") {
    std::vector<LayerSpec> layers;
    LayerSpec r;
    r.name = "r";
    r.kind = LayerKind::relu;
    layers.push_back(r);
    ModelGraph g({1, 1, 2}, std::move(layers), {});
    Tensor in({1, 1, 2}, {-1.0f, 2.0f});
    auto res = forward(g, in, {"r"});
    CHECK(res.output[0] == 0.0f);
    CHECK(res.output[1] == 2.0f);
    CHECK(res.captured.at("r")[0] == 0.0f);
    CHECK(res.captured.at("r")[1] == 2.0f);
}

TEST_CASE("forward: identity 1x1 conv is the identity") {
    std::vector<LayerSpec> layers;
    LayerSpec c;
    c.name = "id";
    c.kind = LayerKind::conv;
    c.in_channels = 2;
    c.out_channels = 2;
    c.kernel_size = 1;
    layers.push_back(c);
    Tensor k({2, 2, 1, 1});
    k.at4(0, 0, 0, 0) = 1.0f;
    k.at4(1, 1, 0, 0) = 1.0f;
    std::map<std::string, ConvWeights> weights;
    weights["id"] = {k, {0.0f, 0.0f}};
    ModelGraph g({2, 3, 3}, std::move(layers), std::move(weights));

    std::mt19937_64 rng(2);
    Tensor in = pktest::random_tensor(rng, {2, 3, 3});
    auto res = forward(g, in);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(res.output[i] == in[i]);
}

TEST_CASE("inserting an identity 1x1 conv leaves outputs unchanged") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        auto chain = pktest::random_conv_chain(rng, 2, 4, 3, 6);
        // same chain with an identity 1x1 conv spliced between the blocks
        auto layers = chain.graph.layers();
        auto weights = chain.graph.weights();
        LayerSpec id;
        id.name = "ident";
        id.kind = LayerKind::conv;
        id.in_channels = 4;
        id.out_channels = 4;
        id.kernel_size = 1;
        Tensor k({4, 4, 1, 1});
        for (std::size_t i = 0; i < 4; ++i) k.at4(i, i, 0, 0) = 1.0f;
        weights["ident"] = {k, std::vector<float>(4, 0.0f)};
        layers.insert(layers.begin() + 2, id);
        ModelGraph with_id(chain.graph.input_dims(), std::move(layers), std::move(weights));
        with_id.validate();

        Tensor in = pktest::random_tensor(rng, {2, 6, 6});
        Tensor a = forward(chain.graph, in).output;
        Tensor b = forward(with_id, in).output;
        CHECK(pktest::rel_tensor_diff(a, b) < 1e-6);
    }
}

TEST_CASE("symbolic shapes agree with actual forward shapes") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t c_in = 1 + rng() % 3, c_mid = 1 + rng() % 5,
                          c_out = 1 + rng() % 4, hw = 4 + rng() % 5;
        auto chain = pktest::random_conv_chain(rng, c_in, c_mid, c_out, hw);
        const auto shapes = chain.graph.propagate_shapes();
        Tensor in = pktest::random_tensor(rng, {c_in, hw, hw});
        const Tensor out = forward(chain.graph, in).output;
        CHECK(out.dims() ==
              std::vector<std::size_t>{shapes.back()[0], shapes.back()[1], shapes.back()[2]});
    }
}

TEST_CASE("unknown capture name") {
    ModelGraph g = toy_two_conv(9);
    Tensor in({2, 4, 4});
    CHECK_THROWS_AS(forward(g, in, {"nope"}), lookup_error);
}

TEST_CASE("validation rejects orphan weights and bad chains") {
    std::mt19937_64 rng(10);
    {
        std::vector<LayerSpec> layers;
        LayerSpec r;
        r.name = "r";
        r.kind = LayerKind::relu;
        layers.push_back(r);
        std::map<std::string, ConvWeights> weights;
        weights["ghost"] = {pktest::random_tensor(rng, {1, 1, 1, 1}), {0.0f}};
        ModelGraph g({1, 2, 2}, std::move(layers), std::move(weights));
        CHECK_THROWS_AS(g.validate(), validation_error);
    }
    {
        // channel-incompatible conv -> conv
        std::vector<LayerSpec> layers;
        LayerSpec c1;
        c1.name = "c1";
        c1.kind = LayerKind::conv;
        c1.in_channels = 1;
        c1.out_channels = 2;
        c1.kernel_size = 1;
        LayerSpec c2 = c1;
        c2.name = "c2";
        c2.in_channels = 3;  // producer has 2
        layers = {c1, c2};
        std::map<std::string, ConvWeights> weights;
        weights["c1"] = {pktest::random_tensor(rng, {2, 1, 1, 1}), {0.0f, 0.0f}};
        weights["c2"] = {pktest::random_tensor(rng, {2, 3, 1, 1}), {0.0f, 0.0f}};
        ModelGraph g({1, 2, 2}, std::move(layers), std::move(weights));
        try {
            g.validate();
            FAIL("expected validation_error");
        } catch (const validation_error& e) {
            CHECK(std::string(e.what()).find("c2") != std::string::npos);
        }
    }
}

TEST_CASE("eval_classifier") {
    // single 1x1x2 "image", softmax over a 1x1 conv with 2 outputs
    std::vector<LayerSpec> layers;
    LayerSpec c;
    c.name = "fc";
    c.kind = LayerKind::conv;
    c.in_channels = 1;
    c.out_channels = 2;
    c.kernel_size = 1;
    layers.push_back(c);
    std::map<std::string, ConvWeights> weights;
    Tensor k({2, 1, 1, 1}, {0.1f, 0.9f});
    weights["fc"] = {k, {0.0f, 0.0f}};
    ModelGraph g({1, 1, 1}, std::move(layers), std::move(weights));

    Tensor one({1, 1, 1}, {1.0f});
    CHECK(eval_classifier(g, {{one, 1}}) == doctest::Approx(1.0));
    CHECK(eval_classifier(g, {{one, 0}}) == doctest::Approx(0.0));

    // all-equal scores: tie goes to class 0
    Tensor zero({1, 1, 1}, {0.0f});
    CHECK(eval_classifier(g, {{zero, 0}}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(eval_classifier(g, {}), domain_error);

    // four hand-labeled inputs: scores are (0.1*x, 0.9*x), so positive x
    // picks class 1 and negative x picks class 0
    Tensor pos({1, 1, 1}, {2.0f}), neg({1, 1, 1}, {-2.0f});
    const double acc = eval_classifier(
        g, {{pos, 1}, {neg, 0}, {pos, 0}, {neg, 0}});
    CHECK(acc == doctest::Approx(0.75));
}
