#include "prunekit/nin.hpp"

#include <random>

namespace prunekit {

namespace {

LayerSpec conv_spec(const std::string& name, int in_c, int out_c, int k, int pad) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::conv;
    l.in_channels = in_c;
    l.out_channels = out_c;
    l.kernel_size = k;
    l.stride = 1;
    l.pad = pad;
    return l;
}

LayerSpec relu_spec(const std::string& name) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::relu;
    return l;
}

LayerSpec pool_spec(const std::string& name, LayerKind kind, int k, int stride) {
    LayerSpec l;
    l.name = name;
    l.kind = kind;
    l.k = k;
    l.stride = stride;
    l.pad = 0;
    return l;
}

}  // namespace

ModelGraph make_nin_style_graph(std::uint64_t seed) {
    std::vector<LayerSpec> layers;
    std::map<std::string, ConvWeights> weights;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 0.05f);

    auto add_conv = [&](const std::string& name, int in_c, int out_c, int k, int pad) {
        layers.push_back(conv_spec(name, in_c, out_c, k, pad));
        layers.push_back(relu_spec(name + "_relu"));
        ConvWeights w;
        w.kernel = Tensor({static_cast<std::size_t>(out_c), static_cast<std::size_t>(in_c),
                           static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
        for (auto& v : w.kernel.values()) v = dist(rng);
        w.bias.resize(out_c);
        for (auto& v : w.bias) v = dist(rng);
        weights.emplace(name, std::move(w));
    };

    // block 1, 32x32
    add_conv("conv1", 3, 192, 5, 2);
    add_conv("cccp1", 192, 160, 1, 0);
    add_conv("cccp2", 160, 96, 1, 0);
    layers.push_back(pool_spec("pool1", LayerKind::maxpool, 2, 2));

    // block 2, 16x16
    add_conv("conv2", 96, 192, 5, 2);
    add_conv("cccp3", 192, 192, 1, 0);
    add_conv("cccp4", 192, 192, 1, 0);
    layers.push_back(pool_spec("pool2", LayerKind::avgpool, 2, 2));

    // block 3, 8x8
    add_conv("conv3", 192, 192, 3, 1);
    add_conv("cccp5", 192, 192, 1, 0);
    add_conv("cccp6", 192, 100, 1, 0);
    layers.push_back(pool_spec("gap", LayerKind::avgpool, 8, 1));

    LayerSpec sm;
    sm.name = "prob";
    sm.kind = LayerKind::softmax;
    layers.push_back(sm);

    ModelGraph g({3, 32, 32}, std::move(layers), std::move(weights));
    g.validate();
    return g;
}

}  // namespace prunekit
