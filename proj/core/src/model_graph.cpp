#include "prunekit/model_graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prunekit/errors.hpp"

namespace prunekit {

using nlohmann::json;

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::softmax: return "softmax";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "conv") return LayerKind::conv;
    if (s == "relu") return LayerKind::relu;
    if (s == "maxpool") return LayerKind::maxpool;
    if (s == "avgpool") return LayerKind::avgpool;
    if (s == "softmax") return LayerKind::softmax;
    throw format_error("unknown layer kind '" + s + "'");
}

ModelGraph::ModelGraph(Shape3 input_dims, std::vector<LayerSpec> layers,
                       std::map<std::string, ConvWeights> weights)
    : input_dims_(input_dims), layers_(std::move(layers)), weights_(std::move(weights)) {}

const LayerSpec& ModelGraph::layer(const std::string& name) const {
    return layers_[layer_index(name)];
}

std::size_t ModelGraph::layer_index(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].name == name) return i;
    throw lookup_error("no layer named '" + name + "'");
}

const ConvWeights& ModelGraph::conv_weights(const std::string& name) const {
    auto it = weights_.find(name);
    if (it == weights_.end()) throw lookup_error("no weights for layer '" + name + "'");
    return it->second;
}

void ModelGraph::validate() const {
    if (input_dims_[0] < 1 || input_dims_[1] < 1 || input_dims_[2] < 1) {
        throw validation_error("input_dims must be positive");
    }
    std::set<std::string> names;
    for (const auto& l : layers_) {
        if (!names.insert(l.name).second) {
            throw validation_error("duplicate layer name '" + l.name + "'");
        }
        if (l.kind == LayerKind::conv) {
            auto it = weights_.find(l.name);
            if (it == weights_.end()) {
                throw validation_error("conv layer '" + l.name + "' has no weights");
            }
            const auto& w = it->second;
            const std::vector<std::size_t> want = {
                static_cast<std::size_t>(l.out_channels),
                static_cast<std::size_t>(l.in_channels),
                static_cast<std::size_t>(l.kernel_size),
                static_cast<std::size_t>(l.kernel_size)};
            if (w.kernel.dims() != want) {
                throw validation_error("layer '" + l.name + "': kernel dims " +
                                       w.kernel.dims_str() + " do not match spec");
            }
            if (w.bias.size() != static_cast<std::size_t>(l.out_channels)) {
                throw validation_error("layer '" + l.name + "': bias length mismatch");
            }
        }
    }
    for (const auto& [name, w] : weights_) {
        if (!names.count(name)) {
            throw validation_error("orphan weight entry '" + name + "'");
        }
    }
    propagate_shapes();  // throws on channel/geometry incompatibility
}

std::vector<Shape3> ModelGraph::propagate_shapes() const {
    std::vector<Shape3> shapes;
    Shape3 cur = input_dims_;
    for (const auto& l : layers_) {
        try {
            switch (l.kind) {
                case LayerKind::conv: {
                    if (cur[0] != static_cast<std::size_t>(l.in_channels)) {
                        throw shape_error("in_channels " + std::to_string(l.in_channels) +
                                          " but incoming has " + std::to_string(cur[0]) +
                                          " channels");
                    }
                    // probe geometry with a tiny dry-run on extents only
                    long num_h = static_cast<long>(cur[1]) + 2L * l.pad - l.kernel_size;
                    long num_w = static_cast<long>(cur[2]) + 2L * l.pad - l.kernel_size;
                    if (l.stride < 1 || num_h < 0 || num_w < 0 || num_h % l.stride ||
                        num_w % l.stride) {
                        throw shape_error("invalid conv geometry");
                    }
                    cur = {static_cast<std::size_t>(l.out_channels),
                           static_cast<std::size_t>(num_h / l.stride + 1),
                           static_cast<std::size_t>(num_w / l.stride + 1)};
                    break;
                }
                case LayerKind::maxpool:
                case LayerKind::avgpool: {
                    long num_h = static_cast<long>(cur[1]) + 2L * l.pad - l.k;
                    long num_w = static_cast<long>(cur[2]) + 2L * l.pad - l.k;
                    if (l.stride < 1 || num_h < 0 || num_w < 0 || num_h % l.stride ||
                        num_w % l.stride) {
                        throw shape_error("invalid pool geometry");
                    }
                    cur = {cur[0], static_cast<std::size_t>(num_h / l.stride + 1),
                           static_cast<std::size_t>(num_w / l.stride + 1)};
                    break;
                }
                case LayerKind::relu:
                case LayerKind::softmax:
                    break;
            }
        } catch (const shape_error& e) {
            throw validation_error("layer '" + l.name + "': " + e.what());
        }
        shapes.push_back(cur);
    }
    return shapes;
}

Shape3 ModelGraph::input_shape_of(const std::string& name) const {
    const std::size_t idx = layer_index(name);
    if (idx == 0) return input_dims_;
    return propagate_shapes()[idx - 1];
}

ModelGraph ModelGraph::with_conv_rewritten(const std::string& name, Tensor kernel,
                                           std::vector<float> bias) const {
    const std::size_t idx = layer_index(name);
    if (layers_[idx].kind != LayerKind::conv) {
        throw validation_error("layer '" + name + "' is not a conv layer");
    }
    std::vector<LayerSpec> layers = layers_;
    layers[idx].out_channels = static_cast<int>(kernel.dims()[0]);
    layers[idx].in_channels = static_cast<int>(kernel.dims()[1]);
    std::map<std::string, ConvWeights> weights = weights_;
    weights[name] = ConvWeights{std::move(kernel), std::move(bias)};
    return ModelGraph(input_dims_, std::move(layers), std::move(weights));
}

ForwardResult forward(const ModelGraph& g, const Tensor& input,
                      const std::set<std::string>& capture) {
    const auto& in_dims = g.input_dims();
    if (input.ndim() != 3 || input.dims()[0] != in_dims[0] ||
        input.dims()[1] != in_dims[1] || input.dims()[2] != in_dims[2]) {
        throw shape_error("forward: input dims " + input.dims_str() +
                          " do not match model input");
    }
    for (const auto& name : capture) g.layer_index(name);  // throws lookup_error

    ForwardResult res;
    Tensor cur = input;
    const auto& layers = g.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        switch (l.kind) {
            case LayerKind::conv: {
                const auto& w = g.conv_weights(l.name);
                cur = conv2d(cur, w.kernel, w.bias, l.stride, l.pad);
                break;
            }
            case LayerKind::relu: cur = relu(cur); break;
            case LayerKind::maxpool: cur = maxpool2d(cur, l.k, l.stride, l.pad); break;
            case LayerKind::avgpool: cur = avgpool2d(cur, l.k, l.stride, l.pad); break;
            case LayerKind::softmax: cur = softmax(cur); break;
        }
        if (capture.count(l.name)) {
            // a conv block's captured value is the post-relu activation when a
            // relu directly follows; that is what the next layer consumes
            if (l.kind == LayerKind::conv && i + 1 < layers.size() &&
                layers[i + 1].kind == LayerKind::relu) {
                res.captured[l.name] = relu(cur);
            } else {
                res.captured[l.name] = cur;
            }
        }
    }
    res.output = std::move(cur);
    return res;
}

double eval_classifier(const ModelGraph& g,
                       const std::vector<std::pair<Tensor, int>>& dataset) {
    if (dataset.empty()) throw domain_error("eval_classifier: empty dataset");
    std::size_t correct = 0;
    for (const auto& [img, label] : dataset) {
        const Tensor out = forward(g, img).output;
        std::size_t best = 0;
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (out[i] > out[best]) best = i;  // strict: ties keep lowest index
        }
        if (static_cast<int>(best) == label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

// ---- serialization ---------------------------------------------------------

std::string blob_path_for(const std::string& manifest_path) {
    const auto dot = manifest_path.rfind('.');
    const auto slash = manifest_path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return manifest_path + ".blob";
    }
    return manifest_path.substr(0, dot) + ".blob";
}

void save_model(const ModelGraph& g, const std::string& manifest_path) {
    g.validate();
    json doc;
    doc["input_dims"] = {g.input_dims()[0], g.input_dims()[1], g.input_dims()[2]};
    doc["layers"] = json::array();

    std::vector<float> blob;
    for (const auto& l : g.layers()) {
        json jl;
        jl["name"] = l.name;
        jl["kind"] = to_string(l.kind);
        if (l.kind == LayerKind::conv) {
            jl["in_channels"] = l.in_channels;
            jl["out_channels"] = l.out_channels;
            jl["kernel_size"] = l.kernel_size;
            jl["stride"] = l.stride;
            jl["pad"] = l.pad;
            const auto& w = g.conv_weights(l.name);
            jl["kernel"] = {{"offset", blob.size() * 4}, {"len", w.kernel.size() * 4}};
            blob.insert(blob.end(), w.kernel.values().begin(), w.kernel.values().end());
            jl["bias"] = {{"offset", blob.size() * 4}, {"len", w.bias.size() * 4}};
            blob.insert(blob.end(), w.bias.begin(), w.bias.end());
        } else if (l.kind == LayerKind::maxpool || l.kind == LayerKind::avgpool) {
            jl["k"] = l.k;
            jl["stride"] = l.stride;
            jl["pad"] = l.pad;
        }
        doc["layers"].push_back(jl);
    }

    std::ofstream mos(manifest_path);
    if (!mos) throw format_error(manifest_path + ": cannot open for writing");
    mos << doc.dump(2) << "\n";

    std::ofstream bos(blob_path_for(manifest_path), std::ios::binary);
    if (!bos) throw format_error(blob_path_for(manifest_path) + ": cannot open for writing");
    bos.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size() * 4));
}

namespace {

std::pair<std::size_t, std::size_t> read_span(const json& j, const std::string& layer,
                                              const char* field) {
    if (!j.contains(field) || !j[field].contains("offset") || !j[field].contains("len")) {
        throw format_error("layer '" + layer + "': missing " + field + " {offset,len}");
    }
    return {j[field]["offset"].get<std::size_t>(), j[field]["len"].get<std::size_t>()};
}

}  // namespace

ModelGraph load_model(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw format_error(manifest_path + ": cannot open");
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw format_error(manifest_path + ": " + e.what());
    }

    std::ifstream bis(blob_path_for(manifest_path), std::ios::binary);
    if (!bis) throw format_error(blob_path_for(manifest_path) + ": missing weights blob");
    bis.seekg(0, std::ios::end);
    const std::size_t blob_bytes = static_cast<std::size_t>(bis.tellg());
    bis.seekg(0);
    std::vector<float> blob(blob_bytes / 4);
    bis.read(reinterpret_cast<char*>(blob.data()),
             static_cast<std::streamsize>(blob.size() * 4));

    try {
        if (!doc.contains("input_dims") || doc["input_dims"].size() != 3) {
            throw format_error(manifest_path + ": input_dims must be [C,H,W]");
        }
        Shape3 input_dims = {doc["input_dims"][0].get<std::size_t>(),
                             doc["input_dims"][1].get<std::size_t>(),
                             doc["input_dims"][2].get<std::size_t>()};
        std::vector<LayerSpec> layers;
        std::map<std::string, ConvWeights> weights;
        for (const auto& jl : doc["layers"]) {
            LayerSpec l;
            l.name = jl.at("name").get<std::string>();
            l.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
            if (l.kind == LayerKind::conv) {
                l.in_channels = jl.at("in_channels").get<int>();
                l.out_channels = jl.at("out_channels").get<int>();
                l.kernel_size = jl.at("kernel_size").get<int>();
                l.stride = jl.value("stride", 1);
                l.pad = jl.value("pad", 0);
                auto [koff, klen] = read_span(jl, l.name, "kernel");
                auto [boff, blen] = read_span(jl, l.name, "bias");
                if (koff % 4 || klen % 4 || boff % 4 || blen % 4 ||
                    koff + klen > blob_bytes || boff + blen > blob_bytes) {
                    throw format_error("layer '" + l.name +
                                       "': weight span out of blob bounds");
                }
                const std::size_t kcount = klen / 4;
                const std::size_t want =
                    static_cast<std::size_t>(l.out_channels) * l.in_channels *
                    l.kernel_size * l.kernel_size;
                if (kcount != want || blen / 4 != static_cast<std::size_t>(l.out_channels)) {
                    throw format_error("layer '" + l.name +
                                       "': weight span length does not match geometry");
                }
                ConvWeights w;
                w.kernel = Tensor({static_cast<std::size_t>(l.out_channels),
                                   static_cast<std::size_t>(l.in_channels),
                                   static_cast<std::size_t>(l.kernel_size),
                                   static_cast<std::size_t>(l.kernel_size)},
                                  {blob.begin() + koff / 4, blob.begin() + koff / 4 + kcount});
                w.bias.assign(blob.begin() + boff / 4,
                              blob.begin() + boff / 4 + blen / 4);
                weights.emplace(l.name, std::move(w));
            } else if (l.kind == LayerKind::maxpool || l.kind == LayerKind::avgpool) {
                l.k = jl.at("k").get<int>();
                l.stride = jl.value("stride", 1);
                l.pad = jl.value("pad", 0);
            }
            layers.push_back(std::move(l));
        }
        ModelGraph g(input_dims, std::move(layers), std::move(weights));
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw format_error(manifest_path + ": " + e.what());
    }
}

}  // namespace prunekit
