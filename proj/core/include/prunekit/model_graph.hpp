#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "prunekit/tensor.hpp"

namespace prunekit {

enum class LayerKind { conv, relu, maxpool, avgpool, softmax };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::relu;
    // conv fields
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 0;
    // conv + pool fields
    int k = 0;  // pool window
    int stride = 1;
    int pad = 0;
};

struct ConvWeights {
    Tensor kernel;            // [out,in,k,k]
    std::vector<float> bias;  // length out
};

using Shape3 = std::array<std::size_t, 3>;  // [C,H,W]

/// Linear chain of layers with weights; immutable once loaded/validated.
class ModelGraph {
public:
    ModelGraph() = default;
    ModelGraph(Shape3 input_dims, std::vector<LayerSpec> layers,
               std::map<std::string, ConvWeights> weights);

    const Shape3& input_dims() const { return input_dims_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::map<std::string, ConvWeights>& weights() const { return weights_; }

    const LayerSpec& layer(const std::string& name) const;
    std::size_t layer_index(const std::string& name) const;
    const ConvWeights& conv_weights(const std::string& name) const;

    /// Throws validation_error naming the offending layer.
    void validate() const;

    /// Symbolic output shape after each layer, starting from input_dims.
    std::vector<Shape3> propagate_shapes() const;

    /// Input shape seen by the named layer.
    Shape3 input_shape_of(const std::string& name) const;

    /// Builds a copy with one conv layer's weights (and channel counts) replaced.
    ModelGraph with_conv_rewritten(const std::string& name, Tensor kernel,
                                   std::vector<float> bias) const;

private:
    Shape3 input_dims_{0, 0, 0};
    std::vector<LayerSpec> layers_;
    std::map<std::string, ConvWeights> weights_;
};

struct ForwardResult {
    Tensor output;
    std::map<std::string, Tensor> captured;
};

/// Runs the chain. Captured value for a conv layer is taken after an
/// immediately following relu, if present (the value actually consumed
/// downstream); other layer kinds capture their own output.
ForwardResult forward(const ModelGraph& g, const Tensor& input,
                      const std::set<std::string>& capture = {});

/// Fraction of samples whose argmax score equals the label; argmax ties
/// break toward the lowest class index.
double eval_classifier(const ModelGraph& g,
                       const std::vector<std::pair<Tensor, int>>& dataset);

// Manifest JSON + sibling raw-f32 blob (manifest extension replaced by ".blob").
ModelGraph load_model(const std::string& manifest_path);
void save_model(const ModelGraph& g, const std::string& manifest_path);

/// Blob path convention used by save_model/load_model.
std::string blob_path_for(const std::string& manifest_path);

}  // namespace prunekit
