#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prunekit/model_graph.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

struct ImageRecord {
    int coarse_label = 0;  // 0..19
    int fine_label = 0;    // 0..99
    Tensor pixels;         // [3,32,32], raw 0..255
};

/// Parses the 3074-byte-record binary format (coarse label, fine label,
/// 3072 channel-planar RGB bytes).
std::vector<ImageRecord> read_cifar100(const std::string& path);

/// Global contrast normalization: zero mean, unit (population) std over
/// all values; std floored at 1e-8 so a constant image maps to zeros.
Tensor gcn(const Tensor& pixels);

struct ZcaTransform {
    std::vector<float> mean;  // length d
    Matrix whitening;         // d x d, symmetric
    float epsilon = 0.0f;     // absolute epsilon used on the eigenvalues
};

/// Whitening from the eigendecomposition of the sample covariance of the
/// flattened images: E diag((lambda+eps)^-1/2) E^T. When
/// epsilon_is_relative, eps = epsilon * mean(lambda).
ZcaTransform fit_zca(const std::vector<Tensor>& images, float epsilon,
                     bool epsilon_is_relative = false);

Tensor apply_zca(const ZcaTransform& t, const Tensor& image);

/// Activations of one layer over N sampled images, reshaped so that
/// column c, row n*H*W + y*W + x holds f[c,y,x] of image n.
struct DataMatrix {
    Matrix values;  // (N*H*W) x C
    std::size_t n_images = 0, height = 0, width = 0, channels = 0;
    std::string layer;
    std::uint64_t seed = 0;
};

/// Samples n_sample images without replacement (mt19937_64(seed),
/// partial Fisher-Yates with modulo draws) and captures the named conv
/// block's post-relu activations.
DataMatrix build_data_matrix(const ModelGraph& g, const std::string& layer,
                             const std::vector<Tensor>& images, std::size_t n_sample,
                             std::uint64_t seed);

// .sst archive of dims [N*H*W, C] plus "<path>.json" sidecar
// {layer, N, H, W, C, seed}.
void save_data_matrix(const std::string& path, const DataMatrix& d);
DataMatrix load_data_matrix(const std::string& path);

}  // namespace prunekit
