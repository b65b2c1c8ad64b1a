#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "prunekit/data_ingest.hpp"
#include "prunekit/model_graph.hpp"
#include "prunekit/sparse_select.hpp"
#include "prunekit/tensor.hpp"

namespace prunekit {

enum class PruneMode { bottom, top };

std::string to_string(PruneMode m);
PruneMode prune_mode_from_string(const std::string& s);

struct PruneSpec {
    std::string layer;
    int k = 0;  // channels to remove, 1 <= k < C
    PruneMode mode = PruneMode::bottom;
    ImportanceReport report;
};

struct PruneResult {
    std::vector<int> kept;  // sorted ascending, length C-K
    Matrix v;               // (C-K) x C reconstruction coefficients
    ModelGraph model;
    float recon_error = 0.0f;  // ||D - Dbar V||_F / ||D||_F
};

/// bottom removes the K lowest-factor channels, top the K highest; ties
/// follow the report's ranking (lower index ranks as more important).
std::pair<std::vector<int>, std::vector<int>> select_channels(
    const ImportanceReport& report, int k, PruneMode mode);

/// Keeps the listed output-channel slices of a conv kernel and its bias.
std::pair<Tensor, std::vector<float>> slice_kernel(const Tensor& kernel,
                                                   const std::vector<float>& bias,
                                                   const std::vector<int>& kept);

/// Least-squares V = (Dbar^T Dbar + ridge)^-1 Dbar^T D where Dbar is the
/// kept columns of D; returns V and the relative Frobenius residual.
std::pair<Matrix, float> fit_reconstruction(const DataMatrix& d,
                                            const std::vector<int>& kept);

/// Channel-mixing contraction of the next layer's kernel with V^T:
/// out[o,j,dy,dx] = sum_i in[o,i,dy,dx] * V[j,i]. Bias is untouched.
Tensor fold_upper_kernel(const Tensor& w_next, const Matrix& v);

/// select -> slice layer l -> fit V -> fold into the downstream conv.
/// The downstream consumer must be the next conv in the chain, separated
/// only by relu/avgpool layers.
PruneResult prune_layer(const ModelGraph& g, const PruneSpec& spec, const DataMatrix& d);

/// {layer, K, mode, kept, recon_error, lambda_rel, seed}
void write_prune_summary_json(const PruneResult& result, const PruneSpec& spec,
                              float lambda_rel, std::uint64_t seed, std::ostream& os);

}  // namespace prunekit
