#pragma once

#include <cstdint>

#include "prunekit/model_graph.hpp"

namespace prunekit {

/// Network-in-network style CIFAR classifier: three 5x5/5x5/3x3 conv
/// blocks with 192 channels, each followed by two 1x1 "cccp" convs, with
/// pooling between blocks and a global average pool into 100 classes.
/// Weights are random (seeded); the graph is meant for shape, cost and
/// pipeline tests, not as a trained model.
ModelGraph make_nin_style_graph(std::uint64_t seed = 42);

// Commonly published overall cost figures for the stock 192-channel
// model, used for the report cross-check (see set_reference_totals).
inline constexpr std::uint64_t kNinPublishedBaselineParams = 983000;     // 9.83e5
inline constexpr std::uint64_t kNinPublishedBaselineMults = 323000000;   // 3.23e8
inline constexpr double kNinPublishedParamsReduction = 56.77;
inline constexpr double kNinPublishedMultsReduction = 73.84;

}  // namespace prunekit
