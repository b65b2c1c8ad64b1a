#include "prunekit/prune_fold.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "prunekit/errors.hpp"

namespace prunekit {

std::string to_string(PruneMode m) { return m == PruneMode::bottom ? "bottom" : "top"; }

PruneMode prune_mode_from_string(const std::string& s) {
    if (s == "bottom") return PruneMode::bottom;
    if (s == "top") return PruneMode::top;
    throw domain_error("unknown prune mode '" + s + "' (want bottom|top)");
}

std::pair<std::vector<int>, std::vector<int>> select_channels(
    const ImportanceReport& report, int k, PruneMode mode) {
    const int c = static_cast<int>(report.factors.size());
    if (k < 1 || k >= c) {
        throw domain_error("select_channels: K " + std::to_string(k) +
                           " out of range [1, " + std::to_string(c) + ")");
    }
    std::vector<int> removed;
    if (mode == PruneMode::bottom) {
        removed.assign(report.ranking.end() - k, report.ranking.end());
    } else {
        removed.assign(report.ranking.begin(), report.ranking.begin() + k);
    }
    std::vector<char> is_removed(c, 0);
    for (int i : removed) is_removed[i] = 1;
    std::vector<int> kept;
    kept.reserve(c - k);
    for (int i = 0; i < c; ++i)
        if (!is_removed[i]) kept.push_back(i);
    std::sort(removed.begin(), removed.end());
    return {kept, removed};
}

std::pair<Tensor, std::vector<float>> slice_kernel(const Tensor& kernel,
                                                   const std::vector<float>& bias,
                                                   const std::vector<int>& kept) {
    if (kernel.ndim() != 4) {
        throw shape_error("slice_kernel: kernel must be 4-d, got " + kernel.dims_str());
    }
    const std::size_t c = kernel.dims()[0];
    const std::size_t slice = kernel.size() / c;
    for (int i : kept) {
        if (i < 0 || static_cast<std::size_t>(i) >= c) {
            throw domain_error("slice_kernel: kept index " + std::to_string(i) +
                               " out of range");
        }
    }
    Tensor out({kept.size(), kernel.dims()[1], kernel.dims()[2], kernel.dims()[3]});
    std::vector<float> out_bias(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const float* src = kernel.data() + static_cast<std::size_t>(kept[j]) * slice;
        std::copy(src, src + slice, out.data() + j * slice);
        out_bias[j] = bias[kept[j]];
    }
    return {std::move(out), std::move(out_bias)};
}

std::pair<Matrix, float> fit_reconstruction(const DataMatrix& d,
                                            const std::vector<int>& kept) {
    const std::size_t rows = d.values.rows();
    const std::size_t c = d.values.cols();
    const std::size_t m = kept.size();
    if (rows < m) {
        throw domain_error("fit_reconstruction: fewer rows than kept channels");
    }

    // normal equations in f64: A = Dbar^T Dbar, B = Dbar^T D
    std::vector<double> a(m * m, 0.0), b(m * c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = d.values.data() + r * c;
        for (std::size_t i = 0; i < m; ++i) {
            const double vi = row[kept[i]];
            for (std::size_t j = i; j < m; ++j) a[i * m + j] += vi * row[kept[j]];
            for (std::size_t j = 0; j < c; ++j) b[i * c + j] += vi * row[j];
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < i; ++j) a[i * m + j] = a[j * m + i];

    Matrix af(m, m), bf(m, c);
    for (std::size_t i = 0; i < m * m; ++i) af.data()[i] = static_cast<float>(a[i]);
    for (std::size_t i = 0; i < m * c; ++i) bf.data()[i] = static_cast<float>(b[i]);
    Matrix v = solve_spd(af, bf);  // carries the shared ridge policy

    // relative Frobenius residual of D - Dbar V, f64 accumulation
    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = d.values.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) {
            double rec = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                rec += static_cast<double>(row[kept[i]]) * v(i, j);
            }
            const double diff = row[j] - rec;
            num += diff * diff;
            den += static_cast<double>(row[j]) * row[j];
        }
    }
    const float err = den > 0.0 ? static_cast<float>(std::sqrt(num / den)) : 0.0f;
    return {std::move(v), err};
}

Tensor fold_upper_kernel(const Tensor& w_next, const Matrix& v) {
    if (w_next.ndim() != 4) {
        throw shape_error("fold_upper_kernel: kernel must be 4-d, got " +
                          w_next.dims_str());
    }
    const std::size_t c_out = w_next.dims()[0], c_in = w_next.dims()[1];
    const std::size_t kh = w_next.dims()[2], kw = w_next.dims()[3];
    if (v.cols() != c_in) {
        throw shape_error("fold_upper_kernel: V has " + std::to_string(v.cols()) +
                          " cols but kernel has " + std::to_string(c_in) +
                          " input channels");
    }
    Tensor out({c_out, v.rows(), kh, kw});
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t j = 0; j < v.rows(); ++j) {
            for (std::size_t dy = 0; dy < kh; ++dy) {
                for (std::size_t dx = 0; dx < kw; ++dx) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < c_in; ++i) {
                        acc += static_cast<double>(w_next.at4(o, i, dy, dx)) * v(j, i);
                    }
                    out.at4(o, j, dy, dx) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

namespace {

// The consumer must be the next conv, separated only by layers that
// commute with the 1x1 channel mix (relu is handled by fitting on
// post-relu activations; avgpool is linear per channel).
std::string find_conv_consumer(const ModelGraph& g, std::size_t idx) {
    const auto& layers = g.layers();
    for (std::size_t i = idx + 1; i < layers.size(); ++i) {
        switch (layers[i].kind) {
            case LayerKind::conv: return layers[i].name;
            case LayerKind::relu:
            case LayerKind::avgpool: continue;
            case LayerKind::maxpool:
            case LayerKind::softmax:
                throw validation_error("prune_layer: layer '" + layers[idx].name +
                                       "' is separated from its conv consumer by '" +
                                       layers[i].name + "' (" + to_string(layers[i].kind) +
                                       "), which does not commute with channel mixing");
        }
    }
    throw validation_error("prune_layer: layer '" + layers[idx].name +
                           "' has no downstream conv consumer");
}

}  // namespace

PruneResult prune_layer(const ModelGraph& g, const PruneSpec& spec, const DataMatrix& d) {
    const std::size_t idx = g.layer_index(spec.layer);
    const auto& l = g.layers()[idx];
    if (l.kind != LayerKind::conv) {
        throw validation_error("prune_layer: '" + spec.layer + "' is not a conv layer");
    }
    if (spec.report.layer != spec.layer) {
        throw domain_error("prune_layer: importance report is for layer '" +
                           spec.report.layer + "', not '" + spec.layer + "'");
    }
    if (d.layer != spec.layer) {
        throw domain_error("prune_layer: data matrix captured at '" + d.layer +
                           "', not '" + spec.layer + "'");
    }
    if (d.values.cols() != static_cast<std::size_t>(l.out_channels)) {
        throw shape_error("prune_layer: data matrix has " +
                          std::to_string(d.values.cols()) + " channels, layer has " +
                          std::to_string(l.out_channels));
    }
    const std::string consumer = find_conv_consumer(g, idx);

    auto [kept, removed] = select_channels(spec.report, spec.k, spec.mode);

    const auto& w = g.conv_weights(spec.layer);
    auto [sliced_kernel, sliced_bias] = slice_kernel(w.kernel, w.bias, kept);

    auto [v, recon_error] = fit_reconstruction(d, kept);

    const auto& w_next = g.conv_weights(consumer);
    Tensor folded = fold_upper_kernel(w_next.kernel, v);

    ModelGraph pruned =
        g.with_conv_rewritten(spec.layer, std::move(sliced_kernel), std::move(sliced_bias))
            .with_conv_rewritten(consumer, std::move(folded),
                                 std::vector<float>(w_next.bias));
    pruned.validate();

    PruneResult res;
    res.kept = std::move(kept);
    res.v = std::move(v);
    res.model = std::move(pruned);
    res.recon_error = recon_error;
    return res;
}

void write_prune_summary_json(const PruneResult& result, const PruneSpec& spec,
                              float lambda_rel, std::uint64_t seed, std::ostream& os) {
    nlohmann::json doc;
    doc["layer"] = spec.layer;
    doc["K"] = spec.k;
    doc["mode"] = to_string(spec.mode);
    doc["kept"] = result.kept;
    doc["recon_error"] = result.recon_error;
    doc["lambda_rel"] = lambda_rel;
    doc["seed"] = seed;
    os << doc.dump(2) << "\n";
}

}  // namespace prunekit
