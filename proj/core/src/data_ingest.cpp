#include "prunekit/data_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "prunekit/errors.hpp"

namespace prunekit {

using nlohmann::json;

std::vector<ImageRecord> read_cifar100(const std::string& path) {
    constexpr std::size_t kRecordBytes = 3074;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    is.seekg(0, std::ios::end);
    const std::size_t bytes = static_cast<std::size_t>(is.tellg());
    is.seekg(0);
    if (bytes % kRecordBytes != 0) {
        throw format_error(path + ": truncated file, " + std::to_string(bytes) +
                           " bytes is not a multiple of 3074 (offending tail at byte " +
                           std::to_string(bytes - bytes % kRecordBytes) + ")");
    }
    std::vector<ImageRecord> records;
    records.reserve(bytes / kRecordBytes);
    std::vector<unsigned char> buf(kRecordBytes);
    for (std::size_t r = 0; r < bytes / kRecordBytes; ++r) {
        is.read(reinterpret_cast<char*>(buf.data()), kRecordBytes);
        if (!is) throw format_error(path + ": read failed at record " + std::to_string(r));
        ImageRecord rec;
        rec.coarse_label = buf[0];
        rec.fine_label = buf[1];
        if (rec.coarse_label > 19) {
            throw format_error(path + ": coarse label " + std::to_string(rec.coarse_label) +
                               " out of range at record " + std::to_string(r));
        }
        if (rec.fine_label > 99) {
            throw format_error(path + ": fine label " + std::to_string(rec.fine_label) +
                               " out of range at record " + std::to_string(r));
        }
        std::vector<float> px(3072);
        for (std::size_t i = 0; i < 3072; ++i) px[i] = static_cast<float>(buf[2 + i]);
        rec.pixels = Tensor({3, 32, 32}, std::move(px));
        records.push_back(std::move(rec));
    }
    return records;
}

Tensor gcn(const Tensor& pixels) {
    const std::size_t n = pixels.size();
    double mean = 0.0;
    for (float v : pixels.values()) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float v : pixels.values()) {
        const double d = v - mean;
        var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double denom = std::max(sd, 1e-8);
    Tensor out = pixels;
    for (auto& v : out.values()) v = static_cast<float>((v - mean) / denom);
    return out;
}

ZcaTransform fit_zca(const std::vector<Tensor>& images, float epsilon,
                     bool epsilon_is_relative) {
    if (images.size() < 2) throw domain_error("fit_zca: need at least 2 images");
    const std::size_t n = images.size();
    const std::size_t d = images[0].size();
    for (const auto& img : images) {
        if (img.size() != d) throw shape_error("fit_zca: images differ in size");
    }

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) x(i, j) = images[i][j];

    Eigen::RowVectorXd mu = x.colwise().mean();
    x.rowwise() -= mu;
    Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw numeric_error("fit_zca: eigendecomposition failed");
    }
    Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);

    double eps = epsilon;
    if (epsilon_is_relative) eps = epsilon * lambda.mean();

    Eigen::VectorXd scale(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double v = lambda(i) + eps;
        if (v < 1e-20) {
            throw numeric_error("fit_zca: eigenvalue + epsilon underflow; data is "
                                "rank-deficient and epsilon too small");
        }
        scale(i) = 1.0 / std::sqrt(v);
    }
    Eigen::MatrixXd w =
        eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

    ZcaTransform t;
    t.epsilon = static_cast<float>(eps);
    t.mean.resize(d);
    for (std::size_t j = 0; j < d; ++j) t.mean[j] = static_cast<float>(mu(j));
    t.whitening = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            t.whitening(i, j) = static_cast<float>(w(i, j));
    return t;
}

Tensor apply_zca(const ZcaTransform& t, const Tensor& image) {
    const std::size_t d = t.mean.size();
    if (image.size() != d) {
        throw shape_error("apply_zca: image size " + std::to_string(image.size()) +
                          " != transform dimension " + std::to_string(d));
    }
    Tensor out = image;
    std::vector<double> centered(d);
    for (std::size_t j = 0; j < d; ++j) centered[j] = image[j] - t.mean[j];
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        const float* row = t.whitening.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) acc += row[j] * centered[j];
        out[i] = static_cast<float>(acc);
    }
    return out;
}

DataMatrix build_data_matrix(const ModelGraph& g, const std::string& layer,
                             const std::vector<Tensor>& images, std::size_t n_sample,
                             std::uint64_t seed) {
    if (n_sample > images.size()) {
        throw domain_error("build_data_matrix: n_sample " + std::to_string(n_sample) +
                           " exceeds image count " + std::to_string(images.size()));
    }
    if (n_sample < 1) throw domain_error("build_data_matrix: n_sample must be >= 1");
    const auto& spec = g.layer(layer);
    if (spec.kind != LayerKind::conv) {
        throw domain_error("build_data_matrix: layer '" + layer + "' is not a conv block");
    }

    // deterministic partial Fisher-Yates with modulo draws
    std::vector<std::size_t> idx(images.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n_sample; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }

    DataMatrix dm;
    dm.layer = layer;
    dm.seed = seed;
    dm.n_images = n_sample;
    for (std::size_t s = 0; s < n_sample; ++s) {
        const Tensor& img = images[idx[s]];
        auto res = forward(g, img, {layer});
        const Tensor& f = res.captured.at(layer);
        const std::size_t c = f.dims()[0], h = f.dims()[1], w = f.dims()[2];
        if (s == 0) {
            dm.channels = c;
            dm.height = h;
            dm.width = w;
            dm.values = Matrix(n_sample * h * w, c);
        }
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    dm.values(s * h * w + y * w + x, ch) = f.at3(ch, y, x);
    }
    return dm;
}

void save_data_matrix(const std::string& path, const DataMatrix& d) {
    Tensor t({d.values.rows(), d.values.cols()},
             std::vector<float>(d.values.values()));
    save_tensor(path, t);
    json side;
    side["layer"] = d.layer;
    side["N"] = d.n_images;
    side["H"] = d.height;
    side["W"] = d.width;
    side["C"] = d.channels;
    side["seed"] = d.seed;
    std::ofstream os(path + ".json");
    if (!os) throw format_error(path + ".json: cannot open for writing");
    os << side.dump(2) << "\n";
}

DataMatrix load_data_matrix(const std::string& path) {
    Tensor t = load_tensor(path);
    if (t.ndim() != 2) throw format_error(path + ": data matrix archive must be 2-d");
    std::ifstream is(path + ".json");
    if (!is) throw format_error(path + ".json: missing sidecar");
    json side;
    try {
        side = json::parse(is);
    } catch (const json::parse_error& e) {
        throw format_error(path + ".json: " + e.what());
    }
    DataMatrix d;
    d.layer = side.at("layer").get<std::string>();
    d.n_images = side.at("N").get<std::size_t>();
    d.height = side.at("H").get<std::size_t>();
    d.width = side.at("W").get<std::size_t>();
    d.channels = side.at("C").get<std::size_t>();
    d.seed = side.at("seed").get<std::uint64_t>();
    if (t.dims()[0] != d.n_images * d.height * d.width || t.dims()[1] != d.channels) {
        throw format_error(path + ": archive dims disagree with sidecar");
    }
    d.values = Matrix(t.dims()[0], t.dims()[1], std::vector<float>(t.values()));
    return d;
}

}  // namespace prunekit
