#include "prunekit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "prunekit/errors.hpp"

namespace prunekit {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d < 1) throw shape_error("tensor dims must all be >= 1");
        n *= d;
    }
    return n;
}

std::string dims_to_str(const std::vector<std::size_t>& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    os << ']';
    return os.str();
}

// Output extent for conv/pool geometry; the division must be exact.
std::size_t out_extent(std::size_t in, int k, int stride, int pad, const char* what) {
    long num = static_cast<long>(in) + 2L * pad - k;
    if (stride < 1 || pad < 0 || num < 0 || num % stride != 0) {
        std::ostringstream os;
        os << what << ": invalid geometry (extent " << in << ", k " << k << ", stride "
           << stride << ", pad " << pad << ")";
        throw shape_error(os.str());
    }
    return static_cast<std::size_t>(num / stride) + 1;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims)
    : dims_(std::move(dims)), data_(checked_product(dims_), 0.0f) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_product(dims_) != data_.size()) {
        throw shape_error("tensor data length " + std::to_string(data_.size()) +
                          " does not match dims " + dims_to_str(dims_));
    }
}

std::string Tensor::dims_str() const { return dims_to_str(dims_); }

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {
    if (rows < 1 || cols < 1) throw shape_error("matrix dims must be positive");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 1 || cols < 1) throw shape_error("matrix dims must be positive");
    if (data_.size() != rows * cols) {
        throw shape_error("matrix data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
    return m;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              int stride, int pad) {
    if (input.ndim() != 3 || kernel.ndim() != 4) {
        throw shape_error("conv2d expects input [C,H,W] and kernel [O,I,kh,kw], got " +
                          input.dims_str() + " and " + kernel.dims_str());
    }
    const std::size_t c_in = input.dims()[0], h = input.dims()[1], w = input.dims()[2];
    const std::size_t c_out = kernel.dims()[0];
    const std::size_t kh = kernel.dims()[2], kw = kernel.dims()[3];
    if (kernel.dims()[1] != c_in) {
        throw shape_error("conv2d channel mismatch: input " + input.dims_str() +
                          " vs kernel " + kernel.dims_str());
    }
    if (bias.size() != c_out) {
        throw shape_error("conv2d bias length " + std::to_string(bias.size()) +
                          " != out channels " + std::to_string(c_out));
    }
    const std::size_t oh = out_extent(h, static_cast<int>(kh), stride, pad, "conv2d");
    const std::size_t ow = out_extent(w, static_cast<int>(kw), stride, pad, "conv2d");

    Tensor out({c_out, oh, ow});
    for (std::size_t o = 0; o < c_out; ++o) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                const long y0 = static_cast<long>(y) * stride - pad;
                const long x0 = static_cast<long>(x) * stride - pad;
                for (std::size_t i = 0; i < c_in; ++i) {
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const long yy = y0 + static_cast<long>(dy);
                        if (yy < 0 || yy >= static_cast<long>(h)) continue;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const long xx = x0 + static_cast<long>(dx);
                            if (xx < 0 || xx >= static_cast<long>(w)) continue;
                            acc += static_cast<double>(input.at3(i, yy, xx)) *
                                   static_cast<double>(kernel.at4(o, i, dy, dx));
                        }
                    }
                }
                out.at3(o, y, x) = static_cast<float>(acc + bias[o]);
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (auto& v : out.values()) v = std::max(0.0f, v);
    return out;
}

namespace {

enum class PoolKind { max, avg };

Tensor pool2d(const Tensor& input, int k, int stride, int pad, PoolKind kind) {
    if (input.ndim() != 3) {
        throw shape_error("pool2d expects input [C,H,W], got " + input.dims_str());
    }
    const std::size_t c = input.dims()[0], h = input.dims()[1], w = input.dims()[2];
    const std::size_t oh = out_extent(h, k, stride, pad, "pool2d");
    const std::size_t ow = out_extent(w, k, stride, pad, "pool2d");

    Tensor out({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const long y0 = static_cast<long>(y) * stride - pad;
                const long x0 = static_cast<long>(x) * stride - pad;
                if (kind == PoolKind::max) {
                    // max over in-bounds elements only
                    float best = -std::numeric_limits<float>::infinity();
                    for (int dy = 0; dy < k; ++dy) {
                        const long yy = y0 + dy;
                        if (yy < 0 || yy >= static_cast<long>(h)) continue;
                        for (int dx = 0; dx < k; ++dx) {
                            const long xx = x0 + dx;
                            if (xx < 0 || xx >= static_cast<long>(w)) continue;
                            best = std::max(best, input.at3(ch, yy, xx));
                        }
                    }
                    out.at3(ch, y, x) = best;
                } else {
                    // mean divides by k*k; padded values count as 0
                    double acc = 0.0;
                    for (int dy = 0; dy < k; ++dy) {
                        const long yy = y0 + dy;
                        if (yy < 0 || yy >= static_cast<long>(h)) continue;
                        for (int dx = 0; dx < k; ++dx) {
                            const long xx = x0 + dx;
                            if (xx < 0 || xx >= static_cast<long>(w)) continue;
                            acc += input.at3(ch, yy, xx);
                        }
                    }
                    out.at3(ch, y, x) = static_cast<float>(acc / (static_cast<double>(k) * k));
                }
            }
        }
    }
    return out;
}

}  // namespace

Tensor maxpool2d(const Tensor& input, int k, int stride, int pad) {
    return pool2d(input, k, stride, pad, PoolKind::max);
}

Tensor avgpool2d(const Tensor& input, int k, int stride, int pad) {
    return pool2d(input, k, stride, pad, PoolKind::avg);
}

Tensor softmax(const Tensor& input) {
    Tensor out = input;
    float m = -std::numeric_limits<float>::infinity();
    for (float v : input.values()) m = std::max(m, v);
    double sum = 0.0;
    for (auto& v : out.values()) {
        double e = std::exp(static_cast<double>(v) - m);
        v = static_cast<float>(e);
        sum += e;
    }
    for (auto& v : out.values()) v = static_cast<float>(v / sum);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw shape_error("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " * " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) {
                acc += static_cast<double>(a(i, k)) * static_cast<double>(b(k, j));
            }
            c(i, j) = static_cast<float>(acc);
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge_eps) {
    if (a.rows() != a.cols()) throw shape_error("solve_spd: A must be square");
    if (a.rows() != b.rows()) {
        throw shape_error("solve_spd shape mismatch: A " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + ", B " + std::to_string(b.rows()) +
                          "x" + std::to_string(b.cols()));
    }
    const std::size_t n = a.rows();

    // f64 working copy with ridge on the diagonal
    std::vector<double> l(n * n);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double ridge = ridge_eps * trace / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            l[i * n + j] = static_cast<double>(a(i, j)) + (i == j ? ridge : 0.0);

    // in-place Cholesky, lower triangle
    for (std::size_t j = 0; j < n; ++j) {
        double d = l[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (d <= 0.0 || !std::isfinite(d)) {
            throw numeric_error("solve_spd: non-positive pivot at row " + std::to_string(j) +
                                " after ridge; matrix is not positive definite");
        }
        const double dj = std::sqrt(d);
        l[j * n + j] = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = l[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / dj;
        }
    }

    Matrix x(b.rows(), b.cols());
    std::vector<double> y(n);
    for (std::size_t col = 0; col < b.cols(); ++col) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b(i, col);
            for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * y[k];
            y[i] = s / l[i * n + i];
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= l[k * n + ii] * y[k];
            y[ii] = s / l[ii * n + ii];
        }
        for (std::size_t i = 0; i < n; ++i) x(i, col) = static_cast<float>(y[i]);
    }
    return x;
}

// ---- .sst archive ----------------------------------------------------------

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw format_error(path + ": truncated .sst header");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error(path + ": cannot open for writing");
    os.write("SSTN", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.dims()) put_u32(os, static_cast<std::uint32_t>(d));
    static_assert(sizeof(float) == 4);
    // assumes little-endian host, as does the rest of the toolkit
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * 4));
    if (!os) throw format_error(path + ": write failed");
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error(path + ": cannot open");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "SSTN", 4) != 0) {
        throw format_error(path + ": bad magic, not a .sst archive");
    }
    const std::uint32_t version = get_u32(is, path);
    if (version != 1) {
        throw format_error(path + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t ndim = get_u32(is, path);
    std::vector<std::size_t> dims(ndim);
    std::size_t count = 1;
    for (auto& d : dims) {
        d = get_u32(is, path);
        if (d < 1) throw format_error(path + ": zero dimension in header");
        count *= d;
    }
    std::vector<float> data(count);
    if (!is.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(count * 4))) {
        throw format_error(path + ": truncated payload, expected " +
                           std::to_string(count) + " floats");
    }
    return Tensor(std::move(dims), std::move(data));
}

}  // namespace prunekit
