#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace prunekit {

/// Dense n-dimensional f32 array, row-major.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::vector<std::size_t> dims, std::vector<float> data);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t ndim() const { return dims_.size(); }
    std::size_t size() const { return data_.size(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // 3-d [c,y,x] and 4-d [o,i,y,x] accessors for the conv kernels.
    float& at3(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * dims_[1] + y) * dims_[2] + x];
    }
    float at3(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * dims_[1] + y) * dims_[2] + x];
    }
    float& at4(std::size_t o, std::size_t i, std::size_t y, std::size_t x) {
        return data_[((o * dims_[1] + i) * dims_[2] + y) * dims_[3] + x];
    }
    float at4(std::size_t o, std::size_t i, std::size_t y, std::size_t x) const {
        return data_[((o * dims_[1] + i) * dims_[2] + y) * dims_[3] + x];
    }

    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }
    std::string dims_str() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<float> data_;
};

/// Row-major f32 matrix. All reductions accumulate in f64.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    const std::vector<float>& values() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<float> data_;
};

// ---- numeric kernels -------------------------------------------------------

/// Cross-correlation (no kernel flip), zero padding.
/// input [C_in,H,W], kernel [C_out,C_in,kh,kw], bias length C_out.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              int stride, int pad);

Tensor relu(const Tensor& input);

Tensor maxpool2d(const Tensor& input, int k, int stride, int pad);
Tensor avgpool2d(const Tensor& input, int k, int stride, int pad);

/// Numerically stable softmax over the flattened values; dims preserved.
Tensor softmax(const Tensor& input);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Solves A X = B for symmetric positive definite A via Cholesky (f64),
/// with ridge eps*trace(A)/n added to the diagonal first.
Matrix solve_spd(const Matrix& a, const Matrix& b, double ridge_eps = 1e-8);

// ---- .sst tensor archive ---------------------------------------------------
// magic "SSTN", u32 version(=1), u32 ndim, ndim x u32 dims, f32 payload;
// all little-endian, row-major. Bit-exact round trip.

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace prunekit
