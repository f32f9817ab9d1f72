#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flora {

/// Dense N-dimensional tensor of doubles, row-major (last index varies
/// fastest). Shape extents are fixed at construction; data length always
/// equals the product of the extents.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor. All extents must be positive.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Takes ownership of `data`; rejects length mismatch and non-finite
    /// entries.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t extent(std::size_t mode) const;
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    /// Multi-index access (0-based, size must equal ndim).
    double& at(std::span<const std::size_t> idx);
    double at(std::span<const std::size_t> idx) const;
    double& at(std::initializer_list<std::size_t> idx) { return at(std::span<const std::size_t>(idx.begin(), idx.size())); }
    double at(std::initializer_list<std::size_t> idx) const { return at(std::span<const std::size_t>(idx.begin(), idx.size())); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Dense row-major matrix. Kept distinct from Tensor so 2-D linear algebra
/// (SVD, factor updates) has a dedicated type.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::size_t shape_product(std::span<const std::size_t> shape);

/// Row-major flat offset of a multi-index.
std::size_t flat_index(std::span<const std::size_t> shape, std::span<const std::size_t> idx);

/// Mode-n matricization (0-based mode). Row i of the result is the slice at
/// index i along `mode`; columns enumerate the remaining modes with the
/// earliest mode varying fastest.
Matrix mode_n_unfold(const Tensor& t, std::size_t mode);

/// Inverse of mode_n_unfold for the given target shape.
Tensor mode_n_fold(const Matrix& m, std::size_t mode, std::span<const std::size_t> shape);

/// Contracts mode `mode` of `t` (extent I_n) with the columns of `u`
/// (u.cols == I_n); the result replaces that extent with u.rows.
Tensor mode_n_product(const Tensor& t, const Matrix& u, std::size_t mode);

/// Data-parallel variant; bit-identical to the serial path (each output
/// entry is an independent fixed-order dot product). threads == 0 picks
/// hardware concurrency.
Tensor mode_n_product_parallel(const Tensor& t, const Matrix& u, std::size_t mode,
                               unsigned threads = 0);

double frobenius_norm(const Tensor& t);
double frobenius_norm(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// alpha * x + y, elementwise; shapes must match.
Tensor axpy(double alpha, const Tensor& x, const Tensor& y);

Matrix matrix_from_tensor(const Tensor& t);               // requires ndim == 2
Tensor tensor_from_matrix(const Matrix& m);

std::string shape_to_string(std::span<const std::size_t> shape);

}  // namespace flora
