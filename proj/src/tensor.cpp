#include "flora/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace flora {

namespace {

void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::size_t shape_product(std::span<const std::size_t> shape) {
    std::size_t p = 1;
    for (std::size_t e : shape) p *= e;
    return p;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    check(!shape_.empty(), "tensor must have at least one mode");
    for (std::size_t e : shape_) check(e > 0, "tensor extents must be positive");
    data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check(!shape_.empty(), "tensor must have at least one mode");
    for (std::size_t e : shape_) check(e > 0, "tensor extents must be positive");
    check(data_.size() == shape_product(shape_),
          "tensor data length does not match shape " + shape_to_string(shape_));
    for (double v : data_) check(std::isfinite(v), "tensor entries must be finite");
}

std::size_t Tensor::extent(std::size_t mode) const {
    check(mode < shape_.size(), "mode out of range");
    return shape_[mode];
}

std::size_t flat_index(std::span<const std::size_t> shape, std::span<const std::size_t> idx) {
    check(shape.size() == idx.size(), "index rank does not match shape");
    std::size_t flat = 0;
    for (std::size_t m = 0; m < shape.size(); ++m) {
        check(idx[m] < shape[m], "index out of range");
        flat = flat * shape[m] + idx[m];
    }
    return flat;
}

double& Tensor::at(std::span<const std::size_t> idx) { return data_[flat_index(shape_, idx)]; }
double Tensor::at(std::span<const std::size_t> idx) const { return data_[flat_index(shape_, idx)]; }

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    check(rows > 0 && cols > 0, "matrix extents must be positive");
    data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    check(rows > 0 && cols > 0, "matrix extents must be positive");
    check(data_.size() == rows * cols, "matrix data length does not match rows*cols");
    for (double v : data_) check(std::isfinite(v), "matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

namespace {

// Column strides of the mode-n unfolding: among the modes != n, the earliest
// varies fastest.
std::vector<std::size_t> unfold_col_strides(std::span<const std::size_t> shape, std::size_t mode) {
    std::vector<std::size_t> strides(shape.size(), 0);
    std::size_t s = 1;
    for (std::size_t m = 0; m < shape.size(); ++m) {
        if (m == mode) continue;
        strides[m] = s;
        s *= shape[m];
    }
    return strides;
}

}  // namespace

Matrix mode_n_unfold(const Tensor& t, std::size_t mode) {
    const auto& shape = t.shape();
    check(mode < shape.size(), "mode out of range");
    const std::size_t rows = shape[mode];
    const std::size_t cols = t.size() / rows;
    Matrix out(rows, cols);

    const auto strides = unfold_col_strides(shape, mode);
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        std::size_t col = 0;
        for (std::size_t m = 0; m < shape.size(); ++m)
            if (m != mode) col += idx[m] * strides[m];
        out(idx[mode], col) = t[flat];
        // odometer increment, last mode fastest (row-major order)
        for (std::size_t m = shape.size(); m-- > 0;) {
            if (++idx[m] < shape[m]) break;
            idx[m] = 0;
        }
    }
    return out;
}

Tensor mode_n_fold(const Matrix& m, std::size_t mode, std::span<const std::size_t> shape) {
    check(mode < shape.size(), "mode out of range");
    const std::size_t total = shape_product(shape);
    check(m.rows() == shape[mode] && m.rows() * m.cols() == total,
          "matrix dimensions inconsistent with fold shape " + shape_to_string(shape));

    Tensor out{std::vector<std::size_t>(shape.begin(), shape.end())};
    const auto strides = unfold_col_strides(shape, mode);
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t col = 0;
        for (std::size_t k = 0; k < shape.size(); ++k)
            if (k != mode) col += idx[k] * strides[k];
        out[flat] = m(idx[mode], col);
        for (std::size_t k = shape.size(); k-- > 0;) {
            if (++idx[k] < shape[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

namespace {

void matmul_rows(const Matrix& a, const Matrix& b, Matrix& out, std::size_t row_begin,
                 std::size_t row_end) {
    for (std::size_t i = row_begin; i < row_end; ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check(a.cols() == b.rows(), "matmul dimension mismatch");
    Matrix out(a.rows(), b.cols());
    matmul_rows(a, b, out, 0, a.rows());
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor mode_n_product(const Tensor& t, const Matrix& u, std::size_t mode) {
    check(mode < t.ndim(), "mode out of range");
    check(u.cols() == t.shape()[mode],
          "mode_n_product dimension mismatch: matrix has " + std::to_string(u.cols()) +
              " columns, tensor extent is " + std::to_string(t.shape()[mode]));
    std::vector<std::size_t> new_shape = t.shape();
    new_shape[mode] = u.rows();
    return mode_n_fold(matmul(u, mode_n_unfold(t, mode)), mode, new_shape);
}

Tensor mode_n_product_parallel(const Tensor& t, const Matrix& u, std::size_t mode,
                               unsigned threads) {
    check(mode < t.ndim(), "mode out of range");
    check(u.cols() == t.shape()[mode], "mode_n_product dimension mismatch");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    const Matrix unfolded = mode_n_unfold(t, mode);
    Matrix prod(u.rows(), unfolded.cols());
    const std::size_t n_rows = u.rows();
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, n_rows));
    if (n_workers <= 1) {
        matmul_rows(u, unfolded, prod, 0, n_rows);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        const std::size_t chunk = (n_rows + n_workers - 1) / n_workers;
        for (unsigned w = 0; w < n_workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n_rows, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(matmul_rows, std::cref(u), std::cref(unfolded), std::ref(prod),
                              begin, end);
        }
        for (auto& th : pool) th.join();
    }

    std::vector<std::size_t> new_shape = t.shape();
    new_shape[mode] = u.rows();
    return mode_n_fold(prod, mode, new_shape);
}

double frobenius_norm(const Tensor& t) {
    double acc = 0.0;
    for (double v : t.values()) acc += v * v;
    return std::sqrt(acc);
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.values()) acc += v * v;
    return std::sqrt(acc);
}

Tensor axpy(double alpha, const Tensor& x, const Tensor& y) {
    check(x.same_shape(y), "axpy shape mismatch: " + shape_to_string(x.shape()) + " vs " +
                               shape_to_string(y.shape()));
    Tensor out{x.shape()};
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i] + y[i];
    return out;
}

Matrix matrix_from_tensor(const Tensor& t) {
    check(t.ndim() == 2, "expected a 2-D tensor, got shape " + shape_to_string(t.shape()));
    return Matrix(t.shape()[0], t.shape()[1],
                  std::vector<double>(t.values().begin(), t.values().end()));
}

Tensor tensor_from_matrix(const Matrix& m) {
    return Tensor({m.rows(), m.cols()},
                  std::vector<double>(m.values().begin(), m.values().end()));
}

}  // namespace flora
