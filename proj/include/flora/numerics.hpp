#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "flora/tensor.hpp"

namespace flora {

/// SVD failed to reach the off-diagonal tolerance within the sweep limit.
class SvdError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thin SVD a = u * diag(sigma) * v^T with p = min(rows, cols) columns.
struct SvdResult {
    Matrix u;                   // rows x p, orthonormal columns
    std::vector<double> sigma;  // length p, nonincreasing, nonnegative
    Matrix v;                   // cols x p, orthonormal columns
};

/// One-sided Jacobi SVD. Intended for small dense matrices (up to a few
/// thousand elements). Deterministic sign convention: the largest-magnitude
/// entry of each left singular vector is made positive. Equal singular
/// values keep their iteration order.
SvdResult svd(const Matrix& a);

/// Moore-Penrose pseudo-inverse via SVD, with singular values at or below
/// eps * max(rows, cols) * sigma_max treated as zero.
Matrix pseudo_inverse(const Matrix& a);

/// First r left and right singular vectors (columns of U and V).
std::pair<Matrix, Matrix> top_r_singular_subspaces(const Matrix& a, std::size_t r);

}  // namespace flora
