#include "flora/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flora {

namespace {

constexpr double kOffDiagTol = 1e-12;
constexpr int kMaxSweeps = 64;

double column_dot(const Matrix& m, std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, p) * m(i, q);
    return acc;
}

void rotate_columns(Matrix& m, std::size_t p, std::size_t q, double c, double s) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double mp = m(i, p);
        const double mq = m(i, q);
        m(i, p) = c * mp - s * mq;
        m(i, q) = s * mp + c * mq;
    }
}

// Orthogonalizes the columns of `work` (rows >= cols) in place, accumulating
// the right rotations into `v`. Convergence is measured on the largest
// normalized column coupling |w_p . w_q| / (|w_p| |w_q|).
void jacobi_orthogonalize(Matrix& work, Matrix& v) {
    const std::size_t n = work.cols();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double alpha = column_dot(work, p, p);
                const double beta = column_dot(work, q, q);
                const double gamma = column_dot(work, p, q);
                const double denom = std::sqrt(alpha * beta);
                if (denom == 0.0 || std::abs(gamma) <= kOffDiagTol * denom) continue;
                off = std::max(off, std::abs(gamma) / denom);

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(work, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        }
        if (off <= kOffDiagTol) return;
    }
    throw SvdError("jacobi svd did not reach off-diagonal tolerance 1e-12 within " +
                   std::to_string(kMaxSweeps) + " sweeps");
}

// Fills column `col` of u with a unit vector orthogonal to columns [0, col).
void complete_orthonormal_column(Matrix& u, std::size_t col) {
    std::vector<double> cand(u.rows(), 0.0);
    for (std::size_t basis = 0; basis < u.rows(); ++basis) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[basis] = 1.0;
        for (std::size_t j = 0; j < col; ++j) {
            double proj = 0.0;
            for (std::size_t i = 0; i < u.rows(); ++i) proj += cand[i] * u(i, j);
            for (std::size_t i = 0; i < u.rows(); ++i) cand[i] -= proj * u(i, j);
        }
        double norm = 0.0;
        for (double x : cand) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.5) {
            for (std::size_t i = 0; i < u.rows(); ++i) u(i, col) = cand[i] / norm;
            return;
        }
    }
    throw SvdError("failed to complete an orthonormal basis");
}

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();  // m >= n
    Matrix work = a;
    Matrix v = Matrix::identity(n);
    jacobi_orthogonalize(work, v);

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += work(i, j) * work(i, j);
        sigma[j] = std::sqrt(acc);
    }

    // nonincreasing sigma; ties keep iteration order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.sigma[j] = sigma[src];
        for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
        if (sigma[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u(i, j) = work(i, src) / sigma[src];
        } else {
            complete_orthonormal_column(out.u, j);
        }
    }
    return out;
}

void apply_sign_convention(SvdResult& r) {
    for (std::size_t j = 0; j < r.sigma.size(); ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < r.u.rows(); ++i) {
            const double mag = std::abs(r.u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (r.u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
            for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
        }
    }
}

}  // namespace

SvdResult svd(const Matrix& a) {
    SvdResult r;
    if (a.rows() >= a.cols()) {
        r = svd_tall(a);
    } else {
        SvdResult t = svd_tall(transpose(a));
        r = SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
    }
    apply_sign_convention(r);
    return r;
}

Matrix pseudo_inverse(const Matrix& a) {
    const SvdResult r = svd(a);
    const double sigma_max = r.sigma.empty() ? 0.0 : r.sigma.front();
    const double cutoff = std::numeric_limits<double>::epsilon() *
                          static_cast<double>(std::max(a.rows(), a.cols())) * sigma_max;

    // V * diag(1/sigma_i or 0) * U^T
    Matrix out(a.cols(), a.rows());
    for (std::size_t j = 0; j < r.sigma.size(); ++j) {
        if (r.sigma[j] <= cutoff || r.sigma[j] == 0.0) continue;
        const double inv = 1.0 / r.sigma[j];
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double vi = r.v(i, j) * inv;
            if (vi == 0.0) continue;
            for (std::size_t k = 0; k < a.rows(); ++k) out(i, k) += vi * r.u(k, j);
        }
    }
    return out;
}

std::pair<Matrix, Matrix> top_r_singular_subspaces(const Matrix& a, std::size_t r) {
    const std::size_t p = std::min(a.rows(), a.cols());
    if (r == 0 || r > p)
        throw std::invalid_argument("rank " + std::to_string(r) + " out of range 1.." +
                                    std::to_string(p));
    const SvdResult full = svd(a);
    Matrix u(a.rows(), r);
    Matrix v(a.cols(), r);
    for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t i = 0; i < a.rows(); ++i) u(i, j) = full.u(i, j);
        for (std::size_t i = 0; i < a.cols(); ++i) v(i, j) = full.v(i, j);
    }
    return {std::move(u), std::move(v)};
}

}  // namespace flora
