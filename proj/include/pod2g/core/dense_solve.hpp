#pragma once

#include <numeric>

#include "pod2g/core/types.hpp"

namespace pod2g {

inline constexpr index_t kDenseCap = 2048;

/// LU factorization with partial pivoting, reusable for repeated solves
/// against the same matrix (coarse-grid and reduced systems).
class DenseLu {
public:
    explicit DenseLu(DenseMatrix A) : lu_(std::move(A)) {
        require(lu_.nrows == lu_.ncols, "DenseLu: matrix not square");
        const index_t n = lu_.nrows;
        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), index_t{0});
        const double pivot_floor = 1e-14 * max_abs(lu_);
        for (index_t k = 0; k < n; ++k) {
            index_t p = k;
            for (index_t i = k + 1; i < n; ++i)
                if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
            if (std::abs(lu_(p, k)) <= pivot_floor)
                throw std::runtime_error("DenseLu: matrix is singular to working precision");
            if (p != k) {
                for (index_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(perm_[k], perm_[p]);
            }
            for (index_t i = k + 1; i < n; ++i) {
                lu_(i, k) /= lu_(k, k);
                const double lik = lu_(i, k);
                if (lik == 0.0) continue;
                for (index_t j = k + 1; j < n; ++j) lu_(i, j) -= lik * lu_(k, j);
            }
        }
    }

    Vector solve(const Vector& b) const {
        const index_t n = lu_.nrows;
        require(b.size() == n, "DenseLu::solve: size mismatch");
        Vector x(n);
        for (index_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
        for (index_t i = 1; i < n; ++i) {
            double s = x[i];
            for (index_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
            x[i] = s;
        }
        for (index_t ii = n; ii-- > 0;) {
            double s = x[ii];
            for (index_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
            x[ii] = s / lu_(ii, ii);
        }
        return x;
    }

    index_t size() const { return lu_.nrows; }

private:
    DenseMatrix lu_;
    std::vector<index_t> perm_;
};

inline Vector dense_solve(const DenseMatrix& A, const Vector& b) {
    return DenseLu(A).solve(b);
}

struct EighResult {
    Vector eigenvalues;       // descending
    DenseMatrix eigenvectors; // column i pairs with eigenvalues[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Input must be
/// symmetric within 1e-8 relative and no larger than the dense cap.
inline EighResult dense_eigh_spd(const DenseMatrix& A, index_t cap = kDenseCap) {
    require(A.nrows == A.ncols, "dense_eigh_spd: matrix not square");
    require(A.nrows <= cap, "dense_eigh_spd: matrix exceeds dense cap");
    const index_t n = A.nrows;
    const double scale = max_abs(A);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = i + 1; j < n; ++j)
            if (std::abs(A(i, j) - A(j, i)) > 1e-8 * std::max(scale, 1e-300))
                throw std::invalid_argument("dense_eigh_spd: matrix is not symmetric");

    DenseMatrix W = A;
    DenseMatrix V = DenseMatrix::identity(n);
    const double fnorm = frobenius_norm(A);
    const double threshold = 1e-12 * std::max(fnorm, 1e-300);

    auto offdiag_norm = [&]() {
        double s = 0.0;
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i + 1; j < n; ++j) s += 2.0 * W(i, j) * W(i, j);
        return std::sqrt(s);
    };

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && offdiag_norm() > threshold; ++sweep) {
        for (index_t p = 0; p + 1 < n; ++p) {
            for (index_t q = p + 1; q < n; ++q) {
                const double apq = W(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (W(q, q) - W(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (index_t k = 0; k < n; ++k) {
                    const double wkp = W(k, p), wkq = W(k, q);
                    W(k, p) = c * wkp - s * wkq;
                    W(k, q) = s * wkp + c * wkq;
                }
                for (index_t k = 0; k < n; ++k) {
                    const double wpk = W(p, k), wqk = W(q, k);
                    W(p, k) = c * wpk - s * wqk;
                    W(q, k) = s * wpk + c * wqk;
                }
                for (index_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<index_t> order(n);
    std::iota(order.begin(), order.end(), index_t{0});
    std::sort(order.begin(), order.end(),
              [&](index_t a, index_t b) { return W(a, a) > W(b, b); });

    EighResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = DenseMatrix(n, n);
    for (index_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = W(order[j], order[j]);
        for (index_t i = 0; i < n; ++i) out.eigenvectors(i, j) = V(i, order[j]);
    }
    return out;
}

}  // namespace pod2g
