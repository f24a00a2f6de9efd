#pragma once

#include "pod2g/core/csr.hpp"
#include "pod2g/core/dense_solve.hpp"

namespace pod2g {

enum class SmootherKind { GaussSeidel, DampedJacobi };

struct SmootherConfig {
    SmootherKind kind = SmootherKind::GaussSeidel;
    index_t sweeps = 1;
    double omega = 2.0 / 3.0;  // damped Jacobi only
};

namespace detail {
inline void check_diagonal(const Vector& diag) {
    for (index_t i = 0; i < diag.size(); ++i)
        if (diag[i] == 0.0)
            throw std::runtime_error("smoother: zero diagonal entry at row " + std::to_string(i));
}
}  // namespace detail

/// Forward Gauss-Seidel, ascending row order: u <- u + L^{-1}(f - K u) with
/// L the lower triangle including the diagonal.
inline void gauss_seidel_sweep(const CsrMatrix& K, const Vector& f, Vector& u,
                               index_t sweeps = 1) {
    require(K.nrows == K.ncols && f.size() == K.nrows && u.size() == K.nrows,
            "gauss_seidel_sweep: dimension mismatch");
    for (index_t s = 0; s < sweeps; ++s) {
        for (index_t i = 0; i < K.nrows; ++i) {
            double sum = f[i];
            double diag = 0.0;
            for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k) {
                const index_t j = K.col_indices[k];
                if (j == i)
                    diag = K.values[k];
                else
                    sum -= K.values[k] * u[j];
            }
            if (diag == 0.0)
                throw std::runtime_error("gauss_seidel_sweep: zero diagonal at row " +
                                         std::to_string(i));
            u[i] = sum / diag;
        }
    }
}

/// Backward Gauss-Seidel (descending rows), the adjoint sweep of the forward
/// one for symmetric K. Used for post-smoothing inside SPD preconditioners.
inline void gauss_seidel_sweep_backward(const CsrMatrix& K, const Vector& f, Vector& u,
                                        index_t sweeps = 1) {
    require(K.nrows == K.ncols && f.size() == K.nrows && u.size() == K.nrows,
            "gauss_seidel_sweep_backward: dimension mismatch");
    for (index_t s = 0; s < sweeps; ++s) {
        for (index_t ii = K.nrows; ii-- > 0;) {
            double sum = f[ii];
            double diag = 0.0;
            for (index_t k = K.row_offsets[ii]; k < K.row_offsets[ii + 1]; ++k) {
                const index_t j = K.col_indices[k];
                if (j == ii)
                    diag = K.values[k];
                else
                    sum -= K.values[k] * u[j];
            }
            if (diag == 0.0)
                throw std::runtime_error("gauss_seidel_sweep_backward: zero diagonal at row " +
                                         std::to_string(ii));
            u[ii] = sum / diag;
        }
    }
}

/// Damped Jacobi: u <- u + omega D^{-1}(f - K u) per sweep.
inline void jacobi_sweep(const CsrMatrix& K, const Vector& f, Vector& u, double omega,
                         index_t sweeps = 1) {
    require(K.nrows == K.ncols && f.size() == K.nrows && u.size() == K.nrows,
            "jacobi_sweep: dimension mismatch");
    require(omega > 0.0 && omega <= 1.0, "jacobi_sweep: omega outside (0,1]");
    const Vector diag = extract_diagonal(K);
    detail::check_diagonal(diag);
    Vector r(K.nrows);
    for (index_t s = 0; s < sweeps; ++s) {
        residual(K, f, u, r);
        for (index_t i = 0; i < K.nrows; ++i) u[i] += omega * r[i] / diag[i];
    }
}

inline void apply_smoother(const SmootherConfig& cfg, const CsrMatrix& K, const Vector& f,
                           Vector& u, index_t sweeps) {
    if (cfg.kind == SmootherKind::GaussSeidel)
        gauss_seidel_sweep(K, f, u, sweeps);
    else
        jacobi_sweep(K, f, u, cfg.omega, sweeps);
}

/// Adjoint of apply_smoother for symmetric K (backward GS; Jacobi is its own
/// adjoint).
inline void apply_smoother_adjoint(const SmootherConfig& cfg, const CsrMatrix& K,
                                   const Vector& f, Vector& u, index_t sweeps) {
    if (cfg.kind == SmootherKind::GaussSeidel)
        gauss_seidel_sweep_backward(K, f, u, sweeps);
    else
        jacobi_sweep(K, f, u, cfg.omega, sweeps);
}

/// Dense Gauss-Seidel iteration matrix M = I - L^{-1} K.
inline DenseMatrix gs_iteration_matrix(const CsrMatrix& K, index_t cap = kDenseCap) {
    require(K.nrows == K.ncols, "gs_iteration_matrix: matrix not square");
    require(K.nrows <= cap, "gs_iteration_matrix: matrix exceeds dense cap");
    const index_t n = K.nrows;
    const DenseMatrix Kd = csr_to_dense(K);
    DenseMatrix M = DenseMatrix::identity(n);
    // Column-wise forward substitution of L X = K, subtracted from I.
    for (index_t j = 0; j < n; ++j) {
        Vector x(n, 0.0);
        for (index_t i = 0; i < n; ++i) {
            double s = Kd(i, j);
            for (index_t k = 0; k < i; ++k) s -= Kd(i, k) * x[k];
            if (Kd(i, i) == 0.0)
                throw std::runtime_error("gs_iteration_matrix: zero diagonal");
            x[i] = s / Kd(i, i);
        }
        for (index_t i = 0; i < n; ++i) M(i, j) -= x[i];
    }
    return M;
}

}  // namespace pod2g
