#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <tuple>

#include "pod2g/core/types.hpp"

namespace pod2g {

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; explicit zeros are allowed.
struct CsrMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<index_t> row_offsets;  // length nrows+1
    std::vector<index_t> col_indices;
    std::vector<double> values;
    bool symmetric_hint = false;

    CsrMatrix() : row_offsets(1, 0) {}
    CsrMatrix(index_t r, index_t c) : nrows(r), ncols(c), row_offsets(r + 1, 0) {}

    index_t nnz() const { return values.size(); }

    double at(index_t i, index_t j) const {
        for (index_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
            if (col_indices[k] == j) return values[k];
        return 0.0;
    }

    void validate() const {
        require(row_offsets.size() == nrows + 1, "csr: bad row_offsets length");
        require(row_offsets.front() == 0, "csr: row_offsets[0] != 0");
        require(row_offsets.back() == values.size(), "csr: row_offsets[n] != nnz");
        require(col_indices.size() == values.size(), "csr: index/value length mismatch");
        for (index_t i = 0; i < nrows; ++i) {
            require(row_offsets[i] <= row_offsets[i + 1], "csr: decreasing row_offsets");
            for (index_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
                require(col_indices[k] < ncols, "csr: column index out of range");
                if (k > row_offsets[i])
                    require(col_indices[k - 1] < col_indices[k], "csr: columns not strictly increasing");
            }
        }
    }

    static CsrMatrix identity(index_t n) {
        CsrMatrix I(n, n);
        I.col_indices.resize(n);
        I.values.assign(n, 1.0);
        for (index_t i = 0; i < n; ++i) {
            I.row_offsets[i + 1] = i + 1;
            I.col_indices[i] = i;
        }
        I.symmetric_hint = true;
        return I;
    }
};

/// Build CSR from (i, j, v) triplets; duplicates are summed.
inline CsrMatrix csr_from_coo(index_t nrows, index_t ncols,
                              std::vector<std::tuple<index_t, index_t, double>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    CsrMatrix A(nrows, ncols);
    index_t row = 0;
    for (const auto& [i, j, v] : entries) {
        require(i < nrows && j < ncols, "csr_from_coo: index out of range");
        while (row < i) A.row_offsets[++row] = A.values.size();
        if (!A.values.empty() && A.row_offsets[row] < A.values.size() && A.col_indices.back() == j) {
            A.values.back() += v;
        } else {
            A.col_indices.push_back(j);
            A.values.push_back(v);
        }
    }
    while (row < nrows) A.row_offsets[++row] = A.values.size();
    return A;
}

inline Vector spmv(const CsrMatrix& A, const Vector& x) {
    require(A.ncols == x.size(), "spmv: dimension mismatch");
    Vector y(A.nrows, 0.0);
    for (index_t i = 0; i < A.nrows; ++i) {
        double s = 0.0;
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            s += A.values[k] * x[A.col_indices[k]];
        y[i] = s;
    }
    return y;
}

/// r = f - A*u
inline void residual(const CsrMatrix& A, const Vector& f, const Vector& u, Vector& r) {
    require(A.ncols == u.size() && A.nrows == f.size(), "residual: dimension mismatch");
    r.assign(f.begin(), f.end());
    for (index_t i = 0; i < A.nrows; ++i) {
        double s = 0.0;
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            s += A.values[k] * u[A.col_indices[k]];
        r[i] -= s;
    }
}

inline CsrMatrix transpose_csr(const CsrMatrix& A) {
    CsrMatrix T(A.ncols, A.nrows);
    std::vector<index_t> count(A.ncols, 0);
    for (index_t j : A.col_indices) ++count[j];
    for (index_t j = 0; j < A.ncols; ++j) T.row_offsets[j + 1] = T.row_offsets[j] + count[j];
    T.col_indices.resize(A.nnz());
    T.values.resize(A.nnz());
    std::vector<index_t> next(T.row_offsets.begin(), T.row_offsets.end() - 1);
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k) {
            const index_t pos = next[A.col_indices[k]]++;
            T.col_indices[pos] = i;
            T.values[pos] = A.values[k];
        }
    T.symmetric_hint = A.symmetric_hint;
    return T;
}

inline Vector extract_diagonal(const CsrMatrix& A) {
    require(A.nrows == A.ncols, "extract_diagonal: matrix not square");
    Vector d(A.nrows, 0.0);
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            if (A.col_indices[k] == i) d[i] = A.values[k];
    return d;
}

inline DenseMatrix csr_to_dense(const CsrMatrix& A) {
    DenseMatrix D(A.nrows, A.ncols);
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            D(i, A.col_indices[k]) = A.values[k];
    return D;
}

/// C = A*B, classic row-merge product.
inline CsrMatrix csr_matmul(const CsrMatrix& A, const CsrMatrix& B) {
    require(A.ncols == B.nrows, "csr_matmul: dimension mismatch");
    CsrMatrix C(A.nrows, B.ncols);
    std::vector<double> acc(B.ncols, 0.0);
    std::vector<index_t> marker(B.ncols, static_cast<index_t>(-1));
    std::vector<index_t> cols;
    for (index_t i = 0; i < A.nrows; ++i) {
        cols.clear();
        for (index_t ka = A.row_offsets[i]; ka < A.row_offsets[i + 1]; ++ka) {
            const double a = A.values[ka];
            const index_t arow = A.col_indices[ka];
            for (index_t kb = B.row_offsets[arow]; kb < B.row_offsets[arow + 1]; ++kb) {
                const index_t j = B.col_indices[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    acc[j] = 0.0;
                    cols.push_back(j);
                }
                acc[j] += a * B.values[kb];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (index_t j : cols) {
            C.col_indices.push_back(j);
            C.values.push_back(acc[j]);
        }
        C.row_offsets[i + 1] = C.values.size();
    }
    return C;
}

/// Symmetrize the stored values in place: A <- (A + A^T)/2 on the union pattern.
inline CsrMatrix symmetrized(const CsrMatrix& A) {
    require(A.nrows == A.ncols, "symmetrized: matrix not square");
    const CsrMatrix T = transpose_csr(A);
    std::vector<std::tuple<index_t, index_t, double>> entries;
    entries.reserve(2 * A.nnz());
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = A.row_offsets[i]; k < A.row_offsets[i + 1]; ++k)
            entries.emplace_back(i, A.col_indices[k], 0.5 * A.values[k]);
    for (index_t i = 0; i < T.nrows; ++i)
        for (index_t k = T.row_offsets[i]; k < T.row_offsets[i + 1]; ++k)
            entries.emplace_back(i, T.col_indices[k], 0.5 * T.values[k]);
    CsrMatrix S = csr_from_coo(A.nrows, A.ncols, std::move(entries));
    S.symmetric_hint = true;
    return S;
}

/// P^T K P. For symmetric K the result is symmetrized by averaging, which
/// removes round-off skew from the two sparse products.
inline CsrMatrix galerkin_triple_product(const CsrMatrix& P, const CsrMatrix& K) {
    require(P.nrows == K.nrows && K.nrows == K.ncols, "galerkin_triple_product: dimension mismatch");
    const CsrMatrix Pt = transpose_csr(P);
    CsrMatrix coarse = csr_matmul(csr_matmul(Pt, K), P);
    if (K.symmetric_hint) coarse = symmetrized(coarse);
    return coarse;
}

/// Max relative asymmetry |a_ij - a_ji| / max|a|.
inline double symmetry_defect(const CsrMatrix& A) {
    require(A.nrows == A.ncols, "symmetry_defect: matrix not square");
    const CsrMatrix T = transpose_csr(A);
    double scale = 0.0;
    for (double v : A.values) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double defect = 0.0;
    for (index_t i = 0; i < A.nrows; ++i) {
        index_t ka = A.row_offsets[i], kt = T.row_offsets[i];
        const index_t ea = A.row_offsets[i + 1], et = T.row_offsets[i + 1];
        while (ka < ea || kt < et) {
            if (kt == et || (ka < ea && A.col_indices[ka] < T.col_indices[kt])) {
                defect = std::max(defect, std::abs(A.values[ka++]));
            } else if (ka == ea || T.col_indices[kt] < A.col_indices[ka]) {
                defect = std::max(defect, std::abs(T.values[kt++]));
            } else {
                defect = std::max(defect, std::abs(A.values[ka++] - T.values[kt++]));
            }
        }
    }
    return defect / scale;
}

inline bool is_symmetric(const CsrMatrix& A, double rtol = 1e-12) {
    return symmetry_defect(A) <= rtol;
}

}  // namespace pod2g
