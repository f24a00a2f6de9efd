#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pod2g {

using Vector = std::vector<double>;
using index_t = std::size_t;

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

/// Row-major dense matrix.
struct DenseMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(index_t r, index_t c, double fill = 0.0)
        : nrows(r), ncols(c), data(r * c, fill) {}

    double& operator()(index_t i, index_t j) { return data[i * ncols + j]; }
    double operator()(index_t i, index_t j) const { return data[i * ncols + j]; }

    static DenseMatrix identity(index_t n) {
        DenseMatrix I(n, n);
        for (index_t i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    DenseMatrix transposed() const {
        DenseMatrix T(ncols, nrows);
        for (index_t i = 0; i < nrows; ++i)
            for (index_t j = 0; j < ncols; ++j) T(j, i) = (*this)(i, j);
        return T;
    }

    Vector column(index_t j) const {
        Vector c(nrows);
        for (index_t i = 0; i < nrows; ++i) c[i] = (*this)(i, j);
        return c;
    }
};

inline double dot(const Vector& x, const Vector& y) {
    require(x.size() == y.size(), "dot: size mismatch");
    double s = 0.0;
    for (index_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

/// y += a*x
inline void axpy(double a, const Vector& x, Vector& y) {
    require(x.size() == y.size(), "axpy: size mismatch");
    for (index_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, Vector& x) {
    for (double& v : x) v *= a;
}

inline bool all_finite(const Vector& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline Vector matvec(const DenseMatrix& A, const Vector& x) {
    require(A.ncols == x.size(), "matvec: size mismatch");
    Vector y(A.nrows, 0.0);
    for (index_t i = 0; i < A.nrows; ++i) {
        double s = 0.0;
        for (index_t j = 0; j < A.ncols; ++j) s += A(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.ncols == B.nrows, "matmul: size mismatch");
    DenseMatrix C(A.nrows, B.ncols);
    for (index_t i = 0; i < A.nrows; ++i)
        for (index_t k = 0; k < A.ncols; ++k) {
            const double a = A(i, k);
            if (a == 0.0) continue;
            for (index_t j = 0; j < B.ncols; ++j) C(i, j) += a * B(k, j);
        }
    return C;
}

inline DenseMatrix operator-(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.nrows == B.nrows && A.ncols == B.ncols, "matrix sub: size mismatch");
    DenseMatrix C(A.nrows, A.ncols);
    for (index_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] - B.data[i];
    return C;
}

inline DenseMatrix operator+(const DenseMatrix& A, const DenseMatrix& B) {
    require(A.nrows == B.nrows && A.ncols == B.ncols, "matrix add: size mismatch");
    DenseMatrix C(A.nrows, A.ncols);
    for (index_t i = 0; i < A.data.size(); ++i) C.data[i] = A.data[i] + B.data[i];
    return C;
}

inline double max_abs(const DenseMatrix& A) {
    double m = 0.0;
    for (double v : A.data) m = std::max(m, std::abs(v));
    return m;
}

inline double frobenius_norm(const DenseMatrix& A) {
    double s = 0.0;
    for (double v : A.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace pod2g
