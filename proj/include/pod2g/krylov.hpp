#pragma once

#include <chrono>
#include <memory>

#include "pod2g/core/csr.hpp"
#include "pod2g/core/dense_solve.hpp"
#include "pod2g/core/report.hpp"

namespace pod2g {

/// Linear operator s = T^{-1} r. Instances are immutable after construction
/// and must behave as a fixed SPD operator for use inside CG.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual void apply(const Vector& r, Vector& s) const = 0;
    virtual std::string name() const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(const Vector& r, Vector& s) const override { s = r; }
    std::string name() const override { return "identity"; }
};

class JacobiPreconditioner final : public Preconditioner {
public:
    explicit JacobiPreconditioner(const CsrMatrix& K) : inv_diag_(extract_diagonal(K)) {
        for (index_t i = 0; i < inv_diag_.size(); ++i) {
            if (inv_diag_[i] == 0.0)
                throw std::runtime_error("jacobi preconditioner: zero diagonal at row " +
                                         std::to_string(i));
            inv_diag_[i] = 1.0 / inv_diag_[i];
        }
    }
    void apply(const Vector& r, Vector& s) const override {
        s.resize(r.size());
        for (index_t i = 0; i < r.size(); ++i) s[i] = inv_diag_[i] * r[i];
    }
    std::string name() const override { return "jacobi"; }

private:
    Vector inv_diag_;
};

/// Exact inverse via dense LU; test helper and the degenerate "perfect
/// preconditioner" case.
class ExactPreconditioner final : public Preconditioner {
public:
    explicit ExactPreconditioner(const CsrMatrix& K) : lu_(csr_to_dense(K)) {}
    void apply(const Vector& r, Vector& s) const override { s = lu_.solve(r); }
    std::string name() const override { return "exact"; }

private:
    DenseLu lu_;
};

namespace detail {

/// Shared sparsity-pattern scaffolding for the zero-fill factorizations.
struct PatternFactors {
    // In-place factor values over K's pattern plus a diagonal position per row.
    std::vector<index_t> diag_pos;

    static std::vector<index_t> locate_diagonal(const CsrMatrix& K) {
        std::vector<index_t> pos(K.nrows, static_cast<index_t>(-1));
        for (index_t i = 0; i < K.nrows; ++i)
            for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k)
                if (K.col_indices[k] == i) pos[i] = k;
        for (index_t i = 0; i < K.nrows; ++i)
            if (pos[i] == static_cast<index_t>(-1))
                throw std::runtime_error("zero-fill factorization: missing diagonal at row " +
                                         std::to_string(i));
        return pos;
    }
};

}  // namespace detail

/// ILU(0): Doolittle factorization restricted to the pattern of K.
/// apply() performs the two triangular solves L y = r, U s = y.
class Ilu0Preconditioner final : public Preconditioner {
public:
    explicit Ilu0Preconditioner(const CsrMatrix& K)
        : pattern_(K), diag_pos_(detail::PatternFactors::locate_diagonal(K)) {
        require(K.nrows == K.ncols, "ilu0: matrix not square");
        const index_t n = K.nrows;
        std::vector<index_t> col_of(n, static_cast<index_t>(-1));
        for (index_t i = 0; i < n; ++i) {
            for (index_t k = pattern_.row_offsets[i]; k < pattern_.row_offsets[i + 1]; ++k)
                col_of[pattern_.col_indices[k]] = k;
            // eliminate with rows k < i present in row i's pattern
            for (index_t kk = pattern_.row_offsets[i]; kk < pattern_.row_offsets[i + 1]; ++kk) {
                const index_t k = pattern_.col_indices[kk];
                if (k >= i) break;
                const double ukk = pattern_.values[diag_pos_[k]];
                if (ukk == 0.0) throw std::runtime_error("ilu0: zero pivot");
                const double lik = pattern_.values[kk] / ukk;
                pattern_.values[kk] = lik;
                for (index_t kj = diag_pos_[k] + 1; kj < pattern_.row_offsets[k + 1]; ++kj) {
                    const index_t pos = col_of[pattern_.col_indices[kj]];
                    if (pos != static_cast<index_t>(-1))
                        pattern_.values[pos] -= lik * pattern_.values[kj];
                }
            }
            if (pattern_.values[diag_pos_[i]] == 0.0)
                throw std::runtime_error("ilu0: zero pivot at row " + std::to_string(i));
            for (index_t k = pattern_.row_offsets[i]; k < pattern_.row_offsets[i + 1]; ++k)
                col_of[pattern_.col_indices[k]] = static_cast<index_t>(-1);
        }
    }

    void apply(const Vector& r, Vector& s) const override {
        const index_t n = pattern_.nrows;
        Vector y(n);
        for (index_t i = 0; i < n; ++i) {
            double sum = r[i];
            for (index_t k = pattern_.row_offsets[i]; k < pattern_.row_offsets[i + 1]; ++k) {
                const index_t j = pattern_.col_indices[k];
                if (j >= i) break;
                sum -= pattern_.values[k] * y[j];
            }
            y[i] = sum;  // unit lower-triangular L
        }
        s.assign(n, 0.0);
        for (index_t ii = n; ii-- > 0;) {
            double sum = y[ii];
            for (index_t k = diag_pos_[ii] + 1; k < pattern_.row_offsets[ii + 1]; ++k)
                sum -= pattern_.values[k] * s[pattern_.col_indices[k]];
            s[ii] = sum / pattern_.values[diag_pos_[ii]];
        }
    }
    std::string name() const override { return "ilu0"; }

private:
    CsrMatrix pattern_;  // values hold L (strict lower, unit diag implied) and U
    std::vector<index_t> diag_pos_;
};

/// Incomplete Cholesky with zero fill: K ~ L L^T on K's lower pattern.
/// Nonpositive pivots trigger a diagonal-shifted retry before giving up.
class Ichol0Preconditioner final : public Preconditioner {
public:
    explicit Ichol0Preconditioner(const CsrMatrix& K) {
        require(K.nrows == K.ncols, "ichol0: matrix not square");
        double diag_scale = 0.0;
        for (const double d : extract_diagonal(K)) diag_scale = std::max(diag_scale, std::abs(d));
        for (const double alpha : {0.0, 1e-3, 1e-2, 1e-1}) {
            if (try_factor(K, alpha * diag_scale)) return;
        }
        throw std::runtime_error("ichol0: factorization failed even with diagonal boost");
    }

    void apply(const Vector& r, Vector& s) const override {
        const index_t n = L_.nrows;
        Vector y(n);
        for (index_t i = 0; i < n; ++i) {
            double sum = r[i];
            const index_t end = L_.row_offsets[i + 1] - 1;  // diagonal is last in row
            for (index_t k = L_.row_offsets[i]; k < end; ++k)
                sum -= L_.values[k] * y[L_.col_indices[k]];
            y[i] = sum / L_.values[end];
        }
        // L^T s = y via column sweep on L
        s = y;
        for (index_t ii = n; ii-- > 0;) {
            const index_t end = L_.row_offsets[ii + 1] - 1;
            s[ii] /= L_.values[end];
            for (index_t k = L_.row_offsets[ii]; k < end; ++k)
                s[L_.col_indices[k]] -= L_.values[k] * s[ii];
        }
    }
    std::string name() const override { return "ichol0"; }

private:
    bool try_factor(const CsrMatrix& K, double shift) {
        const index_t n = K.nrows;
        // lower-triangular pattern of K, diagonal last in each row
        std::vector<std::tuple<index_t, index_t, double>> low;
        for (index_t i = 0; i < n; ++i)
            for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k) {
                const index_t j = K.col_indices[k];
                if (j < i) low.emplace_back(i, j, K.values[k]);
                if (j == i) low.emplace_back(i, j, K.values[k] + shift);
            }
        L_ = csr_from_coo(n, n, std::move(low));
        std::vector<index_t> col_of(n, static_cast<index_t>(-1));
        for (index_t i = 0; i < n; ++i) {
            const index_t row_begin = L_.row_offsets[i];
            const index_t diag = L_.row_offsets[i + 1] - 1;
            if (diag < row_begin || L_.col_indices[diag] != i) return false;
            for (index_t k = row_begin; k <= diag; ++k) col_of[L_.col_indices[k]] = k;
            for (index_t kk = row_begin; kk < diag; ++kk) {
                const index_t j = L_.col_indices[kk];
                // L(i,j) = (K(i,j) - sum_{k<j} L(i,k) L(j,k)) / L(j,j)
                double sum = L_.values[kk];
                const index_t jdiag = L_.row_offsets[j + 1] - 1;
                for (index_t k = L_.row_offsets[j]; k < jdiag; ++k) {
                    const index_t pos = col_of[L_.col_indices[k]];
                    if (pos != static_cast<index_t>(-1) && pos < kk)
                        sum -= L_.values[pos] * L_.values[k];
                }
                L_.values[kk] = sum / L_.values[jdiag];
            }
            double sum = L_.values[diag];
            for (index_t k = row_begin; k < diag; ++k) sum -= L_.values[k] * L_.values[k];
            for (index_t k = row_begin; k <= diag; ++k)
                col_of[L_.col_indices[k]] = static_cast<index_t>(-1);
            if (sum <= 0.0) return false;
            L_.values[diag] = std::sqrt(sum);
        }
        return true;
    }

    CsrMatrix L_;
};

inline std::unique_ptr<Preconditioner> make_ilu0(const CsrMatrix& K) {
    return std::make_unique<Ilu0Preconditioner>(K);
}
inline std::unique_ptr<Preconditioner> make_ichol0(const CsrMatrix& K) {
    return std::make_unique<Ichol0Preconditioner>(K);
}

/// Optional per-iteration capture for the orthogonality/conjugacy checks.
struct IterationTrace {
    std::vector<Vector> residuals;
    std::vector<Vector> directions;
    index_t max_entries = 16;
};

namespace detail {

inline double relative_residual(double rnorm, double fnorm) {
    return fnorm > 0.0 ? rnorm / fnorm : rnorm;
}

}  // namespace detail

/// Preconditioned conjugate gradient. Terminates when the relative residual
/// ||f - K u|| / ||f|| drops to delta, or after max_iter iterations.
inline std::pair<Vector, SolveReport> pcg_solve(const CsrMatrix& K, const Vector& f,
                                                const Preconditioner& T, Vector u0, double delta,
                                                index_t max_iter, IterationTrace* trace = nullptr) {
    require(K.nrows == K.ncols && f.size() == K.nrows, "pcg_solve: dimension mismatch");
    if (u0.empty()) u0.assign(K.nrows, 0.0);
    require(u0.size() == K.nrows, "pcg_solve: initial guess dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    SolveReport report;
    const double fnorm = norm2(f);
    Vector u = std::move(u0);
    Vector r;
    residual(K, f, u, r);
    double rel = detail::relative_residual(norm2(r), fnorm);
    report.residual_history.push_back(rel);

    index_t k = 0;
    if (rel > delta && k < max_iter) {
        Vector s(K.nrows), Kp(K.nrows);
        T.apply(r, s);
        Vector p = s;
        double rs_old = dot(r, s);
        if (rs_old <= 0.0)
            throw std::runtime_error("pcg_solve: r^T T^{-1} r <= 0 (preconditioner not SPD)");
        while (rel > delta && k < max_iter) {
            if (trace && trace->residuals.size() < trace->max_entries) {
                trace->residuals.push_back(r);
                trace->directions.push_back(p);
            }
            Kp = spmv(K, p);
            const double pKp = dot(p, Kp);
            if (pKp <= 0.0)
                throw std::runtime_error("pcg_solve: p^T K p <= 0 (matrix or preconditioner not SPD)");
            const double alpha = rs_old / pKp;
            axpy(alpha, p, u);
            axpy(-alpha, Kp, r);
            T.apply(r, s);
            const double rs_new = dot(r, s);
            const double beta = rs_new / rs_old;
            for (index_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
            rs_old = rs_new;
            ++k;
            rel = detail::relative_residual(norm2(r), fnorm);
            report.residual_history.push_back(rel);
            if (rs_new <= 0.0 && rel > delta)
                throw std::runtime_error("pcg_solve: preconditioned inner product went nonpositive");
        }
    }

    report.converged = rel <= delta;
    report.cycles = k;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!all_finite(u)) throw std::runtime_error("pcg_solve: non-finite entries in solution");
    return {std::move(u), std::move(report)};
}

/// Plain conjugate gradient, written out against the residual recurrences
/// directly. Kept independent of pcg_solve so the identity-preconditioner
/// equivalence can be tested across two code paths.
inline std::pair<Vector, SolveReport> cg_solve(const CsrMatrix& K, const Vector& f, Vector u0,
                                               double delta, index_t max_iter,
                                               IterationTrace* trace = nullptr) {
    require(K.nrows == K.ncols && f.size() == K.nrows, "cg_solve: dimension mismatch");
    if (u0.empty()) u0.assign(K.nrows, 0.0);
    require(u0.size() == K.nrows, "cg_solve: initial guess dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    SolveReport report;
    const double fnorm = norm2(f);
    Vector u = std::move(u0);
    Vector r;
    residual(K, f, u, r);
    double rel = detail::relative_residual(norm2(r), fnorm);
    report.residual_history.push_back(rel);

    index_t k = 0;
    if (rel > delta && k < max_iter) {
        Vector p = r, Kp(K.nrows);
        double rr_old = dot(r, r);
        while (rel > delta && k < max_iter) {
            if (trace && trace->residuals.size() < trace->max_entries) {
                trace->residuals.push_back(r);
                trace->directions.push_back(p);
            }
            Kp = spmv(K, p);
            const double pKp = dot(p, Kp);
            if (pKp <= 0.0)
                throw std::runtime_error("cg_solve: p^T K p <= 0 (matrix not SPD)");
            const double alpha = rr_old / pKp;
            axpy(alpha, p, u);
            axpy(-alpha, Kp, r);
            const double rr_new = dot(r, r);
            const double beta = rr_new / rr_old;
            for (index_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
            rr_old = rr_new;
            ++k;
            rel = detail::relative_residual(std::sqrt(rr_new), fnorm);
            report.residual_history.push_back(rel);
        }
    }

    report.converged = rel <= delta;
    report.cycles = k;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!all_finite(u)) throw std::runtime_error("cg_solve: non-finite entries in solution");
    return {std::move(u), std::move(report)};
}

}  // namespace pod2g
