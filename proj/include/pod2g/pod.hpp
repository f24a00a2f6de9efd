#pragma once

#include <chrono>
#include <variant>

#include <json.hpp>

#include "pod2g/core/csr.hpp"
#include "pod2g/core/dense_solve.hpp"
#include "pod2g/core/io.hpp"
#include "pod2g/core/report.hpp"
#include "pod2g/krylov.hpp"
#include "pod2g/smoothers.hpp"

namespace pod2g {

/// Truncated orthonormal snapshot basis with the full eigenvalue spectrum of
/// the snapshot Gram matrix attached.
struct PodBasis {
    DenseMatrix phi_r;   // d x r, orthonormal columns
    Vector eigenvalues;  // all N, descending
    index_t rank = 0;
    double energy_fraction = 0.0;

    index_t dim() const { return phi_r.nrows; }

    Vector project(const Vector& u) const {  // Phi^T u
        require(u.size() == phi_r.nrows, "PodBasis::project: dimension mismatch");
        Vector z(rank, 0.0);
        for (index_t i = 0; i < phi_r.nrows; ++i) {
            const double ui = u[i];
            for (index_t j = 0; j < rank; ++j) z[j] += phi_r(i, j) * ui;
        }
        return z;
    }

    Vector lift(const Vector& z) const {  // Phi z
        require(z.size() == rank, "PodBasis::lift: dimension mismatch");
        Vector u(phi_r.nrows, 0.0);
        for (index_t i = 0; i < phi_r.nrows; ++i) {
            double s = 0.0;
            for (index_t j = 0; j < rank; ++j) s += phi_r(i, j) * z[j];
            u[i] = s;
        }
        return u;
    }

    double orthonormality_defect() const {
        double defect = 0.0;
        for (index_t a = 0; a < rank; ++a)
            for (index_t b = a; b < rank; ++b) {
                double s = 0.0;
                for (index_t i = 0; i < phi_r.nrows; ++i) s += phi_r(i, a) * phi_r(i, b);
                defect = std::max(defect, std::abs(s - (a == b ? 1.0 : 0.0)));
            }
        return defect;
    }
};

/// Truncation target: either a fixed rank or a retained-energy fraction.
struct RankTarget {
    index_t rank;
};
struct EnergyTarget {
    double tau;
};
using PodTarget = std::variant<RankTarget, EnergyTarget>;

/// Build the POD basis from the snapshot columns U = [u_1 ... u_N] by way of
/// the N x N Gram eigenproblem U^T U Psi = Psi Lambda, mapping back with
/// Phi = U Psi Lambda^{-1/2}. Eigenvalues below 1e-12 * lambda_max are
/// treated as numerically zero and never inverted.
inline PodBasis compute_pod(const std::vector<Vector>& snapshots, PodTarget target) {
    require(!snapshots.empty(), "compute_pod: no snapshots");
    const index_t N = snapshots.size();
    const index_t d = snapshots.front().size();
    for (const Vector& u : snapshots)
        require(u.size() == d, "compute_pod: ragged snapshot set");
    require(N <= kDenseCap, "compute_pod: snapshot count exceeds dense eigensolver cap");

    DenseMatrix gram(N, N);
    for (index_t a = 0; a < N; ++a)
        for (index_t b = a; b < N; ++b) {
            const double g = dot(snapshots[a], snapshots[b]);
            gram(a, b) = g;
            gram(b, a) = g;
        }
    EighResult eig = dense_eigh_spd(gram);
    const double lambda_max = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    if (lambda_max <= 0.0) throw std::runtime_error("compute_pod: snapshot matrix is zero");

    const double cutoff = 1e-12 * lambda_max;
    index_t numerical_rank = 0;
    while (numerical_rank < N && eig.eigenvalues[numerical_rank] > cutoff) ++numerical_rank;

    double total_energy = 0.0;
    for (double l : eig.eigenvalues) total_energy += std::max(l, 0.0);

    index_t r = 0;
    if (std::holds_alternative<RankTarget>(target)) {
        r = std::min<index_t>(std::get<RankTarget>(target).rank, numerical_rank);
        require(std::get<RankTarget>(target).rank >= 1, "compute_pod: rank target must be >= 1");
    } else {
        const double tau = std::get<EnergyTarget>(target).tau;
        require(tau > 0.0 && tau <= 1.0, "compute_pod: energy target outside (0,1]");
        double acc = 0.0;
        while (r < numerical_rank) {
            acc += eig.eigenvalues[r];
            ++r;
            if (acc / total_energy >= tau) break;
        }
    }
    require(r >= 1, "compute_pod: truncation produced an empty basis");

    PodBasis basis;
    basis.eigenvalues = eig.eigenvalues;
    basis.rank = r;
    basis.phi_r = DenseMatrix(d, r);
    for (index_t j = 0; j < r; ++j) {
        const double inv_sqrt = 1.0 / std::sqrt(eig.eigenvalues[j]);
        for (index_t a = 0; a < N; ++a) {
            const double w = eig.eigenvectors(a, j) * inv_sqrt;
            if (w == 0.0) continue;
            const Vector& ua = snapshots[a];
            for (index_t i = 0; i < d; ++i) basis.phi_r(i, j) += w * ua[i];
        }
    }
    double retained = 0.0;
    for (index_t j = 0; j < r; ++j) retained += eig.eigenvalues[j];
    basis.energy_fraction = retained / total_energy;

    if (basis.orthonormality_defect() > 1e-8) {
        // modified Gram-Schmidt pass against accumulated round-off
        for (index_t j = 0; j < r; ++j) {
            for (index_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (index_t i = 0; i < d; ++i) proj += basis.phi_r(i, k) * basis.phi_r(i, j);
                for (index_t i = 0; i < d; ++i) basis.phi_r(i, j) -= proj * basis.phi_r(i, k);
            }
            double nrm = 0.0;
            for (index_t i = 0; i < d; ++i) nrm += basis.phi_r(i, j) * basis.phi_r(i, j);
            nrm = std::sqrt(nrm);
            require(nrm > 0.0, "compute_pod: re-orthonormalization collapsed a column");
            for (index_t i = 0; i < d; ++i) basis.phi_r(i, j) /= nrm;
        }
    }
    return basis;
}

/// Galerkin solve on the reduced space: K_r u_r = Phi^T f with
/// K_r = Phi^T K Phi, lifted back as u = Phi u_r.
inline DenseMatrix reduced_operator(const CsrMatrix& K, const PodBasis& basis) {
    require(K.nrows == K.ncols && K.nrows == basis.dim(), "reduced_operator: dimension mismatch");
    const index_t r = basis.rank;
    DenseMatrix Kr(r, r);
    for (index_t j = 0; j < r; ++j) {
        const Vector kphi = spmv(K, basis.phi_r.column(j));
        for (index_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (index_t m = 0; m < basis.dim(); ++m) s += basis.phi_r(m, i) * kphi[m];
            Kr(i, j) = s;
        }
    }
    return Kr;
}

inline std::pair<Vector, Vector> reduced_solve(const CsrMatrix& K, const Vector& f,
                                               const PodBasis& basis) {
    require(f.size() == K.nrows, "reduced_solve: dimension mismatch");
    const DenseMatrix Kr = reduced_operator(K, basis);
    const Vector fr = basis.project(f);
    Vector ur;
    try {
        ur = dense_solve(Kr, fr);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("reduced_solve: reduced operator is singular for this basis");
    }
    return {basis.lift(ur), std::move(ur)};
}

/// Two-grid solver that uses the POD basis as the prolongation operator:
/// identical cycle structure to the multigrid V-cycle, with the reduced
/// operator Phi^T K Phi as the (tiny, dense) coarse problem.
class Pod2gOperator {
public:
    Pod2gOperator(const CsrMatrix& K, const PodBasis& basis, index_t r1 = 1, index_t r2 = 1,
                  SmootherConfig smoother = {})
        : K_(K), basis_(basis), r1_(r1), r2_(r2), smoother_(smoother),
          coarse_lu_(reduced_operator(K, basis)) {}

    const CsrMatrix& matrix() const { return K_; }
    const PodBasis& basis() const { return basis_; }

    /// One cycle in place. Adjoint post-smoothing keeps the induced
    /// preconditioner symmetric; standalone solves use the forward sweep.
    void cycle(const Vector& f, Vector& u, bool adjoint_post = false) const {
        apply_smoother(smoother_, K_, f, u, r1_);
        Vector r;
        residual(K_, f, u, r);
        const Vector er = coarse_lu_.solve(basis_.project(r));
        const Vector corr = basis_.lift(er);
        axpy(1.0, corr, u);
        if (adjoint_post)
            apply_smoother_adjoint(smoother_, K_, f, u, r2_);
        else
            apply_smoother(smoother_, K_, f, u, r2_);
    }

private:
    const CsrMatrix& K_;
    const PodBasis& basis_;
    index_t r1_, r2_;
    SmootherConfig smoother_;
    DenseLu coarse_lu_;
};

/// One POD two-grid cycle (pre-smooth, reduced coarse correction, post-smooth).
inline Vector pod2g_cycle(const CsrMatrix& K, const Vector& f, Vector u, const PodBasis& basis,
                          index_t r1 = 1, index_t r2 = 1) {
    Pod2gOperator op(K, basis, r1, r2);
    op.cycle(f, u);
    return u;
}

inline std::pair<Vector, SolveReport> pod2g_solve(const CsrMatrix& K, const Vector& f,
                                                  const PodBasis& basis, Vector u0, double delta,
                                                  index_t max_cycles, index_t r1 = 1,
                                                  index_t r2 = 1) {
    require(K.nrows == K.ncols && f.size() == K.nrows, "pod2g_solve: dimension mismatch");
    if (u0.empty()) u0.assign(K.nrows, 0.0);
    require(u0.size() == K.nrows, "pod2g_solve: initial guess dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    const Pod2gOperator op(K, basis, r1, r2);

    SolveReport report;
    const double fnorm = norm2(f);
    Vector u = std::move(u0);
    Vector r;
    residual(K, f, u, r);
    double rel = detail::relative_residual(norm2(r), fnorm);
    report.residual_history.push_back(rel);

    index_t k = 0;
    while (rel > delta && k < max_cycles) {
        op.cycle(f, u);
        residual(K, f, u, r);
        rel = detail::relative_residual(norm2(r), fnorm);
        report.residual_history.push_back(rel);
        ++k;
    }
    report.converged = rel <= delta;
    report.cycles = k;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!all_finite(u)) throw std::runtime_error("pod2g_solve: non-finite entries in solution");
    return {std::move(u), std::move(report)};
}

/// POD two-grid cycle from a zero guess, as an SPD preconditioner.
class Pod2gPreconditioner final : public Preconditioner {
public:
    Pod2gPreconditioner(std::shared_ptr<const CsrMatrix> K, std::shared_ptr<const PodBasis> basis,
                        index_t r1 = 1, index_t r2 = 1)
        : K_(std::move(K)), basis_(std::move(basis)), op_(*K_, *basis_, r1, r2) {}
    void apply(const Vector& r, Vector& s) const override {
        s.assign(r.size(), 0.0);
        op_.cycle(r, s, /*adjoint_post=*/true);
    }
    std::string name() const override { return "pod2g"; }

private:
    std::shared_ptr<const CsrMatrix> K_;
    std::shared_ptr<const PodBasis> basis_;
    Pod2gOperator op_;
};

// ---------------------------------------------------------------------------
// Persistence: JSON header + little-endian f64 column block
// ---------------------------------------------------------------------------

inline std::uint64_t save_pod_basis(const std::filesystem::path& stem, const PodBasis& basis,
                                    std::uint64_t snapshot_hash = 0) {
    std::vector<Vector> cols;
    cols.reserve(basis.rank);
    for (index_t j = 0; j < basis.rank; ++j) cols.push_back(basis.phi_r.column(j));
    nlohmann::json meta{{"kind", "pod_basis"},
                        {"dim", basis.dim()},
                        {"rank", basis.rank},
                        {"eigenvalues", basis.eigenvalues},
                        {"energy_fraction", basis.energy_fraction},
                        {"snapshot_fnv1a", snapshot_hash}};
    return save_vector_batch(stem, cols, std::move(meta));
}

inline PodBasis load_pod_basis(const std::filesystem::path& stem) {
    VectorBatch batch = load_vector_batch(stem);
    require(batch.meta.value("kind", "") == "pod_basis", "load_pod_basis: wrong artifact kind");
    PodBasis basis;
    basis.rank = batch.vectors.size();
    const index_t d = batch.meta.at("dim").get<index_t>();
    basis.phi_r = DenseMatrix(d, basis.rank);
    for (index_t j = 0; j < basis.rank; ++j) {
        require(batch.vectors[j].size() == d, "load_pod_basis: column length mismatch");
        for (index_t i = 0; i < d; ++i) basis.phi_r(i, j) = batch.vectors[j][i];
    }
    basis.eigenvalues = batch.meta.at("eigenvalues").get<Vector>();
    basis.energy_fraction = batch.meta.at("energy_fraction").get<double>();
    return basis;
}

}  // namespace pod2g
