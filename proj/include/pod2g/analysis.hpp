#pragma once

#include <json.hpp>

#include "pod2g/core/dense_solve.hpp"
#include "pod2g/core/rng.hpp"
#include "pod2g/pod.hpp"
#include "pod2g/smoothers.hpp"

namespace pod2g {

/// ||A||_2 through the eigenvalues of A^T A.
inline double spectral_norm(const DenseMatrix& A, index_t cap = kDenseCap) {
    require(A.nrows <= cap && A.ncols <= cap, "spectral_norm: matrix exceeds dense cap");
    const DenseMatrix AtA = matmul(A.transposed(), A);
    const EighResult eig = dense_eigh_spd(AtA);
    return std::sqrt(std::max(eig.eigenvalues.front(), 0.0));
}

/// Dominant eigenvalue modulus by power iteration with five random restarts.
/// Convergence is detected on the one-step norm ratio (real dominant pair) or
/// on windowed geometric growth (complex pairs); failing both within 10k
/// iterations raises.
inline double spectral_radius(const DenseMatrix& A, double tol = 1e-8, index_t cap = kDenseCap) {
    require(A.nrows == A.ncols, "spectral_radius: matrix not square");
    require(A.nrows <= cap, "spectral_radius: matrix exceeds dense cap");
    require(tol > 0.0, "spectral_radius: tolerance must be positive");
    if (max_abs(A) == 0.0) return 0.0;

    const index_t max_iter = 10000;
    double best = 0.0;
    bool any_converged = false;
    for (std::uint64_t restart = 0; restart < 5; ++restart) {
        Rng rng(0x5eed0000 + restart);
        Vector v = rng.normal_vector(A.nrows);
        scale(1.0 / norm2(v), v);

        double ratio_prev = -1.0;
        index_t stable = 0;
        double log_sum = 0.0;
        std::vector<double> log_checkpoints{0.0};
        double window_prev = -1.0;
        double estimate = -1.0;

        for (index_t k = 1; k <= max_iter; ++k) {
            Vector w = matvec(A, v);
            const double g = norm2(w);
            if (g == 0.0) {  // landed in the kernel; this direction says nothing
                estimate = 0.0;
                break;
            }
            scale(1.0 / g, w);
            v = std::move(w);
            log_sum += std::log(g);

            // fast path: one-step ratio stabilizes for real dominant pairs
            if (ratio_prev > 0.0 && std::abs(g - ratio_prev) <= tol * std::max(g, 1e-300)) {
                if (++stable >= 10) {
                    estimate = g;
                    break;
                }
            } else {
                stable = 0;
            }
            ratio_prev = g;

            // windowed growth for oscillating (complex) dominant pairs
            if (k % 64 == 0) {
                log_checkpoints.push_back(log_sum);
                const index_t m = log_checkpoints.size();
                if (m >= 3) {
                    const double half =
                        (log_checkpoints[m - 1] - log_checkpoints[m / 2]) /
                        (64.0 * static_cast<double>(m - 1 - m / 2));
                    const double window = std::exp(half);
                    if (window_prev > 0.0 &&
                        std::abs(window - window_prev) <= tol * std::max(window, 1e-300)) {
                        estimate = window;
                        break;
                    }
                    window_prev = window;
                }
            }
        }
        if (estimate >= 0.0) {
            any_converged = true;
            best = std::max(best, estimate);
        }
    }
    if (!any_converged)
        throw std::runtime_error("spectral_radius: power iteration failed to settle");
    return best;
}

/// Dense error propagator of one two-grid cycle,
/// E = M^{r2} (I - P (P^T K P)^{-1} P^T K) M^{r1}, with M the forward
/// Gauss-Seidel iteration matrix.
inline DenseMatrix two_grid_operator(const CsrMatrix& K, const DenseMatrix& P, index_t r1,
                                     index_t r2, index_t cap = 200) {
    require(K.nrows == K.ncols, "two_grid_operator: matrix not square");
    require(K.nrows <= cap, "two_grid_operator: instance exceeds the dense analysis cap");
    require(P.nrows == K.nrows, "two_grid_operator: prolongation row mismatch");
    const index_t n = K.nrows;
    const DenseMatrix Kd = csr_to_dense(K);
    const DenseMatrix M = gs_iteration_matrix(K);

    const DenseMatrix coarse = matmul(P.transposed(), matmul(Kd, P));
    DenseLu lu(coarse);  // raises on a singular coarse operator
    const DenseMatrix PtK = matmul(P.transposed(), Kd);
    DenseMatrix X(coarse.nrows, n);
    for (index_t j = 0; j < n; ++j) {
        Vector col(coarse.nrows);
        for (index_t i = 0; i < coarse.nrows; ++i) col[i] = PtK(i, j);
        const Vector sol = lu.solve(col);
        for (index_t i = 0; i < coarse.nrows; ++i) X(i, j) = sol[i];
    }
    DenseMatrix E = DenseMatrix::identity(n) - matmul(P, X);
    for (index_t s = 0; s < r1; ++s) E = matmul(E, M);
    for (index_t s = 0; s < r2; ++s) E = matmul(M, E);
    return E;
}

inline DenseMatrix two_grid_operator(const CsrMatrix& K, const CsrMatrix& P, index_t r1,
                                     index_t r2, index_t cap = 200) {
    return two_grid_operator(K, csr_to_dense(P), r1, r2, cap);
}

/// Numerical estimate of the per-cycle contraction bound gamma^{r1+r2} * C
/// and the contraction actually observed over the tested initial errors.
///
/// For a unit vector u orthogonal to span(Phi) the coarse correction adds a
/// component inside the span, so the restricted operator norm is never below
/// one. The usable bound C therefore combines that norm with the complement
/// mass of the errors the solver actually sees: C = c * eps, where eps is the
/// worst complement fraction of the tested errors after pre-smoothing.
struct ErrorBoundEstimate {
    double gamma = 0.0;                // smoother contraction surrogate
    double complement_norm = 0.0;      // c = ||Chat (I - Phi Phi^T)||_2, >= 1
    double test_complement_mass = 0.0; // eps over the tested errors
    double coarse_norm_bound = 0.0;    // C = c * eps, bound on the tested subspace
    double per_cycle_bound = 0.0;      // gamma^{r1+r2} * C
    double observed_ratio = 0.0;       // max ||e_next|| / ||e|| over the tests
    double rho_smoother = 0.0;         // spectral radius of the GS iteration matrix
    bool rho_ok = false;               // rho(M) < 1
    bool gamma_ok = false;             // gamma < 1
    bool coarse_ok = false;            // C < 1
    bool bound_holds = false;          // observed <= bound (when hypotheses hold)
    std::vector<double> trial_ratios;
    std::vector<double> recursive_ratios;  // ||E^k e|| / ||e|| for k = 1..

    bool hypotheses_hold() const { return rho_ok && coarse_ok; }
};

/// Estimate gamma from the matrix powers in the probe window [k0, k0+10],
/// measure the coarse-correction bound on the tested errors, and compare the
/// product bound against live per-cycle contractions.
///
/// `test_errors` should be drawn from the initial errors the solver actually
/// encounters (solution-manifold vectors when warm-started); when omitted,
/// Gaussian errors are used, for which the C < 1 hypothesis typically fails
/// and the bound check is vacuous by the flags.
inline ErrorBoundEstimate verify_error_bound(const CsrMatrix& K, const PodBasis& basis,
                                             index_t r1, index_t r2, index_t trials = 100,
                                             std::vector<Vector> test_errors = {},
                                             index_t k0 = 5) {
    require(K.nrows == K.ncols && K.nrows == basis.dim(), "verify_error_bound: dimension mismatch");
    require(K.nrows <= 200, "verify_error_bound: instance exceeds the dense analysis cap");
    const index_t n = K.nrows;
    const DenseMatrix M = gs_iteration_matrix(K);

    if (test_errors.empty()) {
        Rng rng(0xb0b0);
        for (index_t t = 0; t < trials; ++t) test_errors.push_back(rng.normal_vector(n));
    }
    for (const Vector& e : test_errors)
        require(e.size() == n, "verify_error_bound: test error dimension mismatch");

    ErrorBoundEstimate est;
    est.rho_smoother = spectral_radius(M, 1e-8);
    est.rho_ok = est.rho_smoother < 1.0;

    // gamma = max over the probe window of ||M^k||^{1/k}
    DenseMatrix Mk = DenseMatrix::identity(n);
    for (index_t k = 1; k < k0; ++k) Mk = matmul(Mk, M);
    est.gamma = 0.0;
    for (index_t k = k0; k <= k0 + 10; ++k) {
        Mk = matmul(Mk, M);
        est.gamma = std::max(est.gamma, std::pow(spectral_norm(Mk), 1.0 / static_cast<double>(k)));
    }
    est.gamma_ok = est.gamma < 1.0;

    // restricted coarse correction: c = ||Chat (I - Phi Phi^T)||
    const DenseMatrix Chat = two_grid_operator(K, basis.phi_r, 0, 0);
    DenseMatrix complement = DenseMatrix::identity(n);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (index_t k = 0; k < basis.rank; ++k) s += basis.phi_r(i, k) * basis.phi_r(j, k);
            complement(i, j) -= s;
        }
    est.complement_norm = spectral_norm(matmul(Chat, complement));

    // eps = worst complement fraction of the pre-smoothed test errors
    est.test_complement_mass = 0.0;
    for (const Vector& e : test_errors) {
        Vector smoothed = e;
        for (index_t s = 0; s < r1; ++s) smoothed = matvec(M, smoothed);
        const double mass = norm2(matvec(complement, smoothed));
        const double total = norm2(smoothed);
        if (total > 0.0)
            est.test_complement_mass = std::max(est.test_complement_mass, mass / total);
    }
    est.coarse_norm_bound = est.complement_norm * est.test_complement_mass;
    est.coarse_ok = est.coarse_norm_bound < 1.0;
    est.per_cycle_bound =
        std::pow(est.gamma, static_cast<double>(r1 + r2)) * est.coarse_norm_bound;

    const DenseMatrix E = two_grid_operator(K, basis.phi_r, r1, r2);
    est.observed_ratio = 0.0;
    est.trial_ratios.reserve(test_errors.size());
    for (const Vector& e : test_errors) {
        const double before = norm2(e);
        if (before == 0.0) continue;
        const double ratio = norm2(matvec(E, e)) / before;
        est.trial_ratios.push_back(ratio);
        est.observed_ratio = std::max(est.observed_ratio, ratio);
    }

    // recursive decay from one tested initial error
    Vector e = test_errors.front();
    const double e0 = norm2(e);
    for (index_t k = 1; k <= 5; ++k) {
        e = matvec(E, e);
        est.recursive_ratios.push_back(norm2(e) / e0);
    }

    est.bound_holds =
        !est.hypotheses_hold() || est.observed_ratio <= est.per_cycle_bound + 1e-8;
    return est;
}

inline nlohmann::json to_json(const ErrorBoundEstimate& est) {
    return nlohmann::json{{"gamma", est.gamma},
                          {"complement_norm", est.complement_norm},
                          {"test_complement_mass", est.test_complement_mass},
                          {"coarse_norm_bound", est.coarse_norm_bound},
                          {"per_cycle_bound", est.per_cycle_bound},
                          {"observed_ratio", est.observed_ratio},
                          {"rho_smoother", est.rho_smoother},
                          {"rho_ok", est.rho_ok},
                          {"gamma_ok", est.gamma_ok},
                          {"coarse_ok", est.coarse_ok},
                          {"hypotheses_hold", est.hypotheses_hold()},
                          {"bound_holds", est.bound_holds},
                          {"trial_ratios", est.trial_ratios},
                          {"recursive_ratios", est.recursive_ratios}};
}

}  // namespace pod2g
