#pragma once

#include "pod2g/core/csr.hpp"
#include "pod2g/core/rng.hpp"

namespace pod2g {

/// Small deterministic SPD test system shared across suites.
struct Fixture {
    std::string name;
    CsrMatrix K;
    Vector f;
};

/// tridiag(-1, 2, -1)
inline Fixture laplacian_1d(index_t n) {
    require(n >= 2, "laplacian_1d: n >= 2 required");
    std::vector<std::tuple<index_t, index_t, double>> e;
    for (index_t i = 0; i < n; ++i) {
        e.emplace_back(i, i, 2.0);
        if (i > 0) e.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) e.emplace_back(i, i + 1, -1.0);
    }
    Fixture fx{"laplacian_1d(" + std::to_string(n) + ")", csr_from_coo(n, n, std::move(e)), {}};
    fx.K.symmetric_hint = true;
    fx.f.assign(n, 1.0);
    return fx;
}

/// 5-point stencil on an n x n interior grid.
inline Fixture laplacian_2d(index_t n) {
    require(n >= 2, "laplacian_2d: n >= 2 required");
    const index_t d = n * n;
    auto id = [n](index_t ix, index_t iy) { return iy * n + ix; };
    std::vector<std::tuple<index_t, index_t, double>> e;
    for (index_t iy = 0; iy < n; ++iy)
        for (index_t ix = 0; ix < n; ++ix) {
            const index_t i = id(ix, iy);
            e.emplace_back(i, i, 4.0);
            if (ix > 0) e.emplace_back(i, id(ix - 1, iy), -1.0);
            if (ix + 1 < n) e.emplace_back(i, id(ix + 1, iy), -1.0);
            if (iy > 0) e.emplace_back(i, id(ix, iy - 1), -1.0);
            if (iy + 1 < n) e.emplace_back(i, id(ix, iy + 1), -1.0);
        }
    Fixture fx{"laplacian_2d(" + std::to_string(n) + ")", csr_from_coo(d, d, std::move(e)), {}};
    fx.K.symmetric_hint = true;
    fx.f.assign(d, 1.0);
    return fx;
}

/// Anisotropic 5-point stencil: -eps u_xx - u_yy.
inline Fixture anisotropic_2d(index_t n, double eps) {
    require(n >= 2 && eps > 0.0, "anisotropic_2d: invalid arguments");
    const index_t d = n * n;
    auto id = [n](index_t ix, index_t iy) { return iy * n + ix; };
    std::vector<std::tuple<index_t, index_t, double>> e;
    for (index_t iy = 0; iy < n; ++iy)
        for (index_t ix = 0; ix < n; ++ix) {
            const index_t i = id(ix, iy);
            e.emplace_back(i, i, 2.0 * eps + 2.0);
            if (ix > 0) e.emplace_back(i, id(ix - 1, iy), -eps);
            if (ix + 1 < n) e.emplace_back(i, id(ix + 1, iy), -eps);
            if (iy > 0) e.emplace_back(i, id(ix, iy - 1), -1.0);
            if (iy + 1 < n) e.emplace_back(i, id(ix, iy + 1), -1.0);
        }
    Fixture fx{"anisotropic_2d(" + std::to_string(n) + ")", csr_from_coo(d, d, std::move(e)), {}};
    fx.K.symmetric_hint = true;
    fx.f.assign(d, 1.0);
    return fx;
}

/// A^T A + n I over a random sparse pattern; SPD with eigenvalues >= n.
inline Fixture random_spd(index_t n, double density, std::uint64_t seed) {
    require(n >= 2 && density > 0.0 && density <= 1.0, "random_spd: invalid arguments");
    Rng rng(seed);
    std::vector<std::tuple<index_t, index_t, double>> a;
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < n; ++j)
            if (rng.uniform01() < density) a.emplace_back(i, j, rng.normal());
    CsrMatrix A = csr_from_coo(n, n, std::move(a));
    CsrMatrix K = csr_matmul(transpose_csr(A), A);
    std::vector<std::tuple<index_t, index_t, double>> e;
    for (index_t i = 0; i < n; ++i) {
        bool has_diag = false;
        for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k) {
            double v = K.values[k];
            if (K.col_indices[k] == i) {
                v += static_cast<double>(n);
                has_diag = true;
            }
            e.emplace_back(i, K.col_indices[k], v);
        }
        if (!has_diag) e.emplace_back(i, i, static_cast<double>(n));
    }
    Fixture fx{"random_spd(" + std::to_string(n) + ")", csr_from_coo(n, n, std::move(e)), {}};
    fx.K.symmetric_hint = true;
    fx.f = rng.normal_vector(n);
    return fx;
}

}  // namespace pod2g
