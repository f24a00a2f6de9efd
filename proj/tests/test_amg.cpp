#include <catch2/catch_amalgamated.hpp>

#include "pod2g/amg.hpp"
#include "pod2g/core/rng.hpp"
#include "pod2g/fixtures.hpp"

using namespace pod2g;

namespace {

/// Dense two-grid error propagator M^{r2} (I - P (P^T K P)^{-1} P^T K) M^{r1},
/// assembled from first principles as the oracle for live cycles.
DenseMatrix dense_two_grid(const CsrMatrix& K, const DenseMatrix& P, index_t r1, index_t r2) {
    const index_t n = K.nrows;
    const DenseMatrix Kd = csr_to_dense(K);
    const DenseMatrix M = gs_iteration_matrix(K);
    const DenseMatrix Pt = P.transposed();
    const DenseMatrix coarse = matmul(Pt, matmul(Kd, P));
    const DenseLu lu(coarse);
    // C = I - P coarse^{-1} P^T K
    DenseMatrix PtK = matmul(Pt, Kd);
    DenseMatrix X(coarse.nrows, n);
    for (index_t j = 0; j < n; ++j) {
        Vector col(coarse.nrows);
        for (index_t i = 0; i < coarse.nrows; ++i) col[i] = PtK(i, j);
        const Vector sol = lu.solve(col);
        for (index_t i = 0; i < coarse.nrows; ++i) X(i, j) = sol[i];
    }
    DenseMatrix C = DenseMatrix::identity(n) - matmul(P, X);
    DenseMatrix E = C;
    for (index_t s = 0; s < r1; ++s) E = matmul(E, M);
    for (index_t s = 0; s < r2; ++s) E = matmul(M, E);
    return E;
}

}  // namespace

TEST_CASE("strength graph") {
    SECTION("diagonal matrix has no edges") {
        const CsrMatrix K = csr_from_coo(4, 4, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0}});
        const StrengthGraph g = strength_graph(K, 0.25);
        CHECK(g.col_indices.empty());
    }

    SECTION("uniform stencil keeps every neighbor") {
        const Fixture fx = laplacian_1d(6);
        const StrengthGraph g = strength_graph(fx.K, 0.25);
        for (index_t i = 1; i + 1 < 6; ++i) CHECK(g.row_offsets[i + 1] - g.row_offsets[i] == 2);
        CHECK(g.row_offsets[1] - g.row_offsets[0] == 1);
    }

    SECTION("theta=1 on the anisotropic stencil keeps only the stiff direction") {
        const Fixture fx = anisotropic_2d(5, 0.01);
        const StrengthGraph g = strength_graph(fx.K, 1.0);
        // interior point 12 couples vertically (-1) and horizontally (-0.01)
        auto [b, e] = g.row(12);
        REQUIRE(e - b == 2);
        CHECK(g.col_indices[b] == 7);
        CHECK(g.col_indices[b + 1] == 17);
    }

    SECTION("positive off-diagonals clear the dominance flag") {
        CsrMatrix K = csr_from_coo(2, 2, {{0, 0, 2.0}, {0, 1, 1.5}, {1, 0, 1.5}, {1, 1, 2.0}});
        const StrengthGraph g = strength_graph(K, 0.25);
        CHECK_FALSE(g.negative_offdiag_dominant);
        CHECK(g.col_indices.empty());  // no negative couplings at all
    }
}

TEST_CASE("cf splitting") {
    SECTION("empty graph makes every point coarse") {
        const CsrMatrix K = csr_from_coo(3, 3, {{0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}});
        const CfSplit split = cf_split(strength_graph(K, 0.25));
        CHECK(split.n_coarse == 3);
    }

    SECTION("1d laplacian of size 9 alternates starting from index 1") {
        const Fixture fx = laplacian_1d(9);
        const CfSplit split = cf_split(strength_graph(fx.K, 0.25));
        const std::vector<std::uint8_t> expected{0, 1, 0, 1, 0, 1, 0, 1, 0};
        CHECK(split.is_coarse == expected);
    }

    SECTION("every fine point keeps a strong coarse neighbor") {
        for (const Fixture& fx :
             {laplacian_2d(8), anisotropic_2d(8, 0.01), random_spd(50, 0.15, 21)}) {
            INFO(fx.name);
            const StrengthGraph g = strength_graph(fx.K, 0.25);
            const CfSplit split = cf_split(g);
            for (index_t i = 0; i < g.n; ++i) {
                if (split.is_coarse[i]) continue;
                bool has_c = false;
                auto [b, e] = g.row(i);
                for (index_t k = b; k < e; ++k) has_c |= split.is_coarse[g.col_indices[k]] != 0;
                CHECK(has_c);
            }
        }
    }
}

TEST_CASE("direct interpolation") {
    SECTION("all-coarse splitting yields the identity") {
        const Fixture fx = laplacian_1d(5);
        const StrengthGraph g = strength_graph(fx.K, 0.25);
        CfSplit split;
        split.is_coarse.assign(5, 1);
        split.n_coarse = 5;
        const CsrMatrix P = direct_interpolation(fx.K, g, split);
        REQUIRE(P.ncols == 5);
        for (index_t i = 0; i < 5; ++i) CHECK(P.at(i, i) == Catch::Approx(1.0));
        CHECK(P.nnz() == 5);
    }

    SECTION("interior fine points average their two coarse neighbors") {
        const Fixture fx = laplacian_1d(9);
        const StrengthGraph g = strength_graph(fx.K, 0.25);
        const CfSplit split = cf_split(g);
        const CsrMatrix P = direct_interpolation(fx.K, g, split);
        // fine point 2 sits between coarse points 1 and 3 (coarse ids 0 and 1)
        CHECK(P.at(2, 0) == Catch::Approx(0.5));
        CHECK(P.at(2, 1) == Catch::Approx(0.5));
        CHECK(P.at(4, 1) == Catch::Approx(0.5));
        CHECK(P.at(4, 2) == Catch::Approx(0.5));
    }

    SECTION("zero row sums carry through: every fine row of P sums to one") {
        // periodic-like stencil with exact zero row sums
        const index_t n = 12;
        std::vector<std::tuple<index_t, index_t, double>> e;
        for (index_t i = 0; i < n; ++i) {
            e.emplace_back(i, i, 2.0);
            e.emplace_back(i, (i + 1) % n, -1.0);
            e.emplace_back(i, (i + n - 1) % n, -1.0);
        }
        const CsrMatrix K = csr_from_coo(n, n, std::move(e));
        const StrengthGraph g = strength_graph(K, 0.25);
        const CfSplit split = cf_split(g);
        const CsrMatrix P = direct_interpolation(K, g, split);
        for (index_t i = 0; i < n; ++i) {
            if (split.is_coarse[i]) continue;
            double sum = 0.0;
            for (index_t k = P.row_offsets[i]; k < P.row_offsets[i + 1]; ++k) sum += P.values[k];
            CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("hierarchy construction") {
    SECTION("single level is a dense solve") {
        const Fixture fx = laplacian_1d(10);
        AmgOptions opt;
        opt.max_levels = 1;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        CHECK(h.n_levels() == 1);
        const Vector u = v_cycle(h, fx.f, Vector(10, 0.0));
        Vector r;
        residual(fx.K, fx.f, u, r);
        CHECK(norm2(r) <= 1e-12 * norm2(fx.f));
    }

    SECTION("two levels halve the 1d laplacian") {
        const Fixture fx = laplacian_1d(64);
        AmgOptions opt;
        opt.max_levels = 2;
        opt.coarse_cap = 8;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        REQUIRE(h.n_levels() == 2);
        CHECK(h.levels[1].K.nrows >= 28);
        CHECK(h.levels[1].K.nrows <= 36);
    }

    SECTION("level sizes strictly decrease and respect the galerkin identity") {
        const Fixture fx = laplacian_2d(16);
        AmgOptions opt;
        opt.max_levels = 4;
        opt.coarse_cap = 8;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        REQUIRE(h.n_levels() >= 3);
        for (index_t l = 0; l + 1 < h.n_levels(); ++l) {
            CHECK(h.levels[l + 1].K.nrows < h.levels[l].K.nrows);
            const CsrMatrix expected = galerkin_triple_product(h.levels[l].P, h.levels[l].K);
            double scale = 0.0;
            for (double v : expected.values) scale = std::max(scale, std::abs(v));
            for (index_t i = 0; i < expected.nrows; ++i)
                for (index_t k = expected.row_offsets[i]; k < expected.row_offsets[i + 1]; ++k) {
                    const double got = h.levels[l + 1].K.at(i, expected.col_indices[k]);
                    CHECK(got == Catch::Approx(expected.values[k]).margin(1e-10 * scale));
                }
        }
    }
}

TEST_CASE("v-cycle") {
    SECTION("exact solution is a fixed point") {
        const Fixture fx = laplacian_2d(8);
        AmgOptions opt;
        opt.max_levels = 2;
        opt.coarse_cap = 8;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        const Vector exact = dense_solve(csr_to_dense(fx.K), fx.f);
        const Vector u = v_cycle(h, fx.f, exact);
        for (index_t i = 0; i < u.size(); ++i)
            CHECK(u[i] == Catch::Approx(exact[i]).margin(1e-12 * (1.0 + norm2(exact))));
    }

    SECTION("two-level cycle error matches the dense propagator") {
        for (index_t r1 : {index_t{1}, index_t{2}}) {
            const index_t r2 = 1;
            const Fixture fx = laplacian_2d(8);
            AmgOptions opt;
            opt.max_levels = 2;
            opt.coarse_cap = 8;
            opt.pre_sweeps = r1;
            opt.post_sweeps = r2;
            const MultigridHierarchy h = build_hierarchy(fx.K, opt);
            REQUIRE(h.n_levels() == 2);
            const DenseMatrix E = dense_two_grid(fx.K, csr_to_dense(h.levels[0].P), r1, r2);
            const Vector exact = dense_solve(csr_to_dense(fx.K), fx.f);
            Rng rng(71);
            for (int t = 0; t < 5; ++t) {
                const Vector e0 = rng.normal_vector(fx.K.nrows);
                Vector u0 = exact;
                axpy(-1.0, e0, u0);
                const Vector u1 = v_cycle(h, fx.f, u0);
                Vector e1 = exact;
                axpy(-1.0, u1, e1);
                const Vector expected = matvec(E, e0);
                for (index_t i = 0; i < e1.size(); ++i)
                    CHECK(e1[i] == Catch::Approx(expected[i]).margin(1e-10 * (1.0 + norm2(e0))));
            }
        }
    }

    SECTION("residual decreases across cycles") {
        const Fixture fx = laplacian_2d(12);
        AmgOptions opt;
        opt.max_levels = 3;
        opt.coarse_cap = 16;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        Vector u(fx.K.nrows, 0.0);
        Vector r;
        residual(fx.K, fx.f, u, r);
        double prev = norm2(r);
        for (int c = 0; c < 5; ++c) {
            u = v_cycle(h, fx.f, u);
            residual(fx.K, fx.f, u, r);
            const double cur = norm2(r);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("amg solve") {
    SECTION("converges on the 2d stencil") {
        const Fixture fx = laplacian_2d(12);
        AmgOptions opt;
        opt.max_levels = 2;
        opt.coarse_cap = 16;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        auto [u, rep] = amg_solve(h, fx.f, {}, 1e-8, 200);
        CHECK(rep.converged);
        CHECK(rep.final_residual() <= 1e-8);
    }

    SECTION("zero cycles when starting from the solution") {
        const Fixture fx = laplacian_1d(20);
        AmgOptions opt;
        const MultigridHierarchy h = build_hierarchy(fx.K, opt);
        const Vector exact = dense_solve(csr_to_dense(fx.K), fx.f);
        auto [u, rep] = amg_solve(h, fx.f, exact, 1e-8, 100);
        CHECK(rep.cycles == 0);
        CHECK(rep.converged);
    }

    SECTION("level count changes cost, not the answer") {
        const Fixture fx = laplacian_2d(14);
        AmgOptions opt2;
        opt2.max_levels = 2;
        opt2.coarse_cap = 16;
        AmgOptions opt3;
        opt3.max_levels = 3;
        opt3.coarse_cap = 16;
        const double delta = 1e-9;
        auto [u2, rep2] = amg_solve(build_hierarchy(fx.K, opt2), fx.f, {}, delta, 500);
        auto [u3, rep3] = amg_solve(build_hierarchy(fx.K, opt3), fx.f, {}, delta, 500);
        REQUIRE(rep2.converged);
        REQUIRE(rep3.converged);
        Vector diff = u2;
        axpy(-1.0, u3, diff);
        CHECK(norm2(diff) / norm2(u2) <= 10.0 * delta);
    }

    SECTION("asymptotic residual reduction below one on fixtures") {
        for (const Fixture& fx :
             {laplacian_1d(48), laplacian_2d(10), anisotropic_2d(8, 0.01), random_spd(60, 0.1, 5)}) {
            INFO(fx.name);
            AmgOptions opt;
            opt.max_levels = 2;
            opt.coarse_cap = 8;
            const MultigridHierarchy h = build_hierarchy(fx.K, opt);
            auto [u, rep] = amg_solve(h, fx.f, {}, 1e-10, 400);
            REQUIRE(rep.converged);
            const auto& hist = rep.residual_history;
            REQUIRE(hist.size() >= 3);
            const double rho = hist[hist.size() - 1] / hist[hist.size() - 2];
            CHECK(rho < 1.0);
        }
    }
}

TEST_CASE("amg preconditioner application is an SPD operator") {
    const Fixture fx = laplacian_2d(5);
    const index_t n = fx.K.nrows;
    AmgOptions opt;
    opt.max_levels = 2;
    opt.coarse_cap = 6;
    auto h = std::make_shared<const MultigridHierarchy>(build_hierarchy(fx.K, opt));
    const AmgPreconditioner B(h);
    DenseMatrix Bd(n, n);
    for (index_t j = 0; j < n; ++j) {
        Vector ej(n, 0.0), col;
        ej[j] = 1.0;
        B.apply(ej, col);
        for (index_t i = 0; i < n; ++i) Bd(i, j) = col[i];
    }
    for (index_t i = 0; i < n; ++i)
        for (index_t j = i + 1; j < n; ++j)
            CHECK(Bd(i, j) == Catch::Approx(Bd(j, i)).margin(1e-10 * max_abs(Bd)));
    const EighResult eig = dense_eigh_spd(Bd);
    CHECK(eig.eigenvalues.back() > 0.0);
}

TEST_CASE("multigrid preconditioned pcg") {
    SECTION("single-level hierarchy is an exact preconditioner") {
        const Fixture fx = laplacian_2d(6);
        AmgOptions opt;
        opt.max_levels = 1;
        auto h = std::make_shared<const MultigridHierarchy>(build_hierarchy(fx.K, opt));
        auto [u, rep] = amg_preconditioned_pcg(fx.K, fx.f, h, {}, 1e-10);
        CHECK(rep.converged);
        CHECK(rep.cycles == 1);
    }

    SECTION("needs no more iterations than standalone cycles at the same tolerance") {
        const Fixture fx = laplacian_2d(12);
        AmgOptions opt;
        opt.max_levels = 2;
        opt.coarse_cap = 16;
        auto h = std::make_shared<const MultigridHierarchy>(build_hierarchy(fx.K, opt));
        const double delta = 1e-8;
        auto [up, repp] = amg_preconditioned_pcg(fx.K, fx.f, h, {}, delta);
        auto [ua, repa] = amg_solve(*h, fx.f, {}, delta, 10000);
        REQUIRE(repp.converged);
        REQUIRE(repa.converged);
        CHECK(repp.cycles <= repa.cycles);
    }
}

TEST_CASE("hierarchy summary reports dims and complexity") {
    const Fixture fx = laplacian_2d(10);
    AmgOptions opt;
    opt.max_levels = 3;
    opt.coarse_cap = 10;
    const MultigridHierarchy h = build_hierarchy(fx.K, opt);
    const nlohmann::json summary = hierarchy_summary(h);
    CHECK(summary.at("levels").size() == h.n_levels());
    CHECK(summary.at("operator_complexity").get<double>() >= 1.0);
}
