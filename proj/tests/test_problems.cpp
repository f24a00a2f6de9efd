#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "pod2g/core/dense_solve.hpp"
#include "pod2g/problems.hpp"

using namespace pod2g;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Independent dense plane-strain assembly: shape-function gradients from
/// solving the nodal coordinate systems, one-point quadrature per triangle.
DenseMatrix dense_plane_strain_full(index_t res, double E, double nu) {
    const index_t nx = res + 1;
    const index_t n_nodes = nx * nx;
    const double h = 1.0 / static_cast<double>(res);
    auto node = [nx](index_t ix, index_t iy) { return iy * nx + ix; };
    DenseMatrix K(2 * n_nodes, 2 * n_nodes);

    const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double D[3][3] = {{c * (1.0 - nu), c * nu, 0.0},
                            {c * nu, c * (1.0 - nu), 0.0},
                            {0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0}};

    auto add_tri = [&](std::array<index_t, 3> n, std::array<double, 3> x,
                       std::array<double, 3> y) {
        // gradient of shape i solves [1 xj yj] a = e_i
        DenseMatrix coords(3, 3);
        for (index_t j = 0; j < 3; ++j) {
            coords(j, 0) = 1.0;
            coords(j, 1) = x[j];
            coords(j, 2) = y[j];
        }
        const DenseLu lu(coords);
        double grad[3][2];
        for (index_t i = 0; i < 3; ++i) {
            Vector rhs(3, 0.0);
            rhs[i] = 1.0;
            const Vector abc = lu.solve(rhs);
            grad[i][0] = abc[1];
            grad[i][1] = abc[2];
        }
        const double area =
            0.5 * std::abs((x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]));
        for (index_t a = 0; a < 3; ++a)
            for (index_t b = 0; b < 3; ++b)
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q) {
                        double Ba[3] = {0, 0, 0}, Bb[3] = {0, 0, 0};
                        Ba[p == 0 ? 0 : 1] = grad[a][p];
                        Ba[2] = grad[a][1 - p];
                        Bb[q == 0 ? 0 : 1] = grad[b][q];
                        Bb[2] = grad[b][1 - q];
                        double k = 0.0;
                        for (int r = 0; r < 3; ++r)
                            for (int s = 0; s < 3; ++s) k += Ba[r] * D[r][s] * Bb[s];
                        K(2 * n[a] + p, 2 * n[b] + q) += area * k;
                    }
    };

    for (index_t iy = 0; iy < res; ++iy)
        for (index_t ix = 0; ix < res; ++ix) {
            const double x0 = ix * h, y0 = iy * h;
            add_tri({node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1)},
                    {x0, x0 + h, x0 + h}, {y0, y0, y0 + h});
            add_tri({node(ix, iy), node(ix + 1, iy + 1), node(ix, iy + 1)},
                    {x0, x0 + h, x0}, {y0, y0 + h, y0 + h});
        }
    return K;
}

}  // namespace

TEST_CASE("lame conversion") {
    SECTION("reference values") {
        const LameParams lp = lame_from_engineering(2000.0, 0.3);
        CHECK(lp.mu == Catch::Approx(769.2307692307693));
        CHECK(lp.lambda == Catch::Approx(1153.8461538461538));
    }
    SECTION("zero poisson ratio") {
        const LameParams lp = lame_from_engineering(1000.0, 0.0);
        CHECK(lp.mu == Catch::Approx(500.0));
        CHECK(lp.lambda == 0.0);
    }
    SECTION("homogeneous of degree one in E") {
        const LameParams a = lame_from_engineering(2000.0, 0.3);
        const LameParams b = lame_from_engineering(2600.0, 0.3);
        CHECK(b.mu == Catch::Approx(1.3 * a.mu));
        CHECK(b.lambda == Catch::Approx(1.3 * a.lambda));
    }
    SECTION("incompressible limit rejected") {
        CHECK_THROWS_AS(lame_from_engineering(1000.0, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(lame_from_engineering(-1.0, 0.3), std::invalid_argument);
    }
}

TEST_CASE("plane strain assembly") {
    SECTION("matches the independent dense assembly at resolution 2") {
        const AssembledSystem sys = assemble_plane_strain(2, 2000.0, 0.3, -1000.0);
        const DenseMatrix full = dense_plane_strain_full(2, 2000.0, 0.3);
        // rebuild the reduced dense matrix with the same elimination
        const index_t nx = 3;
        std::vector<index_t> free_dofs;
        for (index_t d = 0; d < 2 * nx * nx; ++d)
            if (d / 2 >= nx) free_dofs.push_back(d);  // bottom row nodes are 0..nx-1
        REQUIRE(free_dofs.size() == sys.K.nrows);
        const double scale = max_abs(full);
        for (index_t i = 0; i < free_dofs.size(); ++i)
            for (index_t j = 0; j < free_dofs.size(); ++j)
                CHECK(sys.K.at(i, j) ==
                      Catch::Approx(full(free_dofs[i], free_dofs[j])).margin(1e-12 * scale));
    }

    SECTION("doubling E halves the solution, doubling P doubles it") {
        const AssembledSystem base = assemble_plane_strain(6, 2000.0, 0.3, -1000.0);
        const AssembledSystem stiff = assemble_plane_strain(6, 4000.0, 0.3, -1000.0);
        const AssembledSystem heavy = assemble_plane_strain(6, 2000.0, 0.3, -2000.0);
        const Vector u = dense_solve(csr_to_dense(base.K), base.f);
        const Vector us = dense_solve(csr_to_dense(stiff.K), stiff.f);
        const Vector uh = dense_solve(csr_to_dense(heavy.K), heavy.f);
        for (index_t i = 0; i < u.size(); ++i) {
            CHECK(us[i] == Catch::Approx(0.5 * u[i]).margin(1e-12 * norm2(u)));
            CHECK(uh[i] == Catch::Approx(2.0 * u[i]).margin(1e-12 * norm2(u)));
        }
    }

    SECTION("assembled operator is SPD with the load where expected") {
        const AssembledSystem sys = assemble_plane_strain(4, 2000.0, 0.3, -1000.0);
        CHECK(is_symmetric(sys.K));
        const EighResult eig = dense_eigh_spd(csr_to_dense(sys.K));
        CHECK(eig.eigenvalues.back() > 0.0);
        CHECK(sys.f[sys.qoi_dofs[0]] == -1000.0);
        index_t nonzeros = 0;
        for (double v : sys.f) nonzeros += v != 0.0;
        CHECK(nonzeros == 1);
    }

    SECTION("monitored displacement is stable under refinement") {
        double prev = 0.0;
        bool first = true;
        for (index_t res : {index_t{24}, index_t{28}}) {
            const AssembledSystem sys = assemble_plane_strain(res, 2000.0, 0.3, -1000.0);
            const JacobiPreconditioner jacobi(sys.K);
            auto [u, rep] = pcg_solve(sys.K, sys.f, jacobi, {}, 1e-10, 10 * sys.K.nrows);
            REQUIRE(rep.converged);
            const double qoi = u[sys.qoi_dofs[0]];
            if (!first) CHECK(std::abs(qoi - prev) / std::abs(prev) < 0.05);
            first = false;
            prev = qoi;
        }
    }
}

TEST_CASE("biot cube assembly") {
    const ParametricProblem prob = make_biot_problem(2);

    SECTION("zero boundary data gives the homogeneous solution") {
        const AssembledSystem sys =
            assemble_biot_cube(2, 0.30, 1.70, prob.biot_tensor, prob.diffusion, 0.0, 0.0);
        CHECK(norm2(sys.f) == 0.0);
        const Vector u = dense_solve(csr_to_dense(sys.K), sys.f);
        CHECK(norm2(u) == 0.0);
    }

    SECTION("symmetric and positive definite at the mean parameters") {
        const AssembledSystem sys = prob.assemble({0.30, 1.70});
        CHECK(sys.K.nrows == 63);  // 27 nodes, 45 constrained dofs
        CHECK(symmetry_defect(sys.K) <= 1e-12);
        const EighResult eig = dense_eigh_spd(csr_to_dense(sys.K));
        CHECK(eig.eigenvalues.back() > 0.0);
    }

    SECTION("rejects an indefinite diffusion block") {
        auto bad = prob.diffusion;
        bad[0][1] = bad[1][0] = 10.0;  // breaks the 2x2 minor
        CHECK_THROWS_AS(assemble_biot_cube(2, 0.3, 1.7, prob.biot_tensor, bad, 1.0, 0.2),
                        std::invalid_argument);
    }

    SECTION("boundary data enters the right-hand side linearly") {
        const AssembledSystem a =
            assemble_biot_cube(2, 0.3, 1.7, prob.biot_tensor, prob.diffusion, 1.0, 0.2);
        const AssembledSystem b =
            assemble_biot_cube(2, 0.3, 1.7, prob.biot_tensor, prob.diffusion, 2.0, 0.4);
        for (index_t i = 0; i < a.f.size(); ++i)
            CHECK(b.f[i] == Catch::Approx(2.0 * a.f[i]).margin(1e-12 * (1.0 + norm2(a.f))));
    }
}

TEST_CASE("latin hypercube lognormal sampling") {
    SECTION("statistical moments at n=1000") {
        const auto samples = latin_hypercube_lognormal(1000, {{"E", 2000.0, 600.0}}, 42);
        double mean = 0.0;
        for (const Vector& s : samples) mean += s[0];
        mean /= 1000.0;
        double var = 0.0;
        for (const Vector& s : samples) var += (s[0] - mean) * (s[0] - mean);
        var /= 999.0;
        CHECK(std::abs(mean - 2000.0) / 2000.0 < 0.03);
        CHECK(std::abs(std::sqrt(var) - 600.0) / 600.0 < 0.10);
    }

    SECTION("signs follow the mean, support stays one-sided") {
        const auto samples =
            latin_hypercube_lognormal(500, {{"E", 2000.0, 600.0}, {"P", -1000.0, 300.0}}, 7);
        for (const Vector& s : samples) {
            CHECK(s[0] > 0.0);
            CHECK(s[1] < 0.0);
        }
    }

    SECTION("each stratum holds exactly one sample") {
        const index_t n = 64;
        const double m = 2000.0, sd = 600.0;
        const auto samples = latin_hypercube_lognormal(n, {{"E", m, sd}}, 11);
        const double sigma2 = std::log(1.0 + sd * sd / (m * m));
        const double mu_ln = std::log(m) - sigma2 / 2.0;
        std::vector<int> counts(n, 0);
        for (const Vector& s : samples) {
            const double z = (std::log(s[0]) - mu_ln) / std::sqrt(sigma2);
            const double u = normal_cdf(z);
            const index_t stratum = std::min<index_t>(static_cast<index_t>(u * n), n - 1);
            counts[stratum]++;
        }
        for (int c : counts) CHECK(c == 1);
    }

    SECTION("same seed reproduces identical samples") {
        const auto a = latin_hypercube_lognormal(50, {{"E", 2000.0, 600.0}}, 3);
        const auto b = latin_hypercube_lognormal(50, {{"E", 2000.0, 600.0}}, 3);
        for (index_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    SECTION("zero mean rejected") {
        CHECK_THROWS_AS(latin_hypercube_lognormal(10, {{"x", 0.0, 1.0}}, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("snapshot generation") {
    const ParametricProblem prob = make_its_problem(8);
    const auto params = latin_hypercube_lognormal(12, prob.parameters, 5);
    const SnapshotSet set = generate_snapshots(prob, params, 1e-10, 2);
    REQUIRE(set.size() == 12);

    SECTION("every stored residual satisfies the tolerance") {
        for (index_t i = 0; i < set.size(); ++i) {
            const AssembledSystem sys = prob.assemble(set.params[i]);
            Vector r;
            residual(sys.K, sys.f, set.solutions[i], r);
            CHECK(norm2(r) <= 1e-10 * norm2(sys.f));
        }
    }

    SECTION("worker count does not change the artifact") {
        const SnapshotSet serial = generate_snapshots(prob, params, 1e-10, 1);
        for (index_t i = 0; i < set.size(); ++i) CHECK(serial.solutions[i] == set.solutions[i]);
    }

    SECTION("persistence round trip") {
        const auto dir = std::filesystem::temp_directory_path() / "pod2g_snap_test";
        save_snapshot_set(dir, set, prob, 5);
        const SnapshotSet back = load_snapshot_set(dir);
        REQUIRE(back.size() == set.size());
        for (index_t i = 0; i < set.size(); ++i) {
            CHECK(back.params[i] == set.params[i]);
            CHECK(back.solutions[i] == set.solutions[i]);
        }
        CHECK(back.problem_hash == set.problem_hash);
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("problem descriptors distinguish configurations") {
    CHECK(make_its_problem(16).descriptor_hash() != make_its_problem(17).descriptor_hash());
    CHECK(make_its_problem(16).descriptor_hash() != make_biot_problem(16).descriptor_hash());
    CHECK(make_its_problem(16).descriptor_hash() == make_its_problem(16).descriptor_hash());
}
