#include <catch2/catch_amalgamated.hpp>

#include "pod2g/core/dense_solve.hpp"
#include "pod2g/fixtures.hpp"

using namespace pod2g;

TEST_CASE("laplacian_1d(3) has the closed-form spectrum") {
    const Fixture fx = laplacian_1d(3);
    const EighResult eig = dense_eigh_spd(csr_to_dense(fx.K));
    CHECK(eig.eigenvalues[0] == Catch::Approx(2.0 + std::sqrt(2.0)));
    CHECK(eig.eigenvalues[1] == Catch::Approx(2.0));
    CHECK(eig.eigenvalues[2] == Catch::Approx(2.0 - std::sqrt(2.0)));
}

TEST_CASE("all fixtures are SPD") {
    for (const Fixture& fx : {laplacian_1d(16), laplacian_2d(6), anisotropic_2d(6, 0.01),
                              random_spd(40, 0.2, 7)}) {
        INFO(fx.name);
        CHECK(is_symmetric(fx.K));
        const EighResult eig = dense_eigh_spd(csr_to_dense(fx.K));
        CHECK(eig.eigenvalues.back() > 0.0);
    }
}

TEST_CASE("random_spd is reproducible bitwise") {
    const Fixture a = random_spd(25, 0.3, 1234);
    const Fixture b = random_spd(25, 0.3, 1234);
    CHECK(a.K.values == b.K.values);
    CHECK(a.K.col_indices == b.K.col_indices);
    CHECK(a.f == b.f);
    const Fixture c = random_spd(25, 0.3, 1235);
    CHECK(a.K.values != c.K.values);
}

TEST_CASE("anisotropic stencil couples weakly across the stiff direction") {
    const Fixture fx = anisotropic_2d(5, 0.01);
    // horizontal neighbor entry is -eps, vertical is -1
    CHECK(fx.K.at(12, 11) == Catch::Approx(-0.01));
    CHECK(fx.K.at(12, 7) == Catch::Approx(-1.0));
}
