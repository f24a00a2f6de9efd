#pragma once

#include <array>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pod2g/amg.hpp"
#include "pod2g/core/csr.hpp"
#include "pod2g/core/io.hpp"
#include "pod2g/core/parallel.hpp"
#include "pod2g/core/rng.hpp"
#include "pod2g/krylov.hpp"

namespace pod2g {

// ---------------------------------------------------------------------------
// Material parameters
// ---------------------------------------------------------------------------

struct LameParams {
    double mu;
    double lambda;
};

/// mu = E / (2(1+nu)), lambda = E nu / ((1+nu)(1-2nu))
inline LameParams lame_from_engineering(double young_modulus, double poisson_ratio) {
    require(young_modulus > 0.0, "lame_from_engineering: E must be positive");
    require(poisson_ratio >= 0.0 && poisson_ratio < 0.5,
            "lame_from_engineering: nu must lie in [0, 0.5)");
    const double mu = young_modulus / (2.0 * (1.0 + poisson_ratio));
    const double lambda = young_modulus * poisson_ratio /
                          ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    return {mu, lambda};
}

// ---------------------------------------------------------------------------
// Assembled systems
// ---------------------------------------------------------------------------

struct AssembledSystem {
    CsrMatrix K;
    Vector f;
    DofLayout layout;             // node/component structure of the free dofs
    std::vector<index_t> qoi_dofs;  // monitored displacement dofs (reduced numbering)
    index_t full_dim = 0;         // dof count before constraint elimination
};

namespace detail {

/// Row/column removal of Dirichlet dofs. Prescribed values fold into the
/// right-hand side: f_free -= K[free, constrained] * g.
struct ConstraintEliminator {
    std::vector<long> reduced_of;  // -1 for constrained dofs
    std::vector<double> prescribed;
    index_t n_free = 0;

    ConstraintEliminator(index_t full_dim, const std::map<index_t, double>& dirichlet)
        : reduced_of(full_dim, -1), prescribed(full_dim, 0.0) {
        for (index_t d = 0; d < full_dim; ++d) {
            auto it = dirichlet.find(d);
            if (it == dirichlet.end())
                reduced_of[d] = static_cast<long>(n_free++);
            else
                prescribed[d] = it->second;
        }
    }

    AssembledSystem reduce(index_t full_dim,
                           const std::vector<std::tuple<index_t, index_t, double>>& entries,
                           Vector f_full) const {
        Vector f(n_free, 0.0);
        for (index_t d = 0; d < full_dim; ++d)
            if (reduced_of[d] >= 0) f[static_cast<index_t>(reduced_of[d])] = f_full[d];
        std::vector<std::tuple<index_t, index_t, double>> reduced;
        reduced.reserve(entries.size());
        for (const auto& [i, j, v] : entries) {
            const long ri = reduced_of[i], rj = reduced_of[j];
            if (ri >= 0 && rj >= 0)
                reduced.emplace_back(static_cast<index_t>(ri), static_cast<index_t>(rj), v);
            else if (ri >= 0 && rj < 0)
                f[static_cast<index_t>(ri)] -= v * prescribed[j];
        }
        AssembledSystem sys;
        sys.full_dim = full_dim;
        sys.K = csr_from_coo(n_free, n_free, std::move(reduced));
        sys.K.symmetric_hint = true;
        sys.f = std::move(f);
        return sys;
    }
};

}  // namespace detail

/// Plane-strain elasticity on the unit square: structured right-triangle mesh,
/// bottom edge clamped, point load at the top-center node pointing along the
/// load's sign (negative P pushes down). K scales linearly in E, f in P.
inline AssembledSystem assemble_plane_strain(index_t resolution, double young_modulus,
                                             double poisson_ratio, double point_load) {
    require(resolution >= 2, "assemble_plane_strain: resolution >= 2 required");
    lame_from_engineering(young_modulus, poisson_ratio);  // validates E and nu

    const index_t nx = resolution + 1;
    const index_t n_nodes = nx * nx;
    const double h = 1.0 / static_cast<double>(resolution);
    auto node_id = [nx](index_t ix, index_t iy) { return iy * nx + ix; };

    const double c = young_modulus / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    const double d11 = c * (1.0 - poisson_ratio);
    const double d12 = c * poisson_ratio;
    const double d33 = c * (1.0 - 2.0 * poisson_ratio) / 2.0;

    std::vector<std::tuple<index_t, index_t, double>> entries;
    entries.reserve(n_nodes * 18);

    auto add_triangle = [&](std::array<index_t, 3> n, std::array<double, 3> x,
                            std::array<double, 3> y) {
        const double area2 = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
        const double area = 0.5 * area2;
        const std::array<double, 3> b{y[1] - y[2], y[2] - y[0], y[0] - y[1]};
        const std::array<double, 3> cc{x[2] - x[1], x[0] - x[2], x[1] - x[0]};
        // Ke = area * B^T D B with B the constant-strain operator
        for (index_t a = 0; a < 3; ++a)
            for (index_t bN = 0; bN < 3; ++bN) {
                const double Ba[3][2] = {{b[a], 0.0}, {0.0, cc[a]}, {cc[a], b[a]}};
                const double Bb[3][2] = {{b[bN], 0.0}, {0.0, cc[bN]}, {cc[bN], b[bN]}};
                for (int p = 0; p < 2; ++p)
                    for (int q = 0; q < 2; ++q) {
                        const double k =
                            (Ba[0][p] * (d11 * Bb[0][q] + d12 * Bb[1][q]) +
                             Ba[1][p] * (d12 * Bb[0][q] + d11 * Bb[1][q]) +
                             Ba[2][p] * d33 * Bb[2][q]) /
                            (area2 * area2) * area;
                        entries.emplace_back(2 * n[a] + p, 2 * n[bN] + q, k);
                    }
            }
    };

    for (index_t iy = 0; iy < resolution; ++iy)
        for (index_t ix = 0; ix < resolution; ++ix) {
            const index_t n00 = node_id(ix, iy), n10 = node_id(ix + 1, iy);
            const index_t n01 = node_id(ix, iy + 1), n11 = node_id(ix + 1, iy + 1);
            const double x0 = ix * h, y0 = iy * h;
            add_triangle({n00, n10, n11}, {x0, x0 + h, x0 + h}, {y0, y0, y0 + h});
            add_triangle({n00, n11, n01}, {x0, x0 + h, x0}, {y0, y0 + h, y0 + h});
        }

    const index_t full_dim = 2 * n_nodes;
    Vector f_full(full_dim, 0.0);
    const index_t load_node = node_id(resolution / 2, resolution);
    f_full[2 * load_node + 1] = point_load;

    std::map<index_t, double> dirichlet;
    for (index_t ix = 0; ix < nx; ++ix) {
        dirichlet[2 * node_id(ix, 0)] = 0.0;
        dirichlet[2 * node_id(ix, 0) + 1] = 0.0;
    }

    const detail::ConstraintEliminator elim(full_dim, dirichlet);
    AssembledSystem sys = elim.reduce(full_dim, entries, std::move(f_full));

    // compact node numbering over the free dofs (2 per unclamped node)
    std::vector<long> node_of(n_nodes, -1);
    index_t next_node = 0;
    sys.layout.node.resize(sys.K.nrows);
    sys.layout.component.resize(sys.K.nrows);
    for (index_t d = 0; d < full_dim; ++d) {
        if (elim.reduced_of[d] < 0) continue;
        const index_t nd = d / 2;
        if (node_of[nd] < 0) node_of[nd] = static_cast<long>(next_node++);
        sys.layout.node[static_cast<index_t>(elim.reduced_of[d])] = static_cast<index_t>(node_of[nd]);
        sys.layout.component[static_cast<index_t>(elim.reduced_of[d])] = d % 2;
    }
    sys.qoi_dofs = {static_cast<index_t>(elim.reduced_of[2 * load_node + 1])};
    return sys;
}

/// Coupled displacement-pressure system on a structured hexahedral unit cube:
/// trilinear elements for both fields, bottom face clamped, vertical
/// displacement prescribed on the top face, pressure prescribed on the left
/// face. The coupling blocks carry a minus sign on both sides, which keeps the
/// assembled operator symmetric and, for the tensors used here, positive
/// definite after elimination.
inline AssembledSystem assemble_biot_cube(index_t resolution, double mu, double lambda,
                                          const std::array<std::array<double, 3>, 3>& biot_tensor,
                                          const std::array<std::array<double, 3>, 3>& diffusion,
                                          double p_left, double u_top) {
    require(resolution >= 2, "assemble_biot_cube: resolution >= 2 required");
    require(mu > 0.0 && lambda > 0.0, "assemble_biot_cube: Lame constants must be positive");
    {
        const double a = diffusion[0][0], b = diffusion[0][1], dct = diffusion[1][1];
        if (a < 0.0 || dct < 0.0 || a * dct - b * b < -1e-14)
            throw std::invalid_argument(
                "assemble_biot_cube: diffusion tensor upper 2x2 block not positive semidefinite");
    }

    const index_t nx = resolution + 1;
    const index_t n_nodes = nx * nx * nx;
    const double h = 1.0 / static_cast<double>(resolution);
    auto node_id = [nx](index_t ix, index_t iy, index_t iz) {
        return (iz * nx + iy) * nx + ix;
    };

    // elastic matrix, engineering shear strains
    double De[6][6] = {};
    De[0][0] = De[1][1] = De[2][2] = lambda + 2.0 * mu;
    De[0][1] = De[0][2] = De[1][0] = De[1][2] = De[2][0] = De[2][1] = lambda;
    De[3][3] = De[4][4] = De[5][5] = mu;

    // Biot tensor contracted with symmetric strains
    const double av[6] = {biot_tensor[0][0],
                          biot_tensor[1][1],
                          biot_tensor[2][2],
                          0.5 * (biot_tensor[0][1] + biot_tensor[1][0]),
                          0.5 * (biot_tensor[1][2] + biot_tensor[2][1]),
                          0.5 * (biot_tensor[0][2] + biot_tensor[2][0])};

    // local trilinear element, 2x2x2 Gauss quadrature
    const double gp = 1.0 / std::sqrt(3.0);
    const int sign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                            {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
    const double det_j = (h / 2.0) * (h / 2.0) * (h / 2.0);
    const double inv_j = 2.0 / h;

    double Kuu[24][24] = {};
    double Cup[24][8] = {};
    double Kpp[8][8] = {};
    for (int gx = -1; gx <= 1; gx += 2)
        for (int gy = -1; gy <= 1; gy += 2)
            for (int gz = -1; gz <= 1; gz += 2) {
                const double xi = gx * gp, eta = gy * gp, zeta = gz * gp;
                double N[8], dNdx[8][3];
                for (int a = 0; a < 8; ++a) {
                    const double sx = sign[a][0], sy = sign[a][1], sz = sign[a][2];
                    N[a] = (1 + sx * xi) * (1 + sy * eta) * (1 + sz * zeta) / 8.0;
                    dNdx[a][0] = inv_j * sx * (1 + sy * eta) * (1 + sz * zeta) / 8.0;
                    dNdx[a][1] = inv_j * sy * (1 + sx * xi) * (1 + sz * zeta) / 8.0;
                    dNdx[a][2] = inv_j * sz * (1 + sx * xi) * (1 + sy * eta) / 8.0;
                }
                double B[6][24] = {};
                for (int a = 0; a < 8; ++a) {
                    B[0][3 * a + 0] = dNdx[a][0];
                    B[1][3 * a + 1] = dNdx[a][1];
                    B[2][3 * a + 2] = dNdx[a][2];
                    B[3][3 * a + 0] = dNdx[a][1];
                    B[3][3 * a + 1] = dNdx[a][0];
                    B[4][3 * a + 1] = dNdx[a][2];
                    B[4][3 * a + 2] = dNdx[a][1];
                    B[5][3 * a + 0] = dNdx[a][2];
                    B[5][3 * a + 2] = dNdx[a][0];
                }
                double DB[6][24] = {};
                for (int r = 0; r < 6; ++r)
                    for (int cidx = 0; cidx < 24; ++cidx) {
                        double s = 0.0;
                        for (int k = 0; k < 6; ++k) s += De[r][k] * B[k][cidx];
                        DB[r][cidx] = s;
                    }
                for (int r = 0; r < 24; ++r)
                    for (int cidx = 0; cidx < 24; ++cidx) {
                        double s = 0.0;
                        for (int k = 0; k < 6; ++k) s += B[k][r] * DB[k][cidx];
                        Kuu[r][cidx] += det_j * s;
                    }
                double aB[24];
                for (int cidx = 0; cidx < 24; ++cidx) {
                    double s = 0.0;
                    for (int k = 0; k < 6; ++k) s += av[k] * B[k][cidx];
                    aB[cidx] = s;
                }
                for (int r = 0; r < 24; ++r)
                    for (int b = 0; b < 8; ++b) Cup[r][b] += det_j * aB[r] * N[b];
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) {
                        double s = 0.0;
                        for (int p = 0; p < 3; ++p)
                            for (int q = 0; q < 3; ++q)
                                s += dNdx[a][p] * diffusion[p][q] * dNdx[b][q];
                        Kpp[a][b] += det_j * s;
                    }
            }

    const index_t full_dim = 4 * n_nodes;
    std::vector<std::tuple<index_t, index_t, double>> entries;
    entries.reserve(resolution * resolution * resolution * 1024);
    for (index_t iz = 0; iz < resolution; ++iz)
        for (index_t iy = 0; iy < resolution; ++iy)
            for (index_t ix = 0; ix < resolution; ++ix) {
                const index_t corner[8] = {
                    node_id(ix, iy, iz),         node_id(ix + 1, iy, iz),
                    node_id(ix + 1, iy + 1, iz), node_id(ix, iy + 1, iz),
                    node_id(ix, iy, iz + 1),     node_id(ix + 1, iy, iz + 1),
                    node_id(ix + 1, iy + 1, iz + 1), node_id(ix, iy + 1, iz + 1)};
                for (int a = 0; a < 8; ++a)
                    for (int b = 0; b < 8; ++b) {
                        for (int p = 0; p < 3; ++p)
                            for (int q = 0; q < 3; ++q)
                                entries.emplace_back(4 * corner[a] + p, 4 * corner[b] + q,
                                                     Kuu[3 * a + p][3 * b + q]);
                        for (int p = 0; p < 3; ++p) {
                            entries.emplace_back(4 * corner[a] + p, 4 * corner[b] + 3,
                                                 -Cup[3 * a + p][b]);
                            entries.emplace_back(4 * corner[b] + 3, 4 * corner[a] + p,
                                                 -Cup[3 * a + p][b]);
                        }
                        entries.emplace_back(4 * corner[a] + 3, 4 * corner[b] + 3, Kpp[a][b]);
                    }
            }

    std::map<index_t, double> dirichlet;
    for (index_t iy = 0; iy < nx; ++iy)
        for (index_t ix = 0; ix < nx; ++ix) {
            const index_t bottom = node_id(ix, iy, 0);
            dirichlet[4 * bottom] = 0.0;
            dirichlet[4 * bottom + 1] = 0.0;
            dirichlet[4 * bottom + 2] = 0.0;
            dirichlet[4 * node_id(ix, iy, resolution) + 2] = u_top;
        }
    for (index_t iz = 0; iz < nx; ++iz)
        for (index_t iy = 0; iy < nx; ++iy) dirichlet[4 * node_id(0, iy, iz) + 3] = p_left;

    const detail::ConstraintEliminator elim(full_dim, dirichlet);
    AssembledSystem sys = elim.reduce(full_dim, entries, Vector(full_dim, 0.0));

    std::vector<long> node_of(n_nodes, -1);
    index_t next_node = 0;
    sys.layout.node.resize(sys.K.nrows);
    sys.layout.component.resize(sys.K.nrows);
    for (index_t d = 0; d < full_dim; ++d) {
        if (elim.reduced_of[d] < 0) continue;
        const index_t nd = d / 4;
        if (node_of[nd] < 0) node_of[nd] = static_cast<long>(next_node++);
        sys.layout.node[static_cast<index_t>(elim.reduced_of[d])] = static_cast<index_t>(node_of[nd]);
        sys.layout.component[static_cast<index_t>(elim.reduced_of[d])] = d % 4;
    }

    // monitored node: center of the free right face
    const index_t monitored = node_id(resolution, resolution / 2, resolution / 2);
    sys.qoi_dofs = {static_cast<index_t>(elim.reduced_of[4 * monitored]),
                    static_cast<index_t>(elim.reduced_of[4 * monitored + 1]),
                    static_cast<index_t>(elim.reduced_of[4 * monitored + 2])};
    return sys;
}

// ---------------------------------------------------------------------------
// Parametrized problems
// ---------------------------------------------------------------------------

enum class ProblemKind { PlaneStrainElasticity2D, BiotCube3D };

struct LognormalParam {
    std::string name;
    double mean;
    double stddev;
};

struct ParametricProblem {
    ProblemKind kind = ProblemKind::PlaneStrainElasticity2D;
    index_t resolution = 16;
    std::vector<LognormalParam> parameters;

    // fixed data
    double poisson_ratio = 0.3;  // elasticity
    std::array<std::array<double, 3>, 3> biot_tensor{};
    std::array<std::array<double, 3>, 3> diffusion{};
    double p_left = 1.0;
    double u_top = 0.20;

    AssembledSystem assemble(const Vector& theta) const {
        require(theta.size() == parameters.size(), "ParametricProblem: theta size mismatch");
        if (kind == ProblemKind::PlaneStrainElasticity2D)
            return assemble_plane_strain(resolution, theta[0], poisson_ratio, theta[1]);
        return assemble_biot_cube(resolution, theta[0], theta[1], biot_tensor, diffusion, p_left,
                                  u_top);
    }

    std::string name() const {
        return kind == ProblemKind::PlaneStrainElasticity2D ? "its" : "biot";
    }

    std::string descriptor() const {
        std::ostringstream os;
        os << name() << ";res=" << resolution;
        for (const auto& p : parameters)
            os << ";" << p.name << "~LN(" << p.mean << "," << p.stddev << ")";
        if (kind == ProblemKind::PlaneStrainElasticity2D) {
            os << ";nu=" << poisson_ratio;
        } else {
            os << ";p_left=" << p_left << ";u_top=" << u_top;
        }
        return os.str();
    }

    std::uint64_t descriptor_hash() const { return fnv1a_hash(descriptor()); }
};

/// Diametral-compression elasticity test: E and P lognormal, nu fixed.
inline ParametricProblem make_its_problem(index_t resolution) {
    ParametricProblem p;
    p.kind = ProblemKind::PlaneStrainElasticity2D;
    p.resolution = resolution;
    p.parameters = {{"E", 2000.0, 600.0}, {"P", -1000.0, 300.0}};
    p.poisson_ratio = 0.3;
    return p;
}

/// Poroelastic cube: mu and lambda lognormal, fixed coupling tensors.
inline ParametricProblem make_biot_problem(index_t resolution) {
    ParametricProblem p;
    p.kind = ProblemKind::BiotCube3D;
    p.resolution = resolution;
    p.parameters = {{"mu", 0.30, 0.09}, {"lambda", 1.70, 0.51}};
    p.biot_tensor = {{{0.13, 0.13, 0.13}, {0.09, 0.09, 0.09}, {0.0, 0.0, 0.0}}};
    p.diffusion = {{{2.0, 0.2, 0.0}, {0.2, 2.0, 0.0}, {0.0, 0.0, 0.5}}};
    p.p_left = 1.0;
    p.u_top = 0.20;
    return p;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Stratified lognormal samples: per dimension, each of the n strata of (0,1)
/// receives exactly one draw, pushed through the inverse normal CDF. The
/// underlying normal moments match the physical mean and standard deviation;
/// the sign of the mean is reapplied after exponentiation.
inline std::vector<Vector> latin_hypercube_lognormal(index_t n_samples,
                                                     const std::vector<LognormalParam>& dists,
                                                     std::uint64_t seed) {
    require(n_samples >= 1, "latin_hypercube_lognormal: n_samples >= 1 required");
    require(!dists.empty(), "latin_hypercube_lognormal: no distributions");
    Rng rng(seed);
    std::vector<Vector> samples(n_samples, Vector(dists.size()));
    for (index_t dim = 0; dim < dists.size(); ++dim) {
        const auto& dist = dists[dim];
        require(dist.mean != 0.0, "latin_hypercube_lognormal: zero mean for " + dist.name);
        require(dist.stddev > 0.0, "latin_hypercube_lognormal: stddev must be positive");
        const double m = std::abs(dist.mean);
        const double sigma2 = std::log(1.0 + (dist.stddev * dist.stddev) / (m * m));
        const double mu_ln = std::log(m) - sigma2 / 2.0;
        const double sigma = std::sqrt(sigma2);
        const double sgn = dist.mean > 0.0 ? 1.0 : -1.0;

        std::vector<index_t> strata(n_samples);
        for (index_t i = 0; i < n_samples; ++i) strata[i] = i;
        rng.shuffle(strata);
        for (index_t i = 0; i < n_samples; ++i) {
            const double u = (static_cast<double>(strata[i]) + rng.uniform_open()) /
                             static_cast<double>(n_samples);
            samples[i][dim] = sgn * std::exp(mu_ln + sigma * normal_icdf(u));
        }
    }
    return samples;
}

/// Unstratified lognormal draws for Monte Carlo streams.
inline Vector sample_lognormal(const std::vector<LognormalParam>& dists, Rng& rng) {
    Vector theta(dists.size());
    for (index_t dim = 0; dim < dists.size(); ++dim) {
        const auto& dist = dists[dim];
        require(dist.mean != 0.0, "sample_lognormal: zero mean for " + dist.name);
        const double m = std::abs(dist.mean);
        const double sigma2 = std::log(1.0 + (dist.stddev * dist.stddev) / (m * m));
        const double mu_ln = std::log(m) - sigma2 / 2.0;
        theta[dim] = (dist.mean > 0.0 ? 1.0 : -1.0) *
                     std::exp(mu_ln + std::sqrt(sigma2) * rng.normal());
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Snapshot generation
// ---------------------------------------------------------------------------

struct SnapshotSet {
    std::vector<Vector> params;
    std::vector<Vector> solutions;
    std::uint64_t problem_hash = 0;

    index_t size() const { return params.size(); }
    index_t dim() const { return solutions.empty() ? 0 : solutions.front().size(); }
};

/// Solve K(theta_i) u = f(theta_i) for every sample with Jacobi-PCG and store
/// the verified solutions. The true (recomputed) residual is checked against
/// the tolerance; a failed sample aborts with its index in the message.
inline SnapshotSet generate_snapshots(const ParametricProblem& problem,
                                      const std::vector<Vector>& params,
                                      double tolerance = 1e-10, index_t jobs = 1) {
    require(!params.empty(), "generate_snapshots: empty parameter list");
    SnapshotSet set;
    set.params = params;
    set.solutions.assign(params.size(), {});
    set.problem_hash = problem.descriptor_hash();

    parallel_for(params.size(), jobs, [&](index_t i) {
        const AssembledSystem sys = problem.assemble(params[i]);
        const JacobiPreconditioner jacobi(sys.K);
        const index_t max_iter = 10 * sys.K.nrows;
        Vector u(sys.K.nrows, 0.0);
        const double fnorm = norm2(sys.f);
        double true_rel = std::numeric_limits<double>::infinity();
        for (double delta : {tolerance, tolerance / 10.0, tolerance / 100.0}) {
            auto [sol, rep] = pcg_solve(sys.K, sys.f, jacobi, u, delta, max_iter);
            u = std::move(sol);
            Vector r;
            residual(sys.K, sys.f, u, r);
            true_rel = fnorm > 0.0 ? norm2(r) / fnorm : norm2(r);
            if (true_rel <= tolerance) break;
        }
        if (true_rel > tolerance)
            throw std::runtime_error("generate_snapshots: sample " + std::to_string(i) +
                                     " failed to reach the snapshot tolerance");
        set.solutions[i] = std::move(u);
    });
    return set;
}

// ---------------------------------------------------------------------------
// Persistence: JSON manifest plus binary parameter/solution blocks
// ---------------------------------------------------------------------------

inline void save_snapshot_set(const std::filesystem::path& dir, const SnapshotSet& set,
                              const ParametricProblem& problem, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    const std::uint64_t params_hash = save_vector_batch(dir / "params", set.params);
    const std::uint64_t solutions_hash = save_vector_batch(dir / "solutions", set.solutions);
    nlohmann::json manifest{{"kind", "snapshot_set"},
                            {"problem", problem.descriptor()},
                            {"problem_fnv1a", set.problem_hash},
                            {"seed", seed},
                            {"count", set.size()},
                            {"dim", set.dim()},
                            {"params_fnv1a", params_hash},
                            {"solutions_fnv1a", solutions_hash}};
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline SnapshotSet load_snapshot_set(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "manifest.json");
    require(ms.good(), "load_snapshot_set: cannot open manifest in " + dir.string());
    nlohmann::json manifest = nlohmann::json::parse(ms);
    require(manifest.value("kind", "") == "snapshot_set", "load_snapshot_set: wrong artifact");
    SnapshotSet set;
    set.params = load_vector_batch(dir / "params").vectors;
    set.solutions = load_vector_batch(dir / "solutions").vectors;
    set.problem_hash = manifest.at("problem_fnv1a").get<std::uint64_t>();
    require(set.params.size() == set.solutions.size(), "load_snapshot_set: ragged artifact");
    return set;
}

}  // namespace pod2g
