#pragma once

#include <chrono>
#include <map>
#include <numeric>

#include <json.hpp>

#include "pod2g/amg.hpp"
#include "pod2g/analysis.hpp"
#include "pod2g/core/parallel.hpp"
#include "pod2g/pod.hpp"
#include "pod2g/problems.hpp"
#include "pod2g/surrogate.hpp"

namespace pod2g {

// ---------------------------------------------------------------------------
// Offline pipeline
// ---------------------------------------------------------------------------

struct OfflineArtifacts {
    SnapshotSet snapshots;
    PodBasis basis;
    SurrogateModel model;
    double wall_time_s = 0.0;

    std::uint64_t snapshot_hash = 0;  // content hash over the solution block
    std::uint64_t basis_hash = 0;
    std::uint64_t model_hash = 0;
};

struct OfflineConfig {
    index_t n_snapshots = 200;
    std::uint64_t seed = 42;
    double snapshot_tolerance = 1e-10;
    double energy_target = 0.9999;
    TrainConfig training;
    index_t jobs = 1;
};

namespace detail {

inline std::uint64_t hash_vectors(const std::vector<Vector>& vs) {
    return fnv1a_hash(encode_vectors(vs));
}

inline std::uint64_t hash_dense(const DenseMatrix& A) {
    std::string buf;
    for (double v : A.data) append_f64le(buf, v);
    return fnv1a_hash(buf);
}

}  // namespace detail

/// Sample the parameter space, solve the snapshots, build the POD basis at
/// the energy target and train the warm-start network, all from one seed.
inline OfflineArtifacts run_offline(const ParametricProblem& problem, const OfflineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    OfflineArtifacts art;
    const auto params = latin_hypercube_lognormal(cfg.n_snapshots, problem.parameters, cfg.seed);
    art.snapshots = generate_snapshots(problem, params, cfg.snapshot_tolerance, cfg.jobs);
    art.basis = compute_pod(art.snapshots.solutions, EnergyTarget{cfg.energy_target});

    TrainConfig training = cfg.training;
    training.seed = cfg.seed;
    art.model = train_mlp(art.snapshots, art.basis, training);

    art.snapshot_hash = detail::hash_vectors(art.snapshots.solutions);
    art.basis_hash = detail::hash_dense(art.basis.phi_r);
    std::string weights;
    for (const auto& W : art.model.mlp.weights)
        for (double v : W.data) append_f64le(weights, v);
    art.model_hash = fnv1a_hash(weights);
    art.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return art;
}

inline void save_offline_artifacts(const std::filesystem::path& dir, const OfflineArtifacts& art,
                                   const ParametricProblem& problem, const OfflineConfig& cfg) {
    std::filesystem::create_directories(dir);
    save_snapshot_set(dir / "snapshots", art.snapshots, problem, cfg.seed);
    save_pod_basis(dir / "basis", art.basis, art.snapshot_hash);
    save_surrogate_model(dir / "model", art.model);
    nlohmann::json js{{"kind", "offline_artifacts"},
                      {"problem", problem.descriptor()},
                      {"seed", cfg.seed},
                      {"n_snapshots", cfg.n_snapshots},
                      {"energy_target", cfg.energy_target},
                      {"snapshot_fnv1a", art.snapshot_hash},
                      {"basis_fnv1a", art.basis_hash},
                      {"model_fnv1a", art.model_hash},
                      {"offline_wall_time_s", art.wall_time_s}};
    write_text_file(dir / "offline.json", js.dump(2) + "\n");
}

inline OfflineArtifacts load_offline_artifacts(const std::filesystem::path& dir) {
    OfflineArtifacts art;
    art.snapshots = load_snapshot_set(dir / "snapshots");
    art.basis = load_pod_basis(dir / "basis");
    art.model = load_surrogate_model(dir / "model");
    art.snapshot_hash = detail::hash_vectors(art.snapshots.solutions);
    art.basis_hash = detail::hash_dense(art.basis.phi_r);
    std::ifstream ms(dir / "offline.json");
    if (ms.good()) {
        const nlohmann::json js = nlohmann::json::parse(ms);
        art.wall_time_s = js.value("offline_wall_time_s", 0.0);
    }
    return art;
}

// ---------------------------------------------------------------------------
// Benchmark sweeps
// ---------------------------------------------------------------------------

struct BenchmarkConfig {
    std::vector<double> tolerances{1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    index_t n_test = 100;
    std::uint64_t seed = 7;
    index_t jobs = 1;
    index_t max_cycles = 100000;
    index_t amg_pre_sweeps = 1;
    index_t amg_post_sweeps = 1;

    void validate() const {
        require(n_test >= 1, "BenchmarkConfig: n_test >= 1 required");
        require(!tolerances.empty(), "BenchmarkConfig: tolerance list empty");
        for (index_t i = 1; i < tolerances.size(); ++i)
            require(tolerances[i] < tolerances[i - 1],
                    "BenchmarkConfig: tolerances must be strictly decreasing");
    }
};

struct BenchmarkCell {
    std::string solver;
    double epsilon = 0.0;
    double mean_cycles = 0.0;
    double mean_time_s = 0.0;
    double speedup = 1.0;  // cycle-count ratio against the baseline row
    index_t failures = 0;
    std::vector<double> cycles;           // raw per-sample counts
    std::vector<double> times_s;          // raw per-sample wall times
    std::vector<double> final_residuals;  // post-hoc audit against epsilon
    std::vector<std::uint8_t> failed;     // per-sample convergence flag
};

struct BenchmarkResult {
    std::string baseline;
    std::vector<BenchmarkCell> cells;

    const BenchmarkCell* find(const std::string& solver, double eps) const {
        for (const auto& c : cells)
            if (c.solver == solver && c.epsilon == eps) return &c;
        return nullptr;
    }
};

namespace detail {

inline void finalize_speedups(BenchmarkResult& result) {
    for (BenchmarkCell& cell : result.cells) {
        const BenchmarkCell* base = result.find(result.baseline, cell.epsilon);
        cell.speedup = (base && cell.mean_cycles > 0.0) ? base->mean_cycles / cell.mean_cycles
                                                        : 1.0;
    }
}

inline void reduce_cells(BenchmarkResult& result, index_t n_test) {
    for (BenchmarkCell& cell : result.cells) {
        cell.failures = std::accumulate(cell.failed.begin(), cell.failed.end(), index_t{0});
        const double ok = static_cast<double>(n_test - cell.failures);
        double cycles = 0.0, time = 0.0;
        for (index_t i = 0; i < n_test; ++i)
            if (!cell.failed[i]) {
                cycles += cell.cycles[i];
                time += cell.times_s[i];
            }
        // means over the converged samples; failures stay visible in the cell
        cell.mean_cycles = ok > 0.0 ? cycles / ok : std::numeric_limits<double>::quiet_NaN();
        cell.mean_time_s = ok > 0.0 ? time / ok : std::numeric_limits<double>::quiet_NaN();
    }
    finalize_speedups(result);
}

inline void init_cells(BenchmarkResult& result, const std::vector<std::string>& roster,
                       const std::vector<double>& tolerances, index_t n_test) {
    for (const std::string& solver : roster)
        for (double eps : tolerances) {
            BenchmarkCell cell;
            cell.solver = solver;
            cell.epsilon = eps;
            cell.cycles.assign(n_test, 0.0);
            cell.times_s.assign(n_test, 0.0);
            cell.final_residuals.assign(n_test, 0.0);
            cell.failed.assign(n_test, 0);
            result.cells.push_back(std::move(cell));
        }
}

}  // namespace detail

/// Stationary-solver sweep: multigrid at several depths against the POD
/// two-grid solver, cold and warm-started. Every solver sees the identical
/// (K, f) sequence; every (solver, tolerance) cell restarts from its u0.
inline BenchmarkResult run_solver_benchmark(const ParametricProblem& problem,
                                            const OfflineArtifacts& art,
                                            const BenchmarkConfig& cfg,
                                            std::vector<index_t> amg_depths = {2, 3, 5}) {
    cfg.validate();
    Rng sampler(cfg.seed);
    std::vector<Vector> thetas;
    for (index_t i = 0; i < cfg.n_test; ++i)
        thetas.push_back(sample_lognormal(problem.parameters, sampler));

    std::vector<std::string> roster;
    for (index_t depth : amg_depths) roster.push_back("amg-" + std::to_string(depth) + "g");
    roster.push_back("pod-2g");
    roster.push_back("pod-2g-sur");

    BenchmarkResult result;
    result.baseline = "amg-" + std::to_string(amg_depths.front()) + "g";
    detail::init_cells(result, roster, cfg.tolerances, cfg.n_test);
    auto cell_of = [&](const std::string& solver, double eps) -> BenchmarkCell& {
        for (auto& c : result.cells)
            if (c.solver == solver && c.epsilon == eps) return c;
        throw std::logic_error("run_solver_benchmark: missing cell");
    };

    parallel_for(cfg.n_test, cfg.jobs, [&](index_t i) {
        const AssembledSystem sys = problem.assemble(thetas[i]);
        const Vector u_sur = predict(art.model, thetas[i]);

        for (index_t depth : amg_depths) {
            AmgOptions opt;
            opt.max_levels = depth;
            opt.pre_sweeps = cfg.amg_pre_sweeps;
            opt.post_sweeps = cfg.amg_post_sweeps;
            const MultigridHierarchy h = build_hierarchy(sys.K, opt, sys.layout);
            const std::string name = "amg-" + std::to_string(depth) + "g";
            for (double eps : cfg.tolerances) {
                auto [u, rep] = amg_solve(h, sys.f, {}, eps, cfg.max_cycles);
                BenchmarkCell& cell = cell_of(name, eps);
                cell.cycles[i] = static_cast<double>(rep.cycles);
                cell.times_s[i] = rep.wall_time_s;
                cell.final_residuals[i] = rep.final_residual();
                cell.failed[i] = !rep.converged;
            }
        }
        for (const bool warm : {false, true}) {
            for (double eps : cfg.tolerances) {
                auto [u, rep] = pod2g_solve(sys.K, sys.f, art.basis, warm ? u_sur : Vector{},
                                            eps, cfg.max_cycles, cfg.amg_pre_sweeps,
                                            cfg.amg_post_sweeps);
                BenchmarkCell& cell = cell_of(warm ? "pod-2g-sur" : "pod-2g", eps);
                cell.cycles[i] = static_cast<double>(rep.cycles);
                cell.times_s[i] = rep.wall_time_s;
                cell.final_residuals[i] = rep.final_residual();
                cell.failed[i] = !rep.converged;
            }
        }
    });

    detail::reduce_cells(result, cfg.n_test);
    return result;
}

/// Preconditioned-CG sweep over the preconditioner roster. Multigrid
/// preconditioners apply one cycle from a zero guess per iteration.
inline BenchmarkResult run_pcg_benchmark(const ParametricProblem& problem,
                                         const OfflineArtifacts& art, const BenchmarkConfig& cfg,
                                         std::vector<std::string> roster = {"jacobi", "ilu0",
                                                                            "ichol0", "amg-3g",
                                                                            "pod-2g"},
                                         const std::string& baseline = "amg-3g") {
    cfg.validate();
    Rng sampler(cfg.seed);
    std::vector<Vector> thetas;
    for (index_t i = 0; i < cfg.n_test; ++i)
        thetas.push_back(sample_lognormal(problem.parameters, sampler));

    BenchmarkResult result;
    result.baseline = baseline;
    detail::init_cells(result, roster, cfg.tolerances, cfg.n_test);
    auto cell_of = [&](const std::string& solver, double eps) -> BenchmarkCell& {
        for (auto& c : result.cells)
            if (c.solver == solver && c.epsilon == eps) return c;
        throw std::logic_error("run_pcg_benchmark: missing cell");
    };

    parallel_for(cfg.n_test, cfg.jobs, [&](index_t i) {
        const AssembledSystem sys = problem.assemble(thetas[i]);
        auto K = std::make_shared<const CsrMatrix>(sys.K);
        auto basis = std::make_shared<const PodBasis>(art.basis);

        for (const std::string& name : roster) {
            std::unique_ptr<Preconditioner> precond;
            std::shared_ptr<const MultigridHierarchy> hierarchy;
            try {
                if (name == "identity") {
                    precond = std::make_unique<IdentityPreconditioner>();
                } else if (name == "jacobi") {
                    precond = std::make_unique<JacobiPreconditioner>(sys.K);
                } else if (name == "ilu0") {
                    precond = make_ilu0(sys.K);
                } else if (name == "ichol0") {
                    precond = make_ichol0(sys.K);
                } else if (name.rfind("amg-", 0) == 0) {
                    AmgOptions opt;
                    opt.max_levels = static_cast<index_t>(std::stoul(name.substr(4)));
                    opt.pre_sweeps = cfg.amg_pre_sweeps;
                    opt.post_sweeps = cfg.amg_post_sweeps;
                    hierarchy = std::make_shared<const MultigridHierarchy>(
                        build_hierarchy(sys.K, opt, sys.layout));
                    precond = std::make_unique<AmgPreconditioner>(hierarchy);
                } else if (name == "pod-2g") {
                    precond = std::make_unique<Pod2gPreconditioner>(K, basis, cfg.amg_pre_sweeps,
                                                                    cfg.amg_post_sweeps);
                } else {
                    throw std::invalid_argument("run_pcg_benchmark: unknown preconditioner " +
                                                name);
                }
            } catch (const std::runtime_error&) {
                // factorization breakdown: this sample fails across the row
                for (double eps : cfg.tolerances) cell_of(name, eps).failed[i] = 1;
                continue;
            }
            for (double eps : cfg.tolerances) {
                BenchmarkCell& cell = cell_of(name, eps);
                try {
                    auto [u, rep] = pcg_solve(sys.K, sys.f, *precond, {}, eps, cfg.max_cycles);
                    cell.cycles[i] = static_cast<double>(rep.cycles);
                    cell.times_s[i] = rep.wall_time_s;
                    cell.final_residuals[i] = rep.final_residual();
                    cell.failed[i] = !rep.converged;
                } catch (const std::runtime_error&) {
                    // breakdown mid-iteration is a per-cell failure, not fatal
                    cell.failed[i] = 1;
                }
            }
        }
    });

    detail::reduce_cells(result, cfg.n_test);
    return result;
}

// ---------------------------------------------------------------------------
// Monte Carlo study
// ---------------------------------------------------------------------------

struct MonteCarloResult {
    std::vector<double> qois;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> bin_edges;  // Freedman-Diaconis width
    std::vector<index_t> bin_counts;
    double solve_wall_time_s = 0.0;
    double offline_wall_time_s = 0.0;
};

namespace detail {

inline void build_histogram(MonteCarloResult& mc) {
    std::vector<double> sorted = mc.qois;
    std::sort(sorted.begin(), sorted.end());
    const index_t n = sorted.size();
    const double q1 = sorted[n / 4];
    const double q3 = sorted[(3 * n) / 4];
    double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
    const double lo = sorted.front(), hi = sorted.back();
    if (width <= 0.0) width = std::max(hi - lo, 1.0) / 10.0;
    const index_t nbins = std::max<index_t>(1, static_cast<index_t>(std::ceil((hi - lo) / width)));
    mc.bin_edges.resize(nbins + 1);
    for (index_t b = 0; b <= nbins; ++b)
        mc.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(nbins);
    mc.bin_counts.assign(nbins, 0);
    for (double q : mc.qois) {
        index_t b = hi > lo ? static_cast<index_t>((q - lo) / (hi - lo) *
                                                   static_cast<double>(nbins))
                            : 0;
        if (b >= nbins) b = nbins - 1;
        ++mc.bin_counts[b];
    }
}

inline double extract_qoi(const ParametricProblem& problem, const AssembledSystem& sys,
                          const Vector& u) {
    if (problem.kind == ProblemKind::PlaneStrainElasticity2D) return u[sys.qoi_dofs[0]];
    double s = 0.0;
    for (index_t d : sys.qoi_dofs) s += u[d] * u[d];
    return std::sqrt(s);
}

}  // namespace detail

/// Plain (unstratified) Monte Carlo over the parameter distributions, each
/// sample solved with PCG under the POD two-grid preconditioner from the
/// surrogate warm start. QoI: monitored displacement per problem kind.
inline MonteCarloResult run_monte_carlo(const ParametricProblem& problem,
                                        const OfflineArtifacts& art, index_t n_mc,
                                        std::uint64_t seed, double delta = 1e-6,
                                        index_t jobs = 1, index_t max_iter = 100000) {
    require(n_mc >= 100, "run_monte_carlo: n_mc >= 100 required");
    Rng sampler(seed);
    std::vector<Vector> thetas;
    thetas.reserve(n_mc);
    for (index_t i = 0; i < n_mc; ++i) thetas.push_back(sample_lognormal(problem.parameters, sampler));

    MonteCarloResult mc;
    mc.offline_wall_time_s = art.wall_time_s;
    mc.qois.assign(n_mc, 0.0);
    auto basis = std::make_shared<const PodBasis>(art.basis);

    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(n_mc, jobs, [&](index_t i) {
        const AssembledSystem sys = problem.assemble(thetas[i]);
        auto K = std::make_shared<const CsrMatrix>(sys.K);
        const Pod2gPreconditioner precond(K, basis, 1, 1);
        const Vector u_sur = predict(art.model, thetas[i]);
        auto [u, rep] = pcg_solve(sys.K, sys.f, precond, u_sur, delta, max_iter);
        if (!rep.converged)
            throw std::runtime_error("run_monte_carlo: sample " + std::to_string(i) +
                                     " failed to converge");
        mc.qois[i] = detail::extract_qoi(problem, sys, u);
    });
    mc.solve_wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    double mean = 0.0;
    for (double q : mc.qois) mean += q;
    mean /= static_cast<double>(n_mc);
    double var = 0.0;
    for (double q : mc.qois) var += (q - mean) * (q - mean);
    mc.mean = mean;
    mc.stddev = std::sqrt(var / static_cast<double>(n_mc - 1));
    detail::build_histogram(mc);
    return mc;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline std::string benchmark_csv(const BenchmarkResult& result) {
    std::ostringstream os;
    os << "solver,epsilon,mean_cycles,mean_time_s,speedup\n";
    os << std::setprecision(12);
    for (const BenchmarkCell& cell : result.cells)
        os << cell.solver << "," << cell.epsilon << "," << cell.mean_cycles << ","
           << cell.mean_time_s << "," << cell.speedup << "\n";
    return os.str();
}

inline nlohmann::json to_json(const BenchmarkResult& result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const BenchmarkCell& cell : result.cells)
        cells.push_back({{"solver", cell.solver},
                         {"epsilon", cell.epsilon},
                         {"mean_cycles", cell.mean_cycles},
                         {"mean_time_s", cell.mean_time_s},
                         {"speedup", cell.speedup},
                         {"failures", cell.failures},
                         {"cycles", cell.cycles},
                         {"times_s", cell.times_s},
                         {"final_residuals", cell.final_residuals}});
    return nlohmann::json{{"baseline", result.baseline}, {"cells", cells}};
}

inline nlohmann::json to_json(const MonteCarloResult& mc) {
    return nlohmann::json{{"n", mc.qois.size()},
                          {"mean", mc.mean},
                          {"stddev", mc.stddev},
                          {"bin_edges", mc.bin_edges},
                          {"bin_counts", mc.bin_counts},
                          {"solve_wall_time_s", mc.solve_wall_time_s},
                          {"offline_wall_time_s", mc.offline_wall_time_s},
                          {"qois", mc.qois}};
}

/// Flat key=value configuration text; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_file(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    index_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos,
                "config: missing '=' on line " + std::to_string(lineno));
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        require(!key.empty(), "config: empty key on line " + std::to_string(lineno));
        kv[key] = value;
    }
    return kv;
}

inline std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    require(is.good(), "config: cannot open " + path.string());
    return parse_config_file(is);
}

}  // namespace pod2g
