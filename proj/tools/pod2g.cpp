#include <CLI11.hpp>

#include <iostream>

#include "pod2g/bench.hpp"

using namespace pod2g;

namespace {

struct CommonOpts {
    std::string problem = "its";
    index_t res = 32;
    index_t n = 200;
    std::uint64_t seed = 42;
    std::string out = "out";
    index_t jobs = 1;
    std::string eps_list = "1e-4,1e-5,1e-6,1e-7,1e-8";
    std::string config;
};

ParametricProblem make_problem(const std::string& name, index_t res) {
    if (name == "its") return make_its_problem(res);
    if (name == "biot") return make_biot_problem(res);
    throw CLI::ValidationError("--problem must be 'its' or 'biot'");
}

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> eps;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) eps.push_back(std::stod(tok));
    }
    require(!eps.empty(), "empty --eps-list");
    return eps;
}

/// Values from --config override the command line, keyed by long option name.
void apply_config_overrides(const std::string& path, CLI::App* cmd) {
    if (path.empty()) return;
    for (const auto& [key, value] : parse_config_file(std::filesystem::path(path))) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt) {
            std::cerr << "warning: config key '" << key << "' does not match an option of '"
                      << cmd->get_name() << "', ignored\n";
            continue;
        }
        opt->clear();
        opt->add_result(value);
        opt->run_callback();
    }
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_eps = false) {
    cmd->add_option("--problem", o.problem, "its | biot")->capture_default_str();
    cmd->add_option("--res", o.res, "mesh resolution (elements per side)")->capture_default_str();
    cmd->add_option("--seed", o.seed, "rng seed")->capture_default_str();
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
    cmd->add_option("--config", o.config, "key=value file overriding these flags");
    if (with_eps)
        cmd->add_option("--eps-list", o.eps_list, "comma-separated tolerance sweep")
            ->capture_default_str();
}

OfflineArtifacts offline_for(const ParametricProblem& prob, const CommonOpts& o,
                             const std::string& artifacts_dir, index_t n_snapshots,
                             const TrainConfig& training) {
    if (!artifacts_dir.empty()) {
        std::cout << "loading offline artifacts from " << artifacts_dir << "\n";
        return load_offline_artifacts(artifacts_dir);
    }
    OfflineConfig cfg;
    cfg.n_snapshots = n_snapshots;
    cfg.seed = o.seed;
    cfg.jobs = o.jobs;
    cfg.training = training;
    std::cout << "running offline stage (N=" << n_snapshots << ", seed=" << o.seed << ")\n";
    return run_offline(prob, cfg);
}

void write_benchmark(const std::filesystem::path& dir, const std::string& stem,
                     const BenchmarkResult& result) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / (stem + ".csv"), benchmark_csv(result));
    write_text_file(dir / (stem + ".json"), to_json(result).dump(2) + "\n");
    std::cout << benchmark_csv(result);
    std::cout << "wrote " << (dir / (stem + ".csv")).string() << " and .json\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven accelerated iterative solvers for parametrized SPD systems"};
    app.require_subcommand(1);

    // --- snapshots ---------------------------------------------------------
    CommonOpts snap_o;
    double snap_tol = 1e-10;
    auto* snap = app.add_subcommand("snapshots", "sample parameters and solve the snapshot set");
    add_common(snap, snap_o);
    snap->add_option("--n", snap_o.n, "number of snapshots")->capture_default_str();
    snap->add_option("--tol", snap_tol, "snapshot residual tolerance")->capture_default_str();
    snap->callback([&] {
        apply_config_overrides(snap_o.config, snap);
        const ParametricProblem prob = make_problem(snap_o.problem, snap_o.res);
        const auto params = latin_hypercube_lognormal(snap_o.n, prob.parameters, snap_o.seed);
        const SnapshotSet set = generate_snapshots(prob, params, snap_tol, snap_o.jobs);
        save_snapshot_set(std::filesystem::path(snap_o.out), set, prob, snap_o.seed);
        std::cout << "wrote " << set.size() << " snapshots of dimension " << set.dim() << " to "
                  << snap_o.out << "\n";
    });

    // --- train -------------------------------------------------------------
    CommonOpts train_o;
    std::string train_snapshots;
    index_t latent = 0;
    double energy = 0.9999;
    TrainConfig tcfg;
    auto* train = app.add_subcommand("train", "POD basis + warm-start network from snapshots");
    add_common(train, train_o);
    train->add_option("--snapshots", train_snapshots, "snapshot directory")->required();
    train->add_option("--latent", latent, "latent dimension (0 = from --energy)")
        ->capture_default_str();
    train->add_option("--energy", energy, "retained-energy target")->capture_default_str();
    train->add_option("--epochs", tcfg.epochs)->capture_default_str();
    train->add_option("--lr", tcfg.learning_rate)->capture_default_str();
    train->add_option("--batch", tcfg.batch_size)->capture_default_str();
    train->add_option("--split", tcfg.validation_split)->capture_default_str();
    train->callback([&] {
        apply_config_overrides(train_o.config, train);
        const SnapshotSet set = load_snapshot_set(train_snapshots);
        const PodBasis basis = latent > 0 ? compute_pod(set.solutions, RankTarget{latent})
                                          : compute_pod(set.solutions, EnergyTarget{energy});
        tcfg.seed = train_o.seed;
        const SurrogateModel model = train_mlp(set, basis, tcfg);
        const std::filesystem::path dir(train_o.out);
        std::filesystem::create_directories(dir);
        save_pod_basis(dir / "basis", basis, detail::hash_vectors(set.solutions));
        save_surrogate_model(dir / "model", model);
        std::cout << "basis rank " << basis.rank << " (energy " << basis.energy_fraction
                  << "), best validation loss " << model.best_validation_loss << " at epoch "
                  << model.best_epoch << "\n";
    });

    // --- bench-solvers -----------------------------------------------------
    CommonOpts bs_o;
    std::string bs_artifacts;
    index_t bs_ntest = 100;
    TrainConfig bs_tcfg;
    auto* bs = app.add_subcommand("bench-solvers",
                                  "mean cycles: multigrid depths vs the POD two-grid solver");
    add_common(bs, bs_o, true);
    bs->add_option("--n", bs_o.n, "snapshots for the offline stage")->capture_default_str();
    bs->add_option("--artifacts", bs_artifacts, "reuse a saved offline directory");
    bs->add_option("--n-test", bs_ntest, "test samples per cell")->capture_default_str();
    bs->callback([&] {
        apply_config_overrides(bs_o.config, bs);
        const ParametricProblem prob = make_problem(bs_o.problem, bs_o.res);
        const OfflineArtifacts art = offline_for(prob, bs_o, bs_artifacts, bs_o.n, bs_tcfg);
        BenchmarkConfig cfg;
        cfg.tolerances = parse_eps_list(bs_o.eps_list);
        cfg.n_test = bs_ntest;
        cfg.seed = bs_o.seed + 1;
        cfg.jobs = bs_o.jobs;
        const BenchmarkResult result = run_solver_benchmark(prob, art, cfg);
        write_benchmark(bs_o.out, "bench_solvers_" + prob.name(), result);

        // hierarchy shapes at the mean parameters, next to the table
        Vector mean_theta;
        for (const auto& p : prob.parameters) mean_theta.push_back(p.mean);
        const AssembledSystem sys = prob.assemble(mean_theta);
        nlohmann::json sizes = nlohmann::json::array();
        for (index_t depth : {index_t{2}, index_t{3}, index_t{5}}) {
            AmgOptions opt;
            opt.max_levels = depth;
            nlohmann::json js = hierarchy_summary(build_hierarchy(sys.K, opt, sys.layout));
            js["solver"] = "amg-" + std::to_string(depth) + "g";
            sizes.push_back(std::move(js));
        }
        sizes.push_back({{"solver", "pod-2g"},
                         {"levels", {{{"dim", sys.K.nrows}}, {{"dim", art.basis.rank}}}}});
        write_text_file(std::filesystem::path(bs_o.out) / ("hierarchies_" + prob.name() + ".json"),
                        sizes.dump(2) + "\n");
    });

    // --- bench-pcg ---------------------------------------------------------
    CommonOpts bp_o;
    std::string bp_artifacts;
    index_t bp_ntest = 100;
    TrainConfig bp_tcfg;
    auto* bp = app.add_subcommand("bench-pcg", "mean PCG iterations per preconditioner");
    add_common(bp, bp_o, true);
    bp->add_option("--n", bp_o.n, "snapshots for the offline stage")->capture_default_str();
    bp->add_option("--artifacts", bp_artifacts, "reuse a saved offline directory");
    bp->add_option("--n-test", bp_ntest, "test samples per cell")->capture_default_str();
    bp->callback([&] {
        apply_config_overrides(bp_o.config, bp);
        const ParametricProblem prob = make_problem(bp_o.problem, bp_o.res);
        const OfflineArtifacts art = offline_for(prob, bp_o, bp_artifacts, bp_o.n, bp_tcfg);
        BenchmarkConfig cfg;
        cfg.tolerances = parse_eps_list(bp_o.eps_list);
        cfg.n_test = bp_ntest;
        cfg.seed = bp_o.seed + 1;
        cfg.jobs = bp_o.jobs;
        const BenchmarkResult result = run_pcg_benchmark(prob, art, cfg);
        write_benchmark(bp_o.out, "bench_pcg_" + prob.name(), result);
    });

    // --- monte-carlo -------------------------------------------------------
    CommonOpts mc_o;
    std::string mc_artifacts;
    index_t n_mc = 2000;
    double mc_tol = 1e-6;
    TrainConfig mc_tcfg;
    auto* mc = app.add_subcommand("monte-carlo",
                                  "sample the parameter distributions and bin the QoI");
    add_common(mc, mc_o);
    mc->add_option("--n", mc_o.n, "snapshots for the offline stage")->capture_default_str();
    mc->add_option("--artifacts", mc_artifacts, "reuse a saved offline directory");
    mc->add_option("--n-mc", n_mc, "Monte Carlo samples")->capture_default_str();
    mc->add_option("--tol", mc_tol, "per-sample solve tolerance")->capture_default_str();
    mc->callback([&] {
        apply_config_overrides(mc_o.config, mc);
        const ParametricProblem prob = make_problem(mc_o.problem, mc_o.res);
        const OfflineArtifacts art = offline_for(prob, mc_o, mc_artifacts, mc_o.n, mc_tcfg);
        const MonteCarloResult result =
            run_monte_carlo(prob, art, n_mc, mc_o.seed + 2, mc_tol, mc_o.jobs);
        std::filesystem::create_directories(mc_o.out);
        const auto path =
            std::filesystem::path(mc_o.out) / ("monte_carlo_" + prob.name() + ".json");
        write_text_file(path, to_json(result).dump(2) + "\n");
        std::cout << "QoI mean " << result.mean << ", std " << result.stddev << " over " << n_mc
                  << " samples; solve time " << result.solve_wall_time_s << " s (offline "
                  << result.offline_wall_time_s << " s)\n"
                  << "wrote " << path.string() << "\n";
    });

    // --- verify-bound ------------------------------------------------------
    CommonOpts vb_o;
    vb_o.res = 6;
    std::string r_list = "2,4,8";
    index_t vb_r1 = 1, vb_r2 = 1, vb_trials = 100;
    auto* vb = app.add_subcommand(
        "verify-bound", "contraction-bound report on a dense-scale elasticity instance");
    add_common(vb, vb_o);
    vb->add_option("--r-list", r_list, "comma-separated basis ranks")->capture_default_str();
    vb->add_option("--r1", vb_r1, "pre-smoothing sweeps")->capture_default_str();
    vb->add_option("--r2", vb_r2, "post-smoothing sweeps")->capture_default_str();
    vb->add_option("--trials", vb_trials, "test errors per estimate")->capture_default_str();
    vb->callback([&] {
        apply_config_overrides(vb_o.config, vb);
        require(vb_o.problem == "its", "verify-bound runs on the elasticity instance");
        const AssembledSystem sys = assemble_plane_strain(vb_o.res, 2000.0, 0.3, -1000.0);
        require(sys.K.nrows <= 200, "verify-bound: pick --res so that d <= 200");
        // solution-family snapshots and fresh test errors on the same operator
        const DenseLu lu(csr_to_dense(sys.K));
        Rng rng(vb_o.seed);
        std::vector<Vector> snaps, errors;
        for (index_t i = 0; i < 40; ++i) snaps.push_back(lu.solve(rng.normal_vector(sys.K.nrows)));
        for (index_t i = 0; i < vb_trials; ++i)
            errors.push_back(lu.solve(rng.normal_vector(sys.K.nrows)));

        nlohmann::json report = nlohmann::json::array();
        std::stringstream rs(r_list);
        std::string tok;
        while (std::getline(rs, tok, ',')) {
            const index_t r = std::stoul(tok);
            const PodBasis basis = compute_pod(snaps, RankTarget{r});
            const ErrorBoundEstimate est =
                verify_error_bound(sys.K, basis, vb_r1, vb_r2, vb_trials, errors);
            nlohmann::json js = to_json(est);
            js["rank"] = basis.rank;
            std::cout << "r=" << basis.rank << "  gamma=" << est.gamma
                      << "  C=" << est.coarse_norm_bound << "  bound=" << est.per_cycle_bound
                      << "  observed=" << est.observed_ratio
                      << (est.hypotheses_hold() ? "" : "  [hypotheses fail]")
                      << (est.bound_holds ? "" : "  [BOUND VIOLATED]") << "\n";
            report.push_back(std::move(js));
        }
        std::filesystem::create_directories(vb_o.out);
        const auto path = std::filesystem::path(vb_o.out) / "verify_bound.json";
        write_text_file(path, report.dump(2) + "\n");
        std::cout << "wrote " << path.string() << "\n";
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
