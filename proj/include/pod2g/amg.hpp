#pragma once

#include <chrono>
#include <iostream>
#include <memory>
#include <set>

#include <json.hpp>

#include "pod2g/core/csr.hpp"
#include "pod2g/core/dense_solve.hpp"
#include "pod2g/core/report.hpp"
#include "pod2g/krylov.hpp"
#include "pod2g/smoothers.hpp"

namespace pod2g {

// ---------------------------------------------------------------------------
// Strength of connection
// ---------------------------------------------------------------------------

/// Strong-dependency pattern: row i lists the points i strongly depends on,
/// i.e. -K_ij >= theta * max_k(-K_ik) over negative couplings only.
struct StrengthGraph {
    index_t n = 0;
    std::vector<index_t> row_offsets;
    std::vector<index_t> col_indices;
    bool negative_offdiag_dominant = true;

    std::pair<index_t, index_t> row(index_t i) const {
        return {row_offsets[i], row_offsets[i + 1]};
    }
};

inline StrengthGraph strength_graph(const CsrMatrix& K, double theta_s) {
    require(K.nrows == K.ncols, "strength_graph: matrix not square");
    require(theta_s > 0.0 && theta_s <= 1.0, "strength_graph: theta outside (0,1]");
    StrengthGraph g;
    g.n = K.nrows;
    g.row_offsets.assign(K.nrows + 1, 0);

    double neg_mass = 0.0, pos_mass = 0.0;
    for (index_t i = 0; i < K.nrows; ++i)
        for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k) {
            if (K.col_indices[k] == i) continue;
            (K.values[k] < 0.0 ? neg_mass : pos_mass) += std::abs(K.values[k]);
        }
    g.negative_offdiag_dominant = neg_mass >= pos_mass;

    for (index_t i = 0; i < K.nrows; ++i) {
        double max_neg = 0.0;
        for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k)
            if (K.col_indices[k] != i) max_neg = std::max(max_neg, -K.values[k]);
        if (max_neg > 0.0) {
            const double cut = theta_s * max_neg;
            for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k)
                if (K.col_indices[k] != i && -K.values[k] >= cut)
                    g.col_indices.push_back(K.col_indices[k]);
        }
        g.row_offsets[i + 1] = g.col_indices.size();
    }
    return g;
}

// ---------------------------------------------------------------------------
// C/F splitting
// ---------------------------------------------------------------------------

struct CfSplit {
    std::vector<std::uint8_t> is_coarse;
    index_t n_coarse = 0;
};

/// Greedy first pass over descending influence counts. Ties break to the
/// lowest index, so the result is deterministic. Points left unassigned
/// (including fully isolated ones) become coarse.
inline CfSplit cf_split(const StrengthGraph& g) {
    const index_t n = g.n;
    // transpose: who depends on i
    std::vector<index_t> t_offsets(n + 1, 0), t_cols(g.col_indices.size());
    for (index_t j : g.col_indices) ++t_offsets[j + 1];
    for (index_t i = 0; i < n; ++i) t_offsets[i + 1] += t_offsets[i];
    {
        std::vector<index_t> next(t_offsets.begin(), t_offsets.end() - 1);
        for (index_t i = 0; i < n; ++i) {
            auto [b, e] = g.row(i);
            for (index_t k = b; k < e; ++k) t_cols[next[g.col_indices[k]]++] = i;
        }
    }

    enum : std::uint8_t { kUnassigned = 0, kCoarse = 1, kFine = 2 };
    std::vector<std::uint8_t> state(n, kUnassigned);
    std::vector<index_t> weight(n);
    for (index_t i = 0; i < n; ++i) weight[i] = t_offsets[i + 1] - t_offsets[i];

    // ordered by (weight desc, index asc); weights stay below 2n after bumps
    std::set<std::pair<index_t, index_t>> queue;
    auto key = [&](index_t i) { return std::make_pair(2 * n + 1 - weight[i], i); };
    for (index_t i = 0; i < n; ++i) queue.insert(key(i));
    auto bump = [&](index_t i) {
        queue.erase(key(i));
        ++weight[i];
        queue.insert(key(i));
    };

    while (!queue.empty()) {
        const index_t c = queue.begin()->second;
        queue.erase(queue.begin());
        state[c] = kCoarse;
        for (index_t k = t_offsets[c]; k < t_offsets[c + 1]; ++k) {
            const index_t f = t_cols[k];
            if (state[f] != kUnassigned) continue;
            state[f] = kFine;
            queue.erase(key(f));
            auto [b, e] = g.row(f);
            for (index_t kk = b; kk < e; ++kk)
                if (state[g.col_indices[kk]] == kUnassigned) bump(g.col_indices[kk]);
        }
    }

    // guarantee: every F point keeps at least one strong C neighbor
    for (index_t i = 0; i < n; ++i) {
        if (state[i] != kFine) continue;
        bool has_c = false;
        auto [b, e] = g.row(i);
        for (index_t k = b; k < e && !has_c; ++k) has_c = state[g.col_indices[k]] == kCoarse;
        if (!has_c) state[i] = kCoarse;
    }

    CfSplit split;
    split.is_coarse.resize(n);
    for (index_t i = 0; i < n; ++i) {
        split.is_coarse[i] = state[i] == kCoarse;
        split.n_coarse += split.is_coarse[i];
    }
    return split;
}

// ---------------------------------------------------------------------------
// Direct interpolation
// ---------------------------------------------------------------------------

/// Classical direct interpolation. Coarse rows are unit rows; a fine row i
/// gets w_ij = -(K_ij / K_ii) * (sum over all neighbors K_ik) / (sum over
/// strong C neighbors K_ij), restricted to strong C neighbors.
inline CsrMatrix direct_interpolation(const CsrMatrix& K, const StrengthGraph& g,
                                      const CfSplit& split) {
    const index_t n = K.nrows;
    require(g.n == n && split.is_coarse.size() == n, "direct_interpolation: inputs disagree");
    std::vector<index_t> coarse_id(n, static_cast<index_t>(-1));
    index_t nc = 0;
    for (index_t i = 0; i < n; ++i)
        if (split.is_coarse[i]) coarse_id[i] = nc++;

    std::vector<std::tuple<index_t, index_t, double>> entries;
    for (index_t i = 0; i < n; ++i) {
        if (split.is_coarse[i]) {
            entries.emplace_back(i, coarse_id[i], 1.0);
            continue;
        }
        auto [b, e] = g.row(i);
        double diag = 0.0, all_sum = 0.0, strong_c_sum = 0.0;
        for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k) {
            if (K.col_indices[k] == i)
                diag = K.values[k];
            else
                all_sum += K.values[k];
        }
        std::vector<std::pair<index_t, double>> strong_c;
        for (index_t k = b; k < e; ++k) {
            const index_t j = g.col_indices[k];
            if (!split.is_coarse[j]) continue;
            const double kij = K.at(i, j);
            strong_c.emplace_back(j, kij);
            strong_c_sum += kij;
        }
        if (strong_c.empty())
            throw std::runtime_error("direct_interpolation: F point " + std::to_string(i) +
                                     " has no strong C neighbor");
        if (diag == 0.0 || strong_c_sum == 0.0)
            throw std::runtime_error("direct_interpolation: degenerate row " + std::to_string(i));
        const double alpha = all_sum / strong_c_sum;
        for (const auto& [j, kij] : strong_c)
            entries.emplace_back(i, coarse_id[j], -alpha * kij / diag);
    }
    return csr_from_coo(n, nc, std::move(entries));
}

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

/// Assignment of scalar dofs to mesh nodes, with the component slot inside
/// the node. Scalar problems use the trivial layout node=dof, component=0.
struct DofLayout {
    std::vector<index_t> node;
    std::vector<index_t> component;

    static DofLayout scalar(index_t n) {
        DofLayout l;
        l.node.resize(n);
        l.component.assign(n, 0);
        for (index_t i = 0; i < n; ++i) l.node[i] = i;
        return l;
    }
    bool is_scalar() const {
        for (index_t i = 0; i < node.size(); ++i)
            if (node[i] != i) return false;
        return true;
    }
    index_t n_nodes() const {
        index_t m = 0;
        for (index_t v : node) m = std::max(m, v + 1);
        return m;
    }
};

struct AmgOptions {
    index_t max_levels = 2;
    index_t coarse_cap = 64;
    double theta_s = 0.25;
    SmootherConfig smoother{SmootherKind::GaussSeidel, 1, 2.0 / 3.0};
    index_t pre_sweeps = 1;   // r1
    index_t post_sweeps = 1;  // r2
};

struct AmgLevel {
    CsrMatrix K;
    CsrMatrix P;   // to next coarser level; empty on the coarsest
    CsrMatrix Pt;  // cached restriction
    DofLayout layout;
};

struct MultigridHierarchy {
    std::vector<AmgLevel> levels;
    std::shared_ptr<const DenseLu> coarse_lu;
    AmgOptions options;
    bool coarsening_stagnated = false;

    index_t n_levels() const { return levels.size(); }
    index_t dim() const { return levels.front().K.nrows; }
};

namespace detail {

/// Scalar auxiliary matrix over nodes: off-diagonal entries are the negated
/// Frobenius norms of the nodal coupling blocks, diagonals the positive ones.
inline CsrMatrix nodal_aux_matrix(const CsrMatrix& K, const DofLayout& layout) {
    const index_t n_nodes = layout.n_nodes();
    std::vector<std::tuple<index_t, index_t, double>> sq;
    for (index_t i = 0; i < K.nrows; ++i)
        for (index_t k = K.row_offsets[i]; k < K.row_offsets[i + 1]; ++k)
            sq.emplace_back(layout.node[i], layout.node[K.col_indices[k]],
                            K.values[k] * K.values[k]);
    CsrMatrix sums = csr_from_coo(n_nodes, n_nodes, std::move(sq));
    for (index_t i = 0; i < n_nodes; ++i)
        for (index_t k = sums.row_offsets[i]; k < sums.row_offsets[i + 1]; ++k) {
            const double norm = std::sqrt(sums.values[k]);
            sums.values[k] = sums.col_indices[k] == i ? norm : -norm;
        }
    sums.symmetric_hint = K.symmetric_hint;
    return sums;
}

struct NodeDofs {
    // per node: list of (dof index, component)
    std::vector<std::vector<std::pair<index_t, index_t>>> dofs;

    explicit NodeDofs(const DofLayout& layout) : dofs(layout.n_nodes()) {
        for (index_t d = 0; d < layout.node.size(); ++d)
            dofs[layout.node[d]].emplace_back(d, layout.component[d]);
    }
    bool has_component(index_t node, index_t comp) const {
        for (const auto& [d, c] : dofs[node])
            if (c == comp) return true;
        return false;
    }
};

/// One coarsening step: strength graph and splitting on the nodal auxiliary
/// matrix, block expansion of the node interpolation weights, per-component.
inline std::pair<CsrMatrix, DofLayout> coarsen_once(const CsrMatrix& K, const DofLayout& layout,
                                                    double theta_s) {
    if (layout.is_scalar()) {
        const StrengthGraph g = strength_graph(K, theta_s);
        if (!g.negative_offdiag_dominant)
            std::cerr << "amg: positive off-diagonal couplings dominate; "
                         "strength-of-connection heuristics may coarsen poorly\n";
        const CfSplit split = cf_split(g);
        CsrMatrix P = direct_interpolation(K, g, split);
        return {std::move(P), DofLayout::scalar(split.n_coarse)};
    }

    const CsrMatrix aux = nodal_aux_matrix(K, layout);
    const StrengthGraph g = strength_graph(aux, theta_s);
    CfSplit split = cf_split(g);
    const NodeDofs nodes(layout);

    // promote F nodes whose components are not all covered by strong C
    // neighbors owning the same component
    bool changed = true;
    while (changed) {
        changed = false;
        for (index_t i = 0; i < aux.nrows; ++i) {
            if (split.is_coarse[i]) continue;
            auto [b, e] = g.row(i);
            for (const auto& [dof, comp] : nodes.dofs[i]) {
                (void)dof;
                bool covered = false;
                for (index_t k = b; k < e && !covered; ++k) {
                    const index_t j = g.col_indices[k];
                    covered = split.is_coarse[j] && nodes.has_component(j, comp);
                }
                if (!covered) {
                    split.is_coarse[i] = 1;
                    ++split.n_coarse;
                    changed = true;
                    break;
                }
            }
        }
    }

    // Node weights: partition of unity over the strong C neighbors,
    // proportional to the coupling-block norms. The scalar direct formula's
    // row-sum normalization assumes zero row sums, which the Frobenius
    // auxiliary matrix does not have; proportional weights keep per-component
    // constants exactly reproducible, which the coarse space needs.
    std::vector<index_t> node_w_offsets(aux.nrows + 1, 0);
    std::vector<index_t> node_w_cols;
    std::vector<double> node_w_vals;
    {
        std::vector<index_t> coarse_count(aux.nrows, 0);
        index_t nc = 0;
        for (index_t i = 0; i < aux.nrows; ++i)
            if (split.is_coarse[i]) coarse_count[i] = nc++;
        for (index_t i = 0; i < aux.nrows; ++i) {
            if (!split.is_coarse[i]) {
                auto [b, e] = g.row(i);
                double total = 0.0;
                for (index_t k = b; k < e; ++k) {
                    const index_t j = g.col_indices[k];
                    if (split.is_coarse[j]) total += std::abs(aux.at(i, j));
                }
                require(total > 0.0, "coarsen_once: fine node lost its strong coarse couplings");
                for (index_t k = b; k < e; ++k) {
                    const index_t j = g.col_indices[k];
                    if (!split.is_coarse[j]) continue;
                    node_w_cols.push_back(coarse_count[j]);
                    node_w_vals.push_back(std::abs(aux.at(i, j)) / total);
                }
            }
            node_w_offsets[i + 1] = node_w_cols.size();
        }
    }
    CsrMatrix node_P;
    node_P.nrows = aux.nrows;
    node_P.ncols = split.n_coarse;
    node_P.row_offsets = std::move(node_w_offsets);
    node_P.col_indices = std::move(node_w_cols);
    node_P.values = std::move(node_w_vals);

    // coarse dof numbering: C nodes in ascending order, components in node
    // order; nodes without free dofs get no coarse id
    std::vector<index_t> coarse_node_id(aux.nrows, static_cast<index_t>(-1));
    index_t nc_nodes = 0;
    for (index_t i = 0; i < aux.nrows; ++i)
        if (split.is_coarse[i] && !nodes.dofs[i].empty()) coarse_node_id[i] = nc_nodes++;

    DofLayout coarse_layout;
    std::vector<index_t> coarse_dof_offset(aux.nrows, static_cast<index_t>(-1));
    index_t nc_dofs = 0;
    for (index_t i = 0; i < aux.nrows; ++i) {
        if (!split.is_coarse[i] || nodes.dofs[i].empty()) continue;
        coarse_dof_offset[i] = nc_dofs;
        for (const auto& [dof, comp] : nodes.dofs[i]) {
            (void)dof;
            coarse_layout.node.push_back(coarse_node_id[i]);
            coarse_layout.component.push_back(comp);
            ++nc_dofs;
        }
    }

    auto coarse_dof = [&](index_t node, index_t comp) {
        index_t off = coarse_dof_offset[node];
        for (const auto& [d, c] : nodes.dofs[node]) {
            (void)d;
            if (c == comp) return off;
            ++off;
        }
        throw std::logic_error("coarsen_once: missing coarse component");
    };

    // direct_interpolation numbers C nodes in ascending order; invert that
    std::vector<index_t> c_nodes;
    for (index_t j = 0; j < aux.nrows; ++j)
        if (split.is_coarse[j]) c_nodes.push_back(j);

    std::vector<std::tuple<index_t, index_t, double>> entries;
    for (index_t i = 0; i < aux.nrows; ++i) {
        if (split.is_coarse[i]) {
            for (const auto& [dof, comp] : nodes.dofs[i])
                entries.emplace_back(dof, coarse_dof(i, comp), 1.0);
            continue;
        }
        // node weight list of F node i
        std::vector<std::pair<index_t, double>> w;
        double total = 0.0;
        for (index_t k = node_P.row_offsets[i]; k < node_P.row_offsets[i + 1]; ++k) {
            w.emplace_back(node_P.col_indices[k], node_P.values[k]);
            total += node_P.values[k];
        }
        for (const auto& [dof, comp] : nodes.dofs[i]) {
            double covered = 0.0;
            for (const auto& [cid, wij] : w)
                if (nodes.has_component(c_nodes[cid], comp)) covered += wij;
            require(covered != 0.0, "coarsen_once: component coverage lost");
            const double rescale = total / covered;
            for (const auto& [cid, wij] : w) {
                const index_t j = c_nodes[cid];
                if (nodes.has_component(j, comp))
                    entries.emplace_back(dof, coarse_dof(j, comp), wij * rescale);
            }
        }
    }
    CsrMatrix P = csr_from_coo(K.nrows, nc_dofs, std::move(entries));
    return {std::move(P), std::move(coarse_layout)};
}

}  // namespace detail

/// Build the multigrid hierarchy: coarsen until max_levels is reached, the
/// coarsest dimension drops under coarse_cap, or coarsening stalls (< 5%
/// reduction), whichever comes first. The coarsest operator is LU-factored.
inline MultigridHierarchy build_hierarchy(CsrMatrix K, const AmgOptions& options,
                                          DofLayout layout = {}) {
    require(K.nrows == K.ncols, "build_hierarchy: matrix not square");
    require(options.max_levels >= 1, "build_hierarchy: max_levels >= 1 required");
    if (layout.node.empty()) layout = DofLayout::scalar(K.nrows);
    require(layout.node.size() == K.nrows, "build_hierarchy: layout size mismatch");

    MultigridHierarchy h;
    h.options = options;
    h.levels.push_back(AmgLevel{std::move(K), {}, {}, std::move(layout)});
    while (h.levels.size() < options.max_levels &&
           h.levels.back().K.nrows > options.coarse_cap) {
        AmgLevel& fine = h.levels.back();
        auto [P, coarse_layout] = detail::coarsen_once(fine.K, fine.layout, options.theta_s);
        if (static_cast<double>(P.ncols) > 0.95 * static_cast<double>(fine.K.nrows)) {
            h.coarsening_stagnated = true;
            break;
        }
        CsrMatrix coarse_K = galerkin_triple_product(P, fine.K);
        fine.Pt = transpose_csr(P);
        fine.P = std::move(P);
        h.levels.push_back(AmgLevel{std::move(coarse_K), {}, {}, std::move(coarse_layout)});
    }
    h.coarse_lu = std::make_shared<DenseLu>(csr_to_dense(h.levels.back().K));
    return h;
}

namespace detail {

inline void v_cycle_level(const MultigridHierarchy& h, index_t level, const Vector& f, Vector& u,
                          bool adjoint_post) {
    const AmgLevel& lvl = h.levels[level];
    if (level + 1 == h.levels.size()) {
        u = h.coarse_lu->solve(f);
        return;
    }
    apply_smoother(h.options.smoother, lvl.K, f, u, h.options.pre_sweeps);
    Vector r;
    residual(lvl.K, f, u, r);
    const Vector rc = spmv(lvl.Pt, r);
    Vector ec(rc.size(), 0.0);
    v_cycle_level(h, level + 1, rc, ec, adjoint_post);
    const Vector corr = spmv(lvl.P, ec);
    axpy(1.0, corr, u);
    if (adjoint_post)
        apply_smoother_adjoint(h.options.smoother, lvl.K, f, u, h.options.post_sweeps);
    else
        apply_smoother(h.options.smoother, lvl.K, f, u, h.options.post_sweeps);
}

}  // namespace detail

/// One V-cycle: r1 pre-smooths, restrict residual, recurse (dense solve at
/// the coarsest level), prolongate the correction, r2 post-smooths.
inline Vector v_cycle(const MultigridHierarchy& h, const Vector& f, Vector u) {
    require(f.size() == h.dim() && u.size() == h.dim(), "v_cycle: dimension mismatch");
    detail::v_cycle_level(h, 0, f, u, /*adjoint_post=*/false);
    return u;
}

/// Iterate V-cycles until the relative residual reaches delta. Non-convergence
/// is reported, not thrown.
inline std::pair<Vector, SolveReport> amg_solve(const MultigridHierarchy& h, const Vector& f,
                                                Vector u0, double delta, index_t max_cycles) {
    require(f.size() == h.dim(), "amg_solve: dimension mismatch");
    if (u0.empty()) u0.assign(h.dim(), 0.0);
    require(u0.size() == h.dim(), "amg_solve: initial guess dimension mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    const CsrMatrix& K = h.levels.front().K;

    SolveReport report;
    const double fnorm = norm2(f);
    Vector u = std::move(u0);
    Vector r;
    residual(K, f, u, r);
    double rel = detail::relative_residual(norm2(r), fnorm);
    report.residual_history.push_back(rel);

    index_t k = 0;
    while (rel > delta && k < max_cycles) {
        detail::v_cycle_level(h, 0, f, u, /*adjoint_post=*/false);
        residual(K, f, u, r);
        rel = detail::relative_residual(norm2(r), fnorm);
        report.residual_history.push_back(rel);
        ++k;
    }
    report.converged = rel <= delta;
    report.cycles = k;
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!all_finite(u)) throw std::runtime_error("amg_solve: non-finite entries in solution");
    return {std::move(u), std::move(report)};
}

/// One V-cycle from a zero initial guess, with adjoint (backward GS) post
/// smoothing so the operator is symmetric positive definite and admissible
/// inside CG.
class AmgPreconditioner final : public Preconditioner {
public:
    explicit AmgPreconditioner(std::shared_ptr<const MultigridHierarchy> h) : h_(std::move(h)) {}
    void apply(const Vector& r, Vector& s) const override {
        s.assign(r.size(), 0.0);
        detail::v_cycle_level(*h_, 0, r, s, /*adjoint_post=*/true);
    }
    std::string name() const override {
        return "amg-" + std::to_string(h_->n_levels()) + "g";
    }

private:
    std::shared_ptr<const MultigridHierarchy> h_;
};

/// PCG with one V-cycle from a zero guess as the preconditioner application.
inline std::pair<Vector, SolveReport> amg_preconditioned_pcg(const CsrMatrix& K, const Vector& f,
                                                             std::shared_ptr<const MultigridHierarchy> h,
                                                             Vector u0, double delta,
                                                             index_t max_iter = 0) {
    require(h && h->dim() == K.nrows, "amg_preconditioned_pcg: hierarchy does not match K");
    if (max_iter == 0) max_iter = 10 * K.nrows;
    const AmgPreconditioner precond(std::move(h));
    return pcg_solve(K, f, precond, std::move(u0), delta, max_iter);
}

inline nlohmann::json hierarchy_summary(const MultigridHierarchy& h) {
    nlohmann::json levels = nlohmann::json::array();
    double nnz0 = static_cast<double>(h.levels.front().K.nnz());
    double total_nnz = 0.0;
    for (const AmgLevel& lvl : h.levels) {
        levels.push_back({{"dim", lvl.K.nrows}, {"nnz", lvl.K.nnz()}});
        total_nnz += static_cast<double>(lvl.K.nnz());
    }
    return nlohmann::json{{"levels", levels},
                          {"operator_complexity", total_nnz / nnz0},
                          {"coarsening_stagnated", h.coarsening_stagnated}};
}

}  // namespace pod2g
