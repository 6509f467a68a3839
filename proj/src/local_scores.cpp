#include "lokf/local_scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lokf/partition_learn.hpp"
#include "lokf/rng.hpp"

namespace lokf {

void ScoreConfig::validate() const {
    if (xi_grid.empty()) throw std::invalid_argument("xi grid must not be empty");
    for (double xi : xi_grid)
        if (!(xi >= 0.0 && xi <= 1.0)) throw std::invalid_argument("xi values must lie in [0,1]");
    if (min_subgroup < 1) throw std::invalid_argument("min_subgroup must be positive");
    if (!(zeta_offset > 0.0)) throw std::invalid_argument("zeta offset must be positive");
}

const ScoreEntry& ScoreTable::at(HypothesisId h) const {
    auto it = entries.find(h);
    if (it == entries.end())
        throw IndexError("no score for (" + std::to_string(h.j) + ", " + std::to_string(h.l) + ")");
    return it->second;
}

PriorWeights prior_from_coefficients(const Vector& coef, int p, double zeta_offset) {
    PriorWeights w;
    w.zeta_offset = zeta_offset;
    w.prior_score.resize(p);
    w.pi.resize(p);
    for (int j = 0; j < p; ++j) {
        w.prior_score[j] = std::abs(coef[j]) + std::abs(coef[j + p]);
        w.pi[j] = 1.0 / (zeta_offset + w.prior_score[j]);
    }
    return w;
}

PriorWeights prior_weights(const DataBundle& cloaked, double zeta_offset, const glm::CvOptions& cv,
                           std::uint64_t seed) {
    if (!(zeta_offset > 0.0)) throw std::invalid_argument("zeta offset must be positive");
    const Vector coef = cloaked_global_coefficients(cloaked, cv, derive_seed(seed, "prior"));
    return prior_from_coefficients(coef, static_cast<int>(cloaked.p()), zeta_offset);
}

namespace {

// Target pairs enter in a canonical order (lexicographically smaller column
// first) so that exchanging x_j and xk_j on the fitted rows leaves the design
// unchanged. Identical columns are entered once and share the coefficient.
struct PairDesign {
    Matrix x;
    Vector y;
    std::vector<std::pair<int, int>> target_cols;
    std::vector<int> prior_var;  // variable whose prior weight applies, -1 for z
};

bool lex_less(const Matrix& a, int ca, const Matrix& b, int cb, const std::vector<int>& rows) {
    for (int i : rows) {
        const double u = a(i, ca), v = b(i, cb);
        if (u != v) return u < v;
    }
    return false;
}

bool same_column(const Matrix& a, int ca, const Matrix& b, int cb, const std::vector<int>& rows) {
    for (int i : rows)
        if (a(i, ca) != b(i, cb)) return false;
    return true;
}

PairDesign build_design(const DataBundle& d, const DataBundle& cloaked, const std::vector<int>& rows,
                        const std::vector<int>& targets, const std::vector<int>& complement) {
    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    std::vector<std::pair<const Matrix*, int>> cols;
    PairDesign pd;
    for (int j : targets) {
        const int at = static_cast<int>(cols.size());
        if (same_column(d.x, j, d.xk, j, rows)) {
            cols.push_back({&d.x, j});
            pd.target_cols.push_back({at, at});
            pd.prior_var.push_back(j);
        } else if (lex_less(d.xk, j, d.x, j, rows)) {
            cols.push_back({&d.xk, j});
            cols.push_back({&d.x, j});
            pd.target_cols.push_back({at + 1, at});
            pd.prior_var.insert(pd.prior_var.end(), {j, j});
        } else {
            cols.push_back({&d.x, j});
            cols.push_back({&d.xk, j});
            pd.target_cols.push_back({at, at + 1});
            pd.prior_var.insert(pd.prior_var.end(), {j, j});
        }
    }
    for (int k : complement) {
        cols.push_back({&cloaked.x, k});
        pd.prior_var.push_back(k);
    }
    for (int k : complement) {
        cols.push_back({&cloaked.xk, k});
        pd.prior_var.push_back(k);
    }
    for (Eigen::Index c = 0; c < d.m(); ++c) {
        cols.push_back({&d.z, static_cast<int>(c)});
        pd.prior_var.push_back(-1);
    }
    pd.x.resize(nr, static_cast<Eigen::Index>(cols.size()));
    pd.y.resize(nr);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const Matrix& src = *cols[c].first;
        const int sc = cols[c].second;
        for (Eigen::Index r = 0; r < nr; ++r) pd.x(r, static_cast<Eigen::Index>(c)) = src(rows[r], sc);
    }
    for (Eigen::Index r = 0; r < nr; ++r) pd.y[r] = d.y[rows[r]];
    return pd;
}

Vector unit_factors(const PairDesign& pd) {
    Vector f(pd.x.cols());
    for (Eigen::Index c = 0; c < f.size(); ++c) f[c] = pd.prior_var[c] < 0 ? 0.0 : 1.0;
    return f;
}

std::pair<double, double> pair_scores(const PairDesign& pd, const Vector& beta, std::size_t target) {
    const auto [cx, ck] = pd.target_cols[target];
    if (cx == ck) {
        const double half = 0.5 * std::abs(beta[cx]);
        return {half, half};
    }
    return {std::abs(beta[cx]), std::abs(beta[ck])};
}

bool undersized(std::size_t rows, const ScoreConfig& cfg) {
    return static_cast<int>(rows) < std::max(cfg.min_subgroup, 2 * cfg.cv.folds);
}

void check_inputs(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu) {
    d.validate();
    cloaked.validate();
    if (cloaked.n() != d.n() || cloaked.p() != d.p() || cloaked.m() != d.m())
        throw DimensionError("cloaked view does not match the dataset");
    if (nu.p() != d.p()) throw DimensionError("partition covers a different number of variables");
}

}  // namespace

ScoreEntry local_score_pair(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu, int j, int l,
                            const PriorWeights* prior, const ScoreConfig& cfg, std::uint64_t seed,
                            const std::vector<int>& complement) {
    check_inputs(d, cloaked, nu);
    cfg.validate();
    const auto rows = subgroup_members(nu, j, l, d.z);
    ScoreEntry e;
    e.size = static_cast<int>(rows.size());
    if (undersized(rows.size(), cfg)) {
        e.skipped = true;
        return e;
    }
    std::vector<int> comp;
    for (int k : complement)
        if (k != j) comp.push_back(k);
    const PairDesign pd = build_design(d, cloaked, rows, {j}, comp);
    const Vector f1 = unit_factors(pd);
    const std::uint64_t fold_seed =
        derive_seed(seed, "scores", {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(l)});

    const bool weighted = prior && !(cfg.xi_grid.size() == 1 && cfg.xi_grid[0] == 0.0);
    glm::CvSession session(pd.x, pd.y, f1, cfg.cv.folds, fold_seed, weighted);
    const glm::CvResult cv = session.path(f1, cfg.cv);
    const glm::LassoFit fit0 = session.path_fit(cv.selected);
    if (!weighted) {
        std::tie(e.t, e.tk) = pair_scores(pd, fit0.beta, 0);
        return e;
    }

    const double lam = cv.lambda_selected;
    auto weighted_factors = [&](double xi) {
        Vector f(pd.x.cols());
        for (Eigen::Index c = 0; c < f.size(); ++c) {
            const int v = pd.prior_var[c];
            f[c] = v < 0 ? 0.0 : lam * (1.0 - xi) + xi * prior->pi[v];
        }
        return f;
    };
    double best_err = std::numeric_limits<double>::infinity();
    double best_xi = 0.0;
    for (double xi : cfg.xi_grid) {
        const double err = xi == 0.0 ? cv.cv_mean[cv.selected] : session.cv_error(1.0, weighted_factors(xi), cfg.cv.solver);
        if (err < best_err) {
            best_err = err;
            best_xi = xi;
        }
    }
    if (best_xi == 0.0) {
        std::tie(e.t, e.tk) = pair_scores(pd, fit0.beta, 0);
        return e;
    }
    const glm::LassoFit fit = session.fit_full(1.0, weighted_factors(best_xi), cfg.cv.solver, &fit0);
    std::tie(e.t, e.tk) = pair_scores(pd, fit.beta, 0);
    return e;
}

ScoreTable local_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                        const std::vector<int>& variables, const PriorWeights* prior, const ScoreConfig& cfg,
                        std::uint64_t seed) {
    ScoreTable table;
    for (int j : variables)
        for (int l = 0; l < nu.width(j); ++l) {
            const ScoreEntry e = local_score_pair(d, cloaked, nu, j, l, prior, cfg, seed, variables);
            if (!e.skipped) ++table.models_fitted;
            table.entries[{j, l}] = e;
        }
    return table;
}

ScoreTable batch_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                        const std::vector<std::vector<int>>& batches, const ScoreConfig& cfg, std::uint64_t seed,
                        const std::vector<int>* pool) {
    check_inputs(d, cloaked, nu);
    cfg.validate();
    std::vector<int> all;
    for (const auto& q : batches) all.insert(all.end(), q.begin(), q.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::invalid_argument("batches overlap");
    const std::vector<int>& members = pool ? *pool : all;

    ScoreTable table;
    for (const auto& q : batches) {
        if (q.empty()) continue;
        for (int j : q)
            if (!nu.same_rule(j, q.front())) throw std::invalid_argument("batch mixes different partition rules");
        std::vector<int> comp;
        for (int k : members)
            if (std::find(q.begin(), q.end(), k) == q.end()) comp.push_back(k);
        const int qmin = *std::min_element(q.begin(), q.end());
        for (int l = 0; l < nu.width(q.front()); ++l) {
            const auto rows = subgroup_members(nu, q.front(), l, d.z);
            if (undersized(rows.size(), cfg)) {
                for (int j : q) table.entries[{j, l}] = ScoreEntry{0.0, 0.0, static_cast<int>(rows.size()), true};
                continue;
            }
            const PairDesign pd = build_design(d, cloaked, rows, q, comp);
            const std::uint64_t fold_seed =
                derive_seed(seed, "scores", {static_cast<std::uint64_t>(qmin), static_cast<std::uint64_t>(l)});
            const auto fit = glm::lasso_cv(pd.x, pd.y, unit_factors(pd), cfg.cv, fold_seed).second;
            ++table.models_fitted;
            for (std::size_t a = 0; a < q.size(); ++a) {
                ScoreEntry e;
                e.size = static_cast<int>(rows.size());
                std::tie(e.t, e.tk) = pair_scores(pd, fit.beta, a);
                table.entries[{q[a], l}] = e;
            }
        }
    }
    return table;
}

ScoreTable block_aggregate(const ScoreTable& scores, const BlockMap& blocks, const PartitionSet& nu) {
    if (blocks.p() != nu.p()) throw DimensionError("block map and partition cover different variables");
    ScoreTable out;
    out.models_fitted = scores.models_fitted;
    for (const auto& [h, e] : scores.entries) {
        const int b = blocks.block_of(h.j);
        const int lead = blocks.members(b).front();
        if (!nu.same_rule(h.j, lead)) throw std::invalid_argument("variables in one block use different partition rules");
        auto [it, fresh] = out.entries.try_emplace({b, h.l}, ScoreEntry{0.0, 0.0, e.size, true});
        it->second.t += e.t;
        it->second.tk += e.tk;
        it->second.skipped = it->second.skipped && e.skipped;
        (void)fresh;
    }
    return out;
}

}  // namespace lokf
