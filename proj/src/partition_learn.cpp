#include "lokf/partition_learn.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "lokf/rng.hpp"

namespace lokf {

void PartitionConfig::validate() const {
    if (g_max < 0) throw std::invalid_argument("g_max must be nonnegative");
    if (!(c_main > 0.0 && c_main <= 1.0)) throw std::invalid_argument("c_main must lie in (0,1]");
}

namespace {

std::vector<int> all_variables(int p) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

Vector cloaked_global_coefficients(const DataBundle& cloaked, const glm::CvOptions& cv, std::uint64_t seed) {
    cloaked.validate();
    const Eigen::Index n = cloaked.n(), p = cloaked.p(), m = cloaked.m();
    Matrix design(n, 2 * p + m);
    design << cloaked.x, cloaked.xk, cloaked.z;
    Vector factors = Vector::Zero(2 * p + m);
    factors.head(2 * p).setOnes();
    return glm::lasso_cv(design, cloaked.y, factors, cv, seed).second.beta;
}

std::vector<int> prescreen(const DataBundle& cloaked, std::uint64_t seed, const glm::CvOptions& cv) {
    const Vector b = cloaked_global_coefficients(cloaked, cv, seed);
    const Eigen::Index p = cloaked.p();
    std::vector<int> keep;
    for (Eigen::Index j = 0; j < p; ++j)
        if (std::abs(b[j]) + std::abs(b[j + p]) > 0.0) keep.push_back(static_cast<int>(j));
    return keep;
}

Matrix interaction_strengths(const DataBundle& cloaked, const std::vector<int>& variables,
                             const std::vector<int>& binary_covariates, const PartitionConfig& cfg,
                             std::uint64_t seed) {
    cfg.validate();
    cloaked.validate();
    const int s = static_cast<int>(variables.size());
    const int mb = static_cast<int>(binary_covariates.size());
    Matrix strength = Matrix::Zero(s, mb);
    if (s == 0 || mb == 0 || cfg.g_max == 0) return strength;
    const Eigen::Index n = cloaked.n();

    Matrix xc(n, 2 * s);
    for (int a = 0; a < s; ++a) {
        xc.col(a) = cloaked.x.col(variables[a]);
        xc.col(a + s) = cloaked.xk.col(variables[a]);
    }
    Matrix zb(n, mb);
    std::vector<char> is_bin(static_cast<std::size_t>(cloaked.m()), 0);
    for (int c = 0; c < mb; ++c) {
        const int col = binary_covariates[c];
        if (col < 0 || col >= cloaked.m()) throw IndexError("binary covariate index out of range");
        zb.col(c) = cloaked.z.col(col);
        is_bin[col] = 1;
    }
    const auto inter = glm::interaction_design(xc, zb);
    std::vector<int> other;
    for (int c = 0; c < cloaked.m(); ++c)
        if (!is_bin[c]) other.push_back(c);

    const Eigen::Index q = inter.design.values.cols();
    const Eigen::Index qo = static_cast<Eigen::Index>(other.size());
    Matrix design(n, q + qo);
    design.leftCols(q) = inter.design.values;
    for (Eigen::Index c = 0; c < qo; ++c) design.col(q + c) = cloaked.z.col(other[c]);
    Vector factors = Vector::Zero(q + qo);
    for (Eigen::Index k = 0; k < q; ++k) {
        switch (inter.columns[k].kind) {
            case glm::ColumnKind::Main: factors[k] = cfg.c_main; break;
            case glm::ColumnKind::Covariate: factors[k] = 0.0; break;
            case glm::ColumnKind::Interaction: factors[k] = 1.0; break;
        }
    }
    const auto fit = glm::lasso_cv(design, cloaked.y, factors, cfg.cv, seed).second;
    for (Eigen::Index k = 0; k < q; ++k) {
        const auto& src = inter.columns[k];
        if (src.kind != glm::ColumnKind::Interaction) continue;
        strength(src.main % s, src.covariate) += std::abs(fit.beta[k]);
    }
    return strength;
}

std::vector<int> select_covariates(const Vector& strength, const std::vector<int>& binary_covariates, int g_max,
                                   std::uint64_t tie_seed, std::uint64_t key) {
    std::vector<int> cand;
    for (Eigen::Index c = 0; c < strength.size(); ++c)
        if (strength[c] > 0.0) cand.push_back(static_cast<int>(c));
    if (cand.empty() || g_max == 0) return {};
    Rng rng(derive_seed(tie_seed, "ties", {key}));
    std::shuffle(cand.begin(), cand.end(), rng);
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return strength[a] > strength[b]; });
    cand.resize(std::min<std::size_t>(cand.size(), static_cast<std::size_t>(g_max)));
    std::vector<int> out;
    for (int c : cand) out.push_back(binary_covariates[c]);
    std::sort(out.begin(), out.end());
    return out;
}

PartitionSet learn_partition(const DataBundle& cloaked, const std::vector<int>& binary_covariates,
                             const PartitionConfig& cfg, std::uint64_t seed, const std::vector<int>* variables,
                             const BlockMap* blocks) {
    cfg.validate();
    const int p = static_cast<int>(cloaked.p());
    const std::vector<int> vars = variables ? *variables : all_variables(p);
    for (const auto& c : binary_covariates)
        for (Eigen::Index i = 0; i < cloaked.n(); ++i)
            if (cloaked.z(i, c) != 0.0 && cloaked.z(i, c) != 1.0)
                throw std::invalid_argument("partition covariate Z" + std::to_string(c + 1) + " is not binary");
    std::vector<std::vector<int>> rules(static_cast<std::size_t>(p));
    if (cfg.g_max == 0 || binary_covariates.empty() || vars.empty()) return PartitionSet(std::move(rules));
    const Matrix strength = interaction_strengths(cloaked, vars, binary_covariates, cfg, seed);
    if (!blocks) {
        for (std::size_t a = 0; a < vars.size(); ++a)
            rules[vars[a]] = select_covariates(strength.row(static_cast<Eigen::Index>(a)).transpose(),
                                               binary_covariates, cfg.g_max, cfg.tie_seed,
                                               static_cast<std::uint64_t>(vars[a]));
        return PartitionSet(std::move(rules));
    }
    if (blocks->p() != p) throw DimensionError("block map covers a different number of variables");
    std::map<int, Vector> by_block;
    for (std::size_t a = 0; a < vars.size(); ++a) {
        const int b = blocks->block_of(vars[a]);
        auto it = by_block.find(b);
        if (it == by_block.end()) it = by_block.emplace(b, Vector::Zero(strength.cols())).first;
        it->second += strength.row(static_cast<Eigen::Index>(a)).transpose();
    }
    for (const auto& [b, st] : by_block) {
        const auto rule =
            select_covariates(st, binary_covariates, cfg.g_max, cfg.tie_seed, static_cast<std::uint64_t>(b));
        for (int j : blocks->members(b)) rules[j] = rule;
    }
    return PartitionSet(std::move(rules));
}

std::vector<std::vector<int>> group_batches(const PartitionSet& nu, const std::vector<int>* variables) {
    const std::vector<int> vars = variables ? *variables : all_variables(nu.p());
    std::vector<std::vector<int>> batches;
    std::map<std::vector<int>, std::size_t> index;
    for (int j : vars) {
        auto [it, fresh] = index.emplace(nu.covariates(j), batches.size());
        if (fresh) batches.emplace_back();
        batches[it->second].push_back(j);
    }
    return batches;
}

}  // namespace lokf
