#include "lokf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "lokf/rng.hpp"

namespace lokf {

bool DiscoverySet::is_rejected(HypothesisId h) const {
    return std::find(rejected.begin(), rejected.end(), h) != rejected.end();
}

StatVector assemble_W(const ScoreTable& scores) {
    StatVector out;
    out.reserve(scores.entries.size());
    for (const auto& [h, e] : scores.entries) out.push_back({h, e.t - e.tk});
    return out;
}

namespace {

struct ThresholdScan {
    double tau = std::numeric_limits<double>::infinity();
    std::optional<double> ratio;
};

ThresholdScan scan(const std::vector<double>& w, double alpha) {
    std::vector<double> pos, neg;
    for (double v : w) {
        if (v > 0) pos.push_back(v);
        if (v < 0) neg.push_back(-v);
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::vector<double> cand(pos);
    cand.insert(cand.end(), neg.begin(), neg.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    auto at_least = [](const std::vector<double>& s, double t) {
        return static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), t));
    };
    for (double t : cand) {
        const double ratio = (1.0 + at_least(neg, t)) / std::max(1.0, at_least(pos, t));
        if (ratio <= alpha) return {t, ratio};
    }
    return {};
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
}

std::vector<int> all_variables(int p) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

PartitionSet block_partition(const PartitionSet& nu, const BlockMap& blocks) {
    std::vector<std::vector<int>> rules;
    for (int b = 0; b < blocks.n_blocks(); ++b) rules.push_back(nu.covariates(blocks.members(b).front()));
    return PartitionSet(std::move(rules));
}

// In block mode a screened variable brings in its whole block.
std::vector<int> expand_to_blocks(const std::vector<int>& vars, const LkfConfig& cfg) {
    if (!cfg.blocks) return vars;
    std::vector<char> keep(static_cast<std::size_t>(cfg.blocks->n_blocks()), 0);
    for (int j : vars) keep[cfg.blocks->block_of(j)] = 1;
    std::vector<int> out;
    for (int b = 0; b < cfg.blocks->n_blocks(); ++b)
        if (keep[b])
            for (int j : cfg.blocks->members(b)) out.push_back(j);
    return out;
}

DiscoverySet finish(const ScoreTable& scores, const PartitionSet& nu, double alpha, const LkfConfig& cfg) {
    if (cfg.blocks) {
        DiscoverySet ds = knockoff_threshold(assemble_W(block_aggregate(scores, *cfg.blocks, nu)), alpha);
        ds.partition = block_partition(nu, *cfg.blocks);
        ds.blocks = cfg.blocks;
        return ds;
    }
    DiscoverySet ds = knockoff_threshold(assemble_W(scores), alpha);
    ds.partition = nu;
    return ds;
}

}  // namespace

double knockoff_threshold_value(const std::vector<double>& w, double alpha) { return scan(w, alpha).tau; }

DiscoverySet knockoff_threshold(const StatVector& w, double alpha) {
    check_alpha(alpha);
    std::vector<double> vals;
    for (const auto& e : w) vals.push_back(e.w);
    const ThresholdScan s = scan(vals, alpha);
    DiscoverySet ds;
    ds.alpha = alpha;
    ds.threshold = s.tau;
    ds.fdp_estimate = s.ratio;
    ds.stats = w;
    for (const auto& e : w)
        if (e.w >= s.tau) ds.rejected.push_back(e.id);
    return ds;
}

void LkfConfig::validate() const {
    scores.validate();
    partition.validate();
    if (!(cloak_prob >= 0.0 && cloak_prob <= 1.0)) throw std::invalid_argument("cloak_prob must lie in [0,1]");
}

std::vector<int> partition_candidates(const DataBundle& d, const LkfConfig& cfg) {
    if (!cfg.binary_covariates) return binary_columns(d.z);
    for (int c : *cfg.binary_covariates)
        if (c < 0 || c >= d.m()) throw IndexError("partition covariate out of range");
    return *cfg.binary_covariates;
}

CloakMask draw_cloak(const DataBundle& d, const LkfConfig& cfg, std::uint64_t seed) {
    if (!cfg.blocks) return CloakMask::draw(d.n(), d.p(), cfg.cloak_prob, seed);
    if (cfg.blocks->p() != d.p()) throw DimensionError("block map covers a different number of variables");
    const CloakMask per_block = CloakMask::draw(d.n(), cfg.blocks->n_blocks(), cfg.cloak_prob, seed);
    CloakMask v;
    v.seed = seed;
    v.v.resize(d.n(), d.p());
    for (Eigen::Index j = 0; j < d.p(); ++j) v.v.col(j) = per_block.v.col(cfg.blocks->block_of(static_cast<int>(j)));
    return v;
}

ScoreTable lkf_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                      const std::vector<int>& variables, const LkfConfig& cfg, std::uint64_t seed) {
    if (cfg.blocks || cfg.path == ScorePath::Batch)
        return batch_scores(d, cloaked, nu, group_batches(nu, &variables), cfg.scores, seed, &variables);
    std::optional<PriorWeights> prior;
    if (cfg.scores.use_prior) prior = prior_weights(cloaked, cfg.scores.zeta_offset, cfg.scores.cv, seed);
    return local_scores(d, cloaked, nu, variables, prior ? &*prior : nullptr, cfg.scores, seed);
}

DiscoverySet lkf_fixed(const DataBundle& d, const CloakMask& v, const PartitionSet& nu, double alpha,
                       const LkfConfig& cfg, std::uint64_t seed, const std::vector<int>* variables) {
    check_alpha(alpha);
    cfg.validate();
    const std::vector<int> vars = variables ? *variables : all_variables(static_cast<int>(d.p()));
    const DataBundle cloaked = cloak_swap(d, v);
    return finish(lkf_scores(d, cloaked, nu, vars, cfg, seed), nu, alpha, cfg);
}

AdaptiveStats alkf_statistics(const DataBundle& d, const CloakMask& v, const LkfConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const DataBundle cloaked = cloak_swap(d, v);
    AdaptiveStats out;
    out.variables = cfg.partition.prescreen
                        ? expand_to_blocks(prescreen(cloaked, derive_seed(seed, "prescreen"), cfg.scores.cv), cfg)
                        : all_variables(static_cast<int>(d.p()));
    PartitionConfig pcfg = cfg.partition;
    pcfg.tie_seed = derive_seed(seed, "ties", {cfg.partition.tie_seed});
    out.partition = learn_partition(cloaked, partition_candidates(d, cfg), pcfg, derive_seed(seed, "partition"),
                                    &out.variables, cfg.blocks ? &*cfg.blocks : nullptr);
    out.scores = lkf_scores(d, cloaked, out.partition, out.variables, cfg, seed);
    out.stats = cfg.blocks ? assemble_W(block_aggregate(out.scores, *cfg.blocks, out.partition))
                           : assemble_W(out.scores);
    return out;
}

std::pair<PartitionSet, DiscoverySet> alkf(const DataBundle& d, double alpha, const LkfConfig& cfg,
                                           std::uint64_t seed) {
    check_alpha(alpha);
    const CloakMask v = draw_cloak(d, cfg, derive_seed(seed, "cloak"));
    const AdaptiveStats st = alkf_statistics(d, v, cfg, seed);
    return {st.partition, finish(st.scores, st.partition, alpha, cfg)};
}

DiscoverySet naive_lkf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed) {
    check_alpha(alpha);
    const AdaptiveStats st = alkf_statistics(d, CloakMask::zeros(d.n(), d.p()), cfg, seed);
    return finish(st.scores, st.partition, alpha, cfg);
}

DiscoverySet global_kf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed) {
    check_alpha(alpha);
    cfg.validate();
    const int p = static_cast<int>(d.p());
    const PartitionSet nu = PartitionSet::trivial(p);
    return finish(batch_scores(d, d, nu, {all_variables(p)}, cfg.scores, seed), nu, alpha, cfg);
}

DiscoverySet fixed_lkf(const DataBundle& d, const std::vector<int>& env_covariates, double alpha,
                       const LkfConfig& cfg, std::uint64_t seed) {
    check_alpha(alpha);
    cfg.validate();
    const int p = static_cast<int>(d.p());
    for (int c : env_covariates)
        if (c < 0 || c >= d.m()) throw IndexError("environment covariate out of range");
    const PartitionSet nu = PartitionSet::uniform(p, env_covariates);
    return finish(batch_scores(d, d, nu, {all_variables(p)}, cfg.scores, seed), nu, alpha, cfg);
}

std::pair<std::vector<int>, std::vector<int>> split_rows(int n, std::uint64_t seed) {
    std::vector<int> perm = all_variables(n);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> a(perm.begin(), perm.begin() + n / 2), b(perm.begin() + n / 2, perm.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a, b};
}

DataBundle subset_rows(const DataBundle& d, const std::vector<int>& rows) {
    DataBundle out;
    out.x = d.x(rows, Eigen::all);
    out.xk = d.xk(rows, Eigen::all);
    out.y = d.y(rows);
    out.z = d.z(rows, Eigen::all);
    out.column_names = d.column_names;
    return out;
}

DiscoverySet split_lkf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed) {
    check_alpha(alpha);
    cfg.validate();
    const auto [ra, rb] = split_rows(static_cast<int>(d.n()), derive_seed(seed, "split"));
    const DataBundle da = subset_rows(d, ra), db = subset_rows(d, rb);
    const std::vector<int> vars =
        cfg.partition.prescreen
            ? expand_to_blocks(prescreen(da, derive_seed(seed, "prescreen"), cfg.scores.cv), cfg)
            : all_variables(static_cast<int>(d.p()));
    PartitionConfig pcfg = cfg.partition;
    pcfg.tie_seed = derive_seed(seed, "ties", {cfg.partition.tie_seed});
    const PartitionSet nu = learn_partition(da, partition_candidates(d, cfg), pcfg, derive_seed(seed, "partition"),
                                            &vars, cfg.blocks ? &*cfg.blocks : nullptr);
    const CloakMask v = draw_cloak(db, cfg, derive_seed(seed, "cloak"));
    return lkf_fixed(db, v, nu, alpha, cfg, seed, &vars);
}

void write_discoveries_csv(std::ostream& out, const DiscoverySet& disc) {
    out << "variable,block,subgroup_label,subgroup_definition,w,threshold,alpha\n";
    char buf[64];
    for (const auto& h : disc.rejected) {
        double w = 0.0;
        for (const auto& e : disc.stats)
            if (e.id == h) w = e.w;
        if (disc.blocks) {
            const auto mem = disc.blocks->members(h.j);
            for (std::size_t k = 0; k < mem.size(); ++k) out << (k ? ";" : "") << mem[k] + 1;
            out << ',' << h.j + 1;
        } else {
            out << h.j + 1 << ',';
        }
        out << ',' << h.l + 1 << ",\"" << disc.partition.describe(h.j, h.l) << "\",";
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%g", w, disc.threshold, disc.alpha);
        out << buf << '\n';
    }
}

}  // namespace lokf
