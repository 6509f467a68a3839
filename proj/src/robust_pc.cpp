#include "lokf/robust_pc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "lokf/rng.hpp"

namespace lokf {

void PcConfig::validate() const {
    if (r_rule == RRule::Fixed && r < 1) throw std::invalid_argument("pc r must be at least 1");
    if (!(seqstep_c > 0.0 && seqstep_c < 1.0)) throw std::invalid_argument("seqstep c must lie in (0,1)");
}

namespace {

void check_prob(double prob) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("binomial probability outside [0,1]");
}

double log_pmf(long k, long m, double prob) {
    const double lc = std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
    const double a = k == 0 ? 0.0 : k * std::log(prob);
    const double b = m - k == 0 ? 0.0 : (m - k) * std::log1p(-prob);
    return lc + a + b;
}

}  // namespace

double binom_pmf(long k, long m, double prob) {
    check_prob(prob);
    if (m < 0) throw std::invalid_argument("binomial size must be nonnegative");
    if (k < 0 || k > m) return 0.0;
    if (prob == 0.0) return k == 0 ? 1.0 : 0.0;
    if (prob == 1.0) return k == m ? 1.0 : 0.0;
    return std::exp(log_pmf(k, m, prob));
}

double binom_cdf(long k, long m, double prob) {
    check_prob(prob);
    if (m < 0) throw std::invalid_argument("binomial size must be nonnegative");
    if (k < 0) return 0.0;
    if (k >= m) return 1.0;
    double s = 0.0;
    for (long i = 0; i <= k; ++i) s += binom_pmf(i, m, prob);
    return std::min(1.0, s);
}

double pc_pvalue(const std::vector<double>& w_row, int r, double u) {
    const long l0 = static_cast<long>(w_row.size());
    if (r < 1 || r > l0) throw std::invalid_argument("pc r must lie in [1, L0]");
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("u must lie in [0,1]");
    long neg = 0, zero = 0;
    for (double w : w_row) {
        if (w < 0) ++neg;
        if (w == 0) ++zero;
    }
    const long m = std::max(l0 - r + 1 - zero, 0L);
    const double p = binom_cdf(neg - 1, m, 0.5) + u * binom_pmf(neg, m, 0.5);
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

double pc_order(const std::vector<double>& w_row, int r) {
    if (r < 1 || r > static_cast<int>(w_row.size())) throw std::invalid_argument("pc r must lie in [1, row length]");
    std::vector<double> a;
    for (double w : w_row) a.push_back(std::abs(w));
    std::sort(a.begin(), a.end(), std::greater<>());
    double key = 1.0;
    for (int k = 0; k < r; ++k) key *= a[k];
    return key;
}

std::vector<int> seqstep_pvalues(const std::vector<double>& pvals, const std::vector<double>& keys, double alpha,
                                 double c) {
    if (pvals.size() != keys.size()) throw std::invalid_argument("p-values and keys differ in length");
    if (!(alpha > 0.0 && alpha < 1.0) || !(c > 0.0 && c < 1.0)) throw std::invalid_argument("alpha and c must lie in (0,1)");
    const int n = static_cast<int>(pvals.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] > keys[b]; });
    const double bound = alpha * (1.0 - c) / c;
    int best = 0;
    long above = 0, below = 0;
    for (int k = 1; k <= n; ++k) {
        if (pvals[order[k - 1]] > c) ++above;
        else ++below;
        if ((1.0 + above) / std::max(1.0, static_cast<double>(below)) <= bound) best = k;
    }
    std::vector<int> out;
    for (int k = 0; k < best; ++k)
        if (pvals[order[k]] <= c) out.push_back(order[k]);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<double>> padded_rows(const StatVector& stats, const PartitionSet& nu,
                                             const std::vector<int>& variables, int& l0) {
    l0 = 1;
    for (int j : variables) l0 = std::max(l0, nu.width(j));
    std::vector<std::vector<double>> rows(variables.size(), std::vector<double>(static_cast<std::size_t>(l0), 0.0));
    std::vector<int> pos(static_cast<std::size_t>(nu.p()), -1);
    for (std::size_t a = 0; a < variables.size(); ++a) pos[variables[a]] = static_cast<int>(a);
    for (const auto& e : stats)
        if (e.id.j < nu.p() && pos[e.id.j] >= 0) rows[pos[e.id.j]][e.id.l] = e.w;
    return rows;
}

RobustResult robust_from_stats(const AdaptiveStats& st, double alpha, const PcConfig& pc, std::uint64_t seed) {
    pc.validate();
    RobustResult res;
    res.partition = st.partition;
    res.alpha = alpha;
    const auto rows = padded_rows(st.stats, st.partition, st.variables, res.l0);
    std::vector<double> pv, keys;
    std::vector<int> idx;
    for (std::size_t a = 0; a < st.variables.size(); ++a) {
        const int j = st.variables[a];
        RobustDiscovery rd;
        rd.variable = j;
        rd.r = pc.r_rule == PcConfig::RRule::Full ? st.partition.width(j) : pc.r;
        if (rd.r > res.l0) throw std::invalid_argument("pc r exceeds the number of subgroups");
        Rng rng(derive_seed(seed, "pc-u", {static_cast<std::uint64_t>(j)}));
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        rd.p_value = pc_pvalue(rows[a], rd.r, u);
        rd.order_key = pc_order(rows[a], rd.r);
        res.tested.push_back(rd);
        // Rows without r nonzero entries carry no evidence; they stay out of the sequence.
        if (rd.order_key > 0.0) {
            pv.push_back(rd.p_value);
            keys.push_back(rd.order_key);
            idx.push_back(static_cast<int>(a));
        }
    }
    for (int k : seqstep_pvalues(pv, keys, alpha, pc.seqstep_c)) res.rejected.push_back(res.tested[idx[k]]);
    return res;
}

RobustResult robust_alkf(const DataBundle& d, double alpha, const LkfConfig& cfg, const PcConfig& pc,
                         std::uint64_t seed) {
    if (cfg.blocks) throw std::invalid_argument("the robust filter works at variable level only");
    const CloakMask v = draw_cloak(d, cfg, derive_seed(seed, "cloak"));
    return robust_from_stats(alkf_statistics(d, v, cfg, seed), alpha, pc, seed);
}

void write_robust_csv(std::ostream& out, const RobustResult& res) {
    out << "variable,block,subgroup_label,subgroup_definition,w,threshold,alpha,r,p_value\n";
    char buf[96];
    for (const auto& rd : res.rejected) {
        std::snprintf(buf, sizeof buf, "%d,,1,\"all\",,,%g,%d,%.10g\n", rd.variable + 1, res.alpha,
                      rd.r, rd.p_value);
        out << buf;
    }
}

}  // namespace lokf
