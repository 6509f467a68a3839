#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lokf/filter.hpp"

namespace lokf {

struct PcConfig {
    enum class RRule { Fixed, Full };
    RRule r_rule = RRule::Full;
    int r = 1;               // used with RRule::Fixed
    double seqstep_c = 0.5;

    void validate() const;
};

/// P(Bin(m, prob) <= k).
double binom_cdf(long k, long m, double prob);
double binom_pmf(long k, long m, double prob);

/// Randomized partial-conjunction p-value from the signs of a padded W row.
double pc_pvalue(const std::vector<double>& w_row, int r, double u);

/// Product of the r largest |w|.
double pc_order(const std::vector<double>& w_row, int r);

/// Selective SeqStep+ over p-values visited in decreasing key order (ties by
/// index). Returns the rejected indices, ascending.
std::vector<int> seqstep_pvalues(const std::vector<double>& pvals, const std::vector<double>& keys, double alpha,
                                 double c);

struct RobustDiscovery {
    int variable = 0;
    int r = 1;
    double p_value = 1.0;
    double order_key = 0.0;
};

struct RobustResult {
    std::vector<RobustDiscovery> rejected;
    std::vector<RobustDiscovery> tested;
    PartitionSet partition;
    int l0 = 1;
    double alpha = 0.0;
};

/// Per-variable rows of W padded with zeros to the largest width among `variables`.
std::vector<std::vector<double>> padded_rows(const StatVector& stats, const PartitionSet& nu,
                                             const std::vector<int>& variables, int& l0);

RobustResult robust_from_stats(const AdaptiveStats& st, double alpha, const PcConfig& pc, std::uint64_t seed);
RobustResult robust_alkf(const DataBundle& d, double alpha, const LkfConfig& cfg, const PcConfig& pc,
                         std::uint64_t seed);

/// Discovery CSV columns plus r and p_value; subgroup columns read "all".
void write_robust_csv(std::ostream& out, const RobustResult& res);

}  // namespace lokf
