#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lokf/core.hpp"
#include "lokf/local_scores.hpp"
#include "lokf/partition_learn.hpp"

namespace lokf {

struct StatEntry {
    HypothesisId id;
    double w = 0.0;
};
using StatVector = std::vector<StatEntry>;

/// Hypotheses of a run with the rejected subset. In block mode `id.j` is a
/// block index and `blocks` is set.
struct DiscoverySet {
    std::vector<HypothesisId> rejected;
    double threshold = 0.0;  // +inf when nothing is rejected
    std::optional<double> fdp_estimate;
    double alpha = 0.0;
    PartitionSet partition;
    StatVector stats;
    std::optional<BlockMap> blocks;

    bool is_rejected(HypothesisId h) const;
};

StatVector assemble_W(const ScoreTable& scores);

/// Knockoff+ threshold: smallest t among the nonzero |w| with
/// (1 + #{w <= -t}) / max(1, #{w >= t}) <= alpha; +inf if none.
double knockoff_threshold_value(const std::vector<double>& w, double alpha);
DiscoverySet knockoff_threshold(const StatVector& w, double alpha);

enum class ScorePath { Local, Batch };

struct LkfConfig {
    ScoreConfig scores{};
    PartitionConfig partition{};
    ScorePath path = ScorePath::Local;
    double cloak_prob = 0.5;
    std::vector<int> env_covariates{0, 1};                // Fixed-LKF environments
    std::optional<std::vector<int>> binary_covariates;    // default: every binary z column
    std::optional<BlockMap> blocks;                       // block-level hypotheses when set

    void validate() const;
};

/// Binary z columns eligible for partition rules.
std::vector<int> partition_candidates(const DataBundle& d, const LkfConfig& cfg);

/// Row-level cloak; in block mode one draw per (row, block) shared by the block.
CloakMask draw_cloak(const DataBundle& d, const LkfConfig& cfg, std::uint64_t seed);

/// Scores for a fixed partition over `variables` given a cloaked view.
ScoreTable lkf_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                      const std::vector<int>& variables, const LkfConfig& cfg, std::uint64_t seed);

DiscoverySet lkf_fixed(const DataBundle& d, const CloakMask& v, const PartitionSet& nu, double alpha,
                       const LkfConfig& cfg, std::uint64_t seed, const std::vector<int>* variables = nullptr);

/// Statistics of the adaptive filter before thresholding.
struct AdaptiveStats {
    PartitionSet partition;
    std::vector<int> variables;  // hypotheses cover these variables (after screening)
    StatVector stats;
    ScoreTable scores;
};

AdaptiveStats alkf_statistics(const DataBundle& d, const CloakMask& v, const LkfConfig& cfg, std::uint64_t seed);

std::pair<PartitionSet, DiscoverySet> alkf(const DataBundle& d, double alpha, const LkfConfig& cfg,
                                           std::uint64_t seed);
DiscoverySet global_kf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed);
DiscoverySet split_lkf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed);
DiscoverySet naive_lkf(const DataBundle& d, double alpha, const LkfConfig& cfg, std::uint64_t seed);
DiscoverySet fixed_lkf(const DataBundle& d, const std::vector<int>& env_covariates, double alpha,
                       const LkfConfig& cfg, std::uint64_t seed);

/// Rows sorted ascending; the second half gets the extra row when n is odd.
std::pair<std::vector<int>, std::vector<int>> split_rows(int n, std::uint64_t seed);
DataBundle subset_rows(const DataBundle& d, const std::vector<int>& rows);

/// Discovery CSV: variable, block, subgroup_label, subgroup_definition, w, threshold, alpha.
void write_discoveries_csv(std::ostream& out, const DiscoverySet& disc);

}  // namespace lokf
