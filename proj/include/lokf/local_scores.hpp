#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lokf/core.hpp"
#include "lokf/sparse_glm.hpp"

namespace lokf {

struct ScoreConfig {
    glm::CvOptions cv{};
    std::vector<double> xi_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    int min_subgroup = 30;
    double zeta_offset = 0.05;
    bool use_prior = true;

    void validate() const;
};

struct ScoreEntry {
    double t = 0.0;
    double tk = 0.0;
    int size = 0;
    bool skipped = false;

    bool operator==(const ScoreEntry&) const = default;
};

struct ScoreTable {
    std::map<HypothesisId, ScoreEntry> entries;
    int models_fitted = 0;

    const ScoreEntry& at(HypothesisId h) const;
};

struct PriorWeights {
    Vector pi;           // length p
    Vector prior_score;  // |b_j| + |b_{j+p}| from the cloaked fit
    double zeta_offset = 0.05;
};

/// pi_j = 1 / (zeta_offset + |b_j| + |b_{j+p}|) from a cross-validated lasso on
/// the cloaked [x | xk | z], z unpenalized.
PriorWeights prior_weights(const DataBundle& cloaked, double zeta_offset, const glm::CvOptions& cv,
                           std::uint64_t seed);
PriorWeights prior_from_coefficients(const Vector& coef, int p, double zeta_offset);

/// Scores of (x_j, xk_j) in subgroup l of rule j. The design is
/// [x_j | xk_j | cloaked x and xk of `complement` | z] on the subgroup rows; the
/// CV folds come from derive_seed(seed, "scores", {j, l}). Without priors (or
/// with xi_grid = {0}) this is an unweighted cross-validated lasso.
ScoreEntry local_score_pair(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu, int j, int l,
                            const PriorWeights* prior, const ScoreConfig& cfg, std::uint64_t seed,
                            const std::vector<int>& complement);

/// local_score_pair over every (j, l) with j in `variables`; the complement of
/// j is `variables` without j.
ScoreTable local_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                        const std::vector<int>& variables, const PriorWeights* prior, const ScoreConfig& cfg,
                        std::uint64_t seed);

/// One cross-validated lasso per (batch, subgroup) on
/// [x_Q | xk_Q | cloaked x and xk of pool \ Q | z]. Folds come from
/// derive_seed(seed, "scores", {min Q, l}). `pool` defaults to the union of batches.
ScoreTable batch_scores(const DataBundle& d, const DataBundle& cloaked, const PartitionSet& nu,
                        const std::vector<std::vector<int>>& batches, const ScoreConfig& cfg, std::uint64_t seed,
                        const std::vector<int>* pool = nullptr);

/// Sums variable scores within each block; keys become (block, l).
ScoreTable block_aggregate(const ScoreTable& scores, const BlockMap& blocks, const PartitionSet& nu);

}  // namespace lokf
