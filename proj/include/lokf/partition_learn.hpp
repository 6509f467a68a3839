#pragma once

#include <cstdint>
#include <vector>

#include "lokf/core.hpp"
#include "lokf/sparse_glm.hpp"

namespace lokf {

struct PartitionConfig {
    int g_max = 2;
    double c_main = 0.25;
    bool prescreen = false;
    std::uint64_t tie_seed = 0;
    glm::CvOptions cv{};

    void validate() const;
};

/// Cross-validated lasso of y on [x | xk | z] with z unpenalized. Returns the
/// standardized coefficients (length 2p + m).
Vector cloaked_global_coefficients(const DataBundle& cloaked, const glm::CvOptions& cv, std::uint64_t seed);

/// Variables j with a nonzero coefficient on x_j or xk_j in the cloaked fit.
std::vector<int> prescreen(const DataBundle& cloaked, std::uint64_t seed, const glm::CvOptions& cv = {});

/// |gamma_{c,j}| + |gamma_{c,j+p}| for every listed variable (rows, in order)
/// and binary covariate (columns, in order) from the interaction lasso.
Matrix interaction_strengths(const DataBundle& cloaked, const std::vector<int>& variables,
                             const std::vector<int>& binary_covariates, const PartitionConfig& cfg,
                             std::uint64_t seed);

/// Picks up to g_max covariates with the largest positive strength; exact ties
/// are broken by a shuffle seeded from (tie_seed, key).
std::vector<int> select_covariates(const Vector& strength, const std::vector<int>& binary_covariates, int g_max,
                                   std::uint64_t tie_seed, std::uint64_t key);

/// Learns one rule per variable from the cloaked data. Variables outside
/// `variables` (default: all) keep the trivial rule. With a block map, the
/// strengths of a block's members are summed and every member gets the block rule.
PartitionSet learn_partition(const DataBundle& cloaked, const std::vector<int>& binary_covariates,
                             const PartitionConfig& cfg, std::uint64_t seed,
                             const std::vector<int>* variables = nullptr, const BlockMap* blocks = nullptr);

/// Groups variables with identical rules, batches ordered by first member.
std::vector<std::vector<int>> group_batches(const PartitionSet& nu, const std::vector<int>* variables = nullptr);

}  // namespace lokf
