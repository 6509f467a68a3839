#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lokf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

/// Knockoff-augmented dataset: variables x, knockoffs xk, outcome y and
/// covariates z, one row per individual.
struct DataBundle {
    Matrix x;
    Matrix xk;
    Vector y;
    Matrix z;
    std::vector<std::string> column_names;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }
    Eigen::Index m() const { return z.cols(); }

    /// Throws DimensionError unless the shapes are mutually consistent.
    void validate() const;

    bool operator==(const DataBundle& other) const;
};

/// n x p swap indicator. Entry (i, j) = 1 exchanges x(i, j) with xk(i, j).
struct CloakMask {
    BitMatrix v;
    std::uint64_t seed = 0;

    static CloakMask zeros(Eigen::Index n, Eigen::Index p);
    static CloakMask draw(Eigen::Index n, Eigen::Index p, double prob, std::uint64_t seed);
};

struct HypothesisId {
    int j = 0;  // variable or block index, 0-based
    int l = 0;  // subgroup label, 0-based

    auto operator<=>(const HypothesisId&) const = default;
};

/// Per-variable partition rules. Variable j is split by the joint
/// configuration of the binary covariates in covariates(j); an empty list is
/// the trivial single-group rule.
class PartitionSet {
  public:
    PartitionSet() = default;
    explicit PartitionSet(std::vector<std::vector<int>> covariates);

    static PartitionSet trivial(int p);
    /// Every variable split by the same covariate list.
    static PartitionSet uniform(int p, std::vector<int> covariates);

    int p() const { return static_cast<int>(cov_.size()); }
    int width(int j) const;
    int total_width() const;
    const std::vector<int>& covariates(int j) const;
    bool same_rule(int j, int k) const { return covariates(j) == covariates(k); }
    bool is_valid(HypothesisId h) const;
    void check(HypothesisId h) const;

    /// Label of row i of z under rule j. Labels use big-endian binary encoding
    /// over the sorted covariate list.
    int label(int j, const Matrix& z, Eigen::Index i) const;
    std::vector<int> labels(int j, const Matrix& z) const;

    /// Human-readable subgroup definition, e.g. "Z1=1,Z3=0" or "all".
    std::string describe(int j, int l) const;

    std::vector<HypothesisId> hypotheses() const;

    bool operator==(const PartitionSet&) const = default;

  private:
    std::vector<std::vector<int>> cov_;
};

/// Assignment of variables to contiguous, nonempty blocks.
class BlockMap {
  public:
    BlockMap() = default;
    explicit BlockMap(std::vector<int> block_of);

    static BlockMap from_sizes(const std::vector<int>& sizes);
    static BlockMap singletons(int p);

    int p() const { return static_cast<int>(block_of_.size()); }
    int n_blocks() const { return static_cast<int>(first_.size()); }
    int block_of(int j) const { return block_of_.at(j); }
    std::vector<int> members(int b) const;

  private:
    std::vector<int> block_of_;
    std::vector<int> first_;
};

/// Swaps x and xk entry-wise wherever the mask is set.
DataBundle cloak_swap(const DataBundle& d, const CloakMask& v);

/// Swaps the sub-columns of x_j and xk_j restricted to subgroup l of rule j,
/// for every (j, l) in s.
DataBundle swap_subgroups(const DataBundle& d, const std::set<HypothesisId>& s,
                          const PartitionSet& nu);

/// Sorted rows i with label_j(z_i) == l.
std::vector<int> subgroup_members(const PartitionSet& nu, int j, int l, const Matrix& z);

/// Indices of z columns whose entries are all exactly 0 or 1.
std::vector<int> binary_columns(const Matrix& z);

}  // namespace lokf
