#include "lokf/core.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "lokf/rng.hpp"

namespace lokf {

void DataBundle::validate() const {
    if (x.rows() < 1 || x.cols() < 1) throw DimensionError("dataset needs n >= 1 and p >= 1");
    if (xk.rows() != x.rows() || xk.cols() != x.cols())
        throw DimensionError("x and xk must have identical shape");
    if (y.size() != x.rows()) throw DimensionError("y must have one entry per row of x");
    if (z.rows() != x.rows())
        throw DimensionError("z must have one row per row of x");
}

bool DataBundle::operator==(const DataBundle& o) const {
    return x == o.x && xk == o.xk && y == o.y && z.rows() == o.z.rows() &&
           z.cols() == o.z.cols() && z == o.z;
}

CloakMask CloakMask::zeros(Eigen::Index n, Eigen::Index p) {
    CloakMask c;
    c.v = BitMatrix::Zero(n, p);
    return c;
}

CloakMask CloakMask::draw(Eigen::Index n, Eigen::Index p, double prob, std::uint64_t seed) {
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("cloak probability must lie in [0,1]");
    CloakMask c;
    c.seed = seed;
    c.v.resize(n, p);
    Rng rng(seed);
    std::bernoulli_distribution coin(prob);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) c.v(i, j) = coin(rng) ? 1 : 0;
    return c;
}

PartitionSet::PartitionSet(std::vector<std::vector<int>> covariates) : cov_(std::move(covariates)) {
    for (auto& c : cov_) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
        if (!c.empty() && c.front() < 0) throw IndexError("negative covariate index in partition rule");
        if (c.size() > 30) throw std::invalid_argument("partition rule uses too many covariates");
    }
}

PartitionSet PartitionSet::trivial(int p) { return PartitionSet(std::vector<std::vector<int>>(p)); }

PartitionSet PartitionSet::uniform(int p, std::vector<int> covariates) {
    return PartitionSet(std::vector<std::vector<int>>(p, std::move(covariates)));
}

int PartitionSet::width(int j) const { return 1 << covariates(j).size(); }

int PartitionSet::total_width() const {
    int total = 0;
    for (int j = 0; j < p(); ++j) total += width(j);
    return total;
}

const std::vector<int>& PartitionSet::covariates(int j) const {
    if (j < 0 || j >= p()) throw IndexError("variable index out of range: " + std::to_string(j));
    return cov_[j];
}

bool PartitionSet::is_valid(HypothesisId h) const {
    return h.j >= 0 && h.j < p() && h.l >= 0 && h.l < width(h.j);
}

void PartitionSet::check(HypothesisId h) const {
    if (!is_valid(h))
        throw IndexError("invalid hypothesis (" + std::to_string(h.j) + ", " + std::to_string(h.l) + ")");
}

int PartitionSet::label(int j, const Matrix& z, Eigen::Index i) const {
    int l = 0;
    for (int c : covariates(j)) {
        if (c >= z.cols()) throw IndexError("partition covariate out of range");
        const double v = z(i, c);
        if (v != 0.0 && v != 1.0)
            throw std::invalid_argument("partition covariate Z" + std::to_string(c + 1) + " is not binary");
        l = (l << 1) | (v == 1.0 ? 1 : 0);
    }
    return l;
}

std::vector<int> PartitionSet::labels(int j, const Matrix& z) const {
    std::vector<int> out(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) out[i] = label(j, z, i);
    return out;
}

std::string PartitionSet::describe(int j, int l) const {
    check({j, l});
    const auto& c = covariates(j);
    if (c.empty()) return "all";
    std::ostringstream os;
    const int k = static_cast<int>(c.size());
    for (int t = 0; t < k; ++t) {
        if (t) os << ',';
        os << 'Z' << (c[t] + 1) << '=' << ((l >> (k - 1 - t)) & 1);
    }
    return os.str();
}

std::vector<HypothesisId> PartitionSet::hypotheses() const {
    std::vector<HypothesisId> out;
    for (int j = 0; j < p(); ++j)
        for (int l = 0; l < width(j); ++l) out.push_back({j, l});
    return out;
}

BlockMap::BlockMap(std::vector<int> block_of) : block_of_(std::move(block_of)) {
    int expected = 0;
    for (std::size_t j = 0; j < block_of_.size(); ++j) {
        const int b = block_of_[j];
        if (j == 0) {
            if (b != 0) throw std::invalid_argument("blocks must be numbered from 0");
            first_.push_back(0);
        } else if (b == expected + 1) {
            ++expected;
            first_.push_back(static_cast<int>(j));
        } else if (b != expected) {
            throw std::invalid_argument("blocks must be contiguous index ranges numbered in order");
        }
    }
}

BlockMap BlockMap::from_sizes(const std::vector<int>& sizes) {
    std::vector<int> of;
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (sizes[b] < 1) throw std::invalid_argument("blocks must be nonempty");
        of.insert(of.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
    }
    return BlockMap(std::move(of));
}

BlockMap BlockMap::singletons(int p) {
    std::vector<int> of(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) of[j] = j;
    return BlockMap(std::move(of));
}

std::vector<int> BlockMap::members(int b) const {
    if (b < 0 || b >= n_blocks()) throw IndexError("block index out of range");
    const int lo = first_[b];
    const int hi = b + 1 < n_blocks() ? first_[b + 1] : p();
    std::vector<int> out;
    for (int j = lo; j < hi; ++j) out.push_back(j);
    return out;
}

DataBundle cloak_swap(const DataBundle& d, const CloakMask& v) {
    if (v.v.rows() != d.n() || v.v.cols() != d.p())
        throw DimensionError("cloak mask shape does not match the dataset");
    DataBundle out = d;
    for (Eigen::Index j = 0; j < d.p(); ++j)
        for (Eigen::Index i = 0; i < d.n(); ++i)
            if (v.v(i, j)) std::swap(out.x(i, j), out.xk(i, j));
    return out;
}

DataBundle swap_subgroups(const DataBundle& d, const std::set<HypothesisId>& s, const PartitionSet& nu) {
    if (nu.p() != d.p()) throw DimensionError("partition covers a different number of variables");
    for (const auto& h : s) nu.check(h);
    DataBundle out = d;
    for (const auto& h : s) {
        for (Eigen::Index i = 0; i < d.n(); ++i)
            if (nu.label(h.j, d.z, i) == h.l) std::swap(out.x(i, h.j), out.xk(i, h.j));
    }
    return out;
}

std::vector<int> subgroup_members(const PartitionSet& nu, int j, int l, const Matrix& z) {
    nu.check({j, l});
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        if (nu.label(j, z, i) == l) rows.push_back(static_cast<int>(i));
    return rows;
}

std::vector<int> binary_columns(const Matrix& z) {
    std::vector<int> out;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        bool ok = true;
        for (Eigen::Index i = 0; i < z.rows() && ok; ++i) ok = z(i, c) == 0.0 || z(i, c) == 1.0;
        if (ok) out.push_back(static_cast<int>(c));
    }
    return out;
}

}  // namespace lokf
