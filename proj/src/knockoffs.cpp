#include "lokf/knockoffs.hpp"

#include <algorithm>
#include <map>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>

#include "lokf/rng.hpp"

namespace lokf {

Matrix gen_bernoulli_knockoffs(const Matrix& z, const CondBernoulliModel& model, std::uint64_t seed) {
    const Eigen::Index n = z.rows();
    const Eigen::Index p = static_cast<Eigen::Index>(model.prob_column.size());
    Matrix out(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const int c = model.prob_column[j];
        if (c < 0 || c >= z.cols()) throw IndexError("probability column out of range");
        Rng rng(derive_seed(seed, "bernoulli", {static_cast<std::uint64_t>(j)}));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double pr = z(i, c);
            if (!(pr >= 0.0 && pr <= 1.0)) throw std::invalid_argument("Bernoulli probability outside [0,1]");
            out(i, j) = u(rng) < pr ? 1.0 : 0.0;
        }
    }
    return out;
}

namespace {

// Bin code per row for one z column.
std::vector<int> column_bins(const Vector& col) {
    const Eigen::Index n = col.size();
    std::vector<int> code(static_cast<std::size_t>(n));
    const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
    if (binary) {
        for (Eigen::Index i = 0; i < n; ++i) code[i] = static_cast<int>(col[i]);
        return code;
    }
    std::vector<double> sorted(col.data(), col.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (int d = 1; d < 10; ++d) cuts.push_back(sorted[static_cast<std::size_t>(d * (n - 1) / 10)]);
    for (Eigen::Index i = 0; i < n; ++i)
        code[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), col[i]) - cuts.begin());
    return code;
}

}  // namespace

ExchangeabilityReport exchangeability_diagnostic(const Matrix& x, const Matrix& xk, const Matrix& z, int j,
                                                 const std::vector<int>& bin_columns) {
    if (x.rows() != xk.rows() || x.cols() != xk.cols()) throw DimensionError("x and xk must have identical shape");
    if (j < 0 || j >= x.cols()) throw IndexError("column index out of range: " + std::to_string(j + 1));
    const Eigen::Index n = x.rows();
    std::vector<std::vector<int>> codes;
    for (int c : bin_columns) {
        if (c < 0 || c >= z.cols()) throw IndexError("bin column out of range");
        if (z.rows() != n) throw DimensionError("z must have one row per row of x");
        codes.push_back(column_bins(z.col(c)));
    }
    std::map<std::vector<int>, std::pair<long, long>> cells;
    std::vector<int> key(codes.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < codes.size(); ++t) key[t] = codes[t][i];
        auto& cell = cells[key];
        if (x(i, j) > xk(i, j)) ++cell.first;
        if (x(i, j) < xk(i, j)) ++cell.second;
    }
    ExchangeabilityReport r;
    r.column = j;
    for (const auto& [_, c] : cells) {
        r.n_x_greater += c.first;
        r.n_xk_greater += c.second;
        const long tot = c.first + c.second;
        if (tot == 0) {
            ++r.bins_skipped;
            continue;
        }
        const double d = static_cast<double>(c.first - c.second);
        r.statistic += d * d / static_cast<double>(tot);
        ++r.bins_used;
    }
    r.df = r.bins_used;
    if (r.df > 0) {
        boost::math::chi_squared dist(r.df);
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

}  // namespace lokf
