#pragma once

#include <cstdint>
#include <vector>

#include "lokf/core.hpp"

namespace lokf {

/// X_j | Z ~ Bernoulli(Z_{c(j)}), independently across j.
struct CondBernoulliModel {
    std::vector<int> prob_column;  // c(j), 0-based into z
};

/// Draws X (or an independent knockoff copy) from the model. Column j uses the
/// stream derive_seed(seed, "bernoulli", {j}).
Matrix gen_bernoulli_knockoffs(const Matrix& z, const CondBernoulliModel& model, std::uint64_t seed);

struct ExchangeabilityReport {
    int column = 0;
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    int bins_used = 0;
    int bins_skipped = 0;  // bins without discordant pairs
    long n_x_greater = 0;
    long n_xk_greater = 0;
};

/// Within each bin of the listed z columns compares #{x > xk} with #{x < xk}
/// (McNemar statistic) and sums over bins; df is the number of bins used.
/// Binary z columns bin on their values, other columns on deciles. An empty
/// list puts every row in one bin.
ExchangeabilityReport exchangeability_diagnostic(const Matrix& x, const Matrix& xk, const Matrix& z, int j,
                                                 const std::vector<int>& bin_columns);

}  // namespace lokf
