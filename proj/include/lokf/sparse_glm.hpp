#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lokf/core.hpp"

namespace lokf::glm {

/// Column-standardized design. Constant columns keep scale 1 and are zeroed
/// in `values`; they never enter a penalized fit.
struct DesignMatrix {
    Matrix values;
    Vector mean;
    Vector scale;  // population standard deviation
    std::vector<bool> constant;
};

DesignMatrix standardize(const Matrix& raw);

struct SolverOptions {
    double tol = 1e-7;         // max coordinate change per sweep, standardized scale
    int max_sweeps = 100000;
    std::vector<double>* objective_trace = nullptr;  // objective after every sweep, if set
};

struct CvOptions {
    int folds = 5;
    int grid_size = 50;
    double grid_ratio = 1e-3;
    // A path stops once the training fit explains at least `saturation` of the
    // variance, or the explained fraction grows by less than `min_gain` times
    // itself between grid points. The full-data path truncates the grid; a fold
    // that stops early keeps its last solution for the remaining points.
    double saturation = 0.999;
    double min_gain = 1e-5;
    SolverOptions solver{};
};

/// Lasso solution of (1/2n)|y - b0 - X b|^2 + lambda * sum_k factor_k |b_k|
/// with X column-standardized. Zero factors leave a column unpenalized.
struct LassoFit {
    Vector beta;       // standardized scale; zero for constant or aliased columns
    Vector beta_raw;   // raw scale
    double intercept = 0.0;
    double lambda = 0.0;
    Vector factors;
    bool converged = true;
    int iterations = 0;
};

struct CvResult {
    std::vector<double> lambdas;  // strictly decreasing
    std::vector<double> cv_mean;
    std::vector<double> cv_se;
    int selected = 0;
    double lambda_selected = 0.0;
    std::uint64_t fold_seed = 0;
};

/// Fold label per row: a seeded permutation of [0, n) dealt round-robin.
std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed);

LassoFit lasso_fit(const Matrix& x, const Vector& y, double lambda, const Vector& factors,
                   const SolverOptions& opt = {});
LassoFit lasso_fit(const DesignMatrix& x, const Vector& y, double lambda, const Vector& factors,
                   const SolverOptions& opt = {});

/// K-fold cross-validated lasso over a log-spaced grid from lambda_max down to
/// lambda_max * grid_ratio (truncated at saturation); picks the minimum mean
/// validation MSE and returns the full-data fit at that point.
std::pair<CvResult, LassoFit> lasso_cv(const Matrix& x, const Vector& y, const Vector& factors,
                                       const CvOptions& opt, std::uint64_t seed);

/// Raw cross-products of [1 | X - shift | y - yshift] over a set of rows.
class CrossProducts {
  public:
    CrossProducts() = default;
    static CrossProducts accumulate(const Matrix& x, const Vector& y, const std::vector<int>& rows,
                                    const Vector& shift, double yshift);
    CrossProducts operator-(const CrossProducts& o) const;

    int q() const { return static_cast<int>(m_.rows()) - 2; }
    double count() const { return m_(0, 0); }
    const Matrix& matrix() const { return m_; }

  private:
    Matrix m_;
};

namespace detail {
class SupportCholesky;
}

/// Standardized lasso problem over one training set with the unpenalized
/// columns profiled out exactly. Coordinate descent runs on the remaining
/// penalized columns only. solve() keeps a support factorization between
/// calls, so one instance must not be solved from two threads at once.
class ReducedProblem {
  public:
    ReducedProblem(const CrossProducts& cp, const std::vector<char>& unpenalized);
    ~ReducedProblem();
    ReducedProblem(ReducedProblem&&) noexcept;
    ReducedProblem& operator=(ReducedProblem&&) noexcept;

    int q() const { return q_; }
    int n_penalized() const { return static_cast<int>(pen_.size()); }
    const std::vector<int>& penalized() const { return pen_; }
    double lambda_max(const Vector& factors) const;
    /// Fraction of the intercept-only residual variance explained.
    double deviance_ratio(const Vector& beta_p) const;

    /// Runs coordinate descent from the warm start in `beta_p` (length n_penalized()).
    /// Returns {converged, sweeps}.
    std::pair<bool, int> solve(double lambda, const Vector& factors, Vector& beta_p,
                               const SolverOptions& opt) const;

    /// Penalized-only objective 1/2 b'Gb - c'b + sum w|b| (constant dropped).
    double objective(const Vector& beta_p, double lambda, const Vector& factors) const;

    /// Full standardized coefficient vector (length q) including profiled columns.
    Vector full_coefficients(const Vector& beta_p) const;
    /// Raw-scale slopes and intercept in the shifted coordinates of the cross-products.
    std::pair<Vector, double> raw_coefficients(const Vector& full_std) const;

    const Vector& mean() const { return mean_; }
    const Vector& scale() const { return scale_; }
    double y_mean() const { return ymean_; }

  private:
    int q_ = 0;
    Vector mean_, scale_;
    double ymean_ = 0.0;
    double yvar_ = 0.0;
    std::vector<int> pen_;    // penalized column ids (into [0,q))
    std::vector<int> unpen_;  // accepted unpenalized column ids
    Matrix gp_;               // profiled Gram over pen_
    Vector cp_;               // profiled correlations over pen_
    Matrix lu_;               // Cholesky factor of Gram over unpen_
    Matrix bu_;               // lu_^{-1} G[unpen_, pen_]
    Vector lc_;               // lu_^{-1} c[unpen_]
    mutable std::unique_ptr<detail::SupportCholesky> factor_;
};

/// Cross-validation state over a fixed design that can be re-queried with
/// different penalty factors (the unpenalized set must stay the same).
class CvSession {
  public:
    CvSession(const Matrix& x, const Vector& y, const Vector& factors, int folds, std::uint64_t seed,
              bool retain_folds);

    /// Grid search over lambda with the given factors. Solves the full-data
    /// path first, which fixes the (possibly truncated) grid.
    CvResult path(const Vector& factors, const CvOptions& opt);
    /// Mean validation MSE at one (lambda, factors), warm-started from the
    /// fold solutions at the selected lambda of the last path() call.
    double cv_error(double lambda, const Vector& factors, const SolverOptions& opt);
    /// Full-data fit at grid index `index` of the last path.
    LassoFit path_fit(int index) const;
    /// Fit on all rows at a single penalty, warm-started from `warm` if given.
    LassoFit fit_full(double lambda, const Vector& factors, const SolverOptions& opt,
                      const LassoFit* warm = nullptr) const;

  private:
    double validation_mse(int fold, const Vector& full_std, const ReducedProblem& prob) const;
    const ReducedProblem& fold_problem(int f, std::optional<ReducedProblem>& scratch) const;

    const Matrix& x_;
    const Vector& y_;
    int folds_;
    std::uint64_t seed_;
    bool retain_;
    std::vector<char> unpen_;
    Vector shift_;
    double yshift_ = 0.0;
    std::vector<int> fold_of_;
    std::vector<std::vector<int>> fold_rows_;
    CrossProducts total_;
    std::optional<ReducedProblem> full_;
    std::vector<std::optional<ReducedProblem>> fold_probs_;
    std::vector<double> grid_;
    Vector path_factors_;
    std::vector<Vector> full_path_;
    std::vector<std::pair<bool, int>> full_status_;  // converged, cumulative sweeps
    int selected_ = 0;
    std::vector<Vector> fold_warm_;
};

/// Converts a reduced-problem solution back to a LassoFit; shift and yshift
/// are the column offsets the cross-products were accumulated with.
LassoFit make_fit(const ReducedProblem& prob, const Vector& beta_p, double lambda, const Vector& factors,
                  const Vector& shift, double yshift, bool converged, int sweeps);

enum class ColumnKind { Main, Covariate, Interaction };

struct ColumnSource {
    ColumnKind kind = ColumnKind::Main;
    int main = -1;       // index into xc for Main / Interaction
    int covariate = -1;  // index into z for Covariate / Interaction
};

struct InteractionDesign {
    DesignMatrix design;
    std::vector<ColumnSource> columns;
};

/// Columns [xc | z | xc * z] with products ordered covariate-major. z must be binary.
InteractionDesign interaction_design(const Matrix& xc, const Matrix& zbin);

}  // namespace lokf::glm
