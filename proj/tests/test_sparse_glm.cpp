#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "lokf/sparse_glm.hpp"

using namespace lokf;
using namespace lokf::glm;
using lokf::testing::bernoulli;
using lokf::testing::gaussian;

namespace {

// (1/n) <col_k, residual> on the standardized design.
Vector gradient(const Matrix& xs, const Vector& y, const Vector& beta) {
    const Vector r = (y.array() - y.mean()).matrix() - xs * beta;
    return xs.transpose() * r / static_cast<double>(xs.rows());
}

double max_kkt_violation(const Matrix& xs, const Vector& y, const LassoFit& fit, const std::vector<bool>& constant) {
    const Vector g = gradient(xs, y, fit.beta);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < xs.cols(); ++k) {
        if (constant[k]) continue;
        const double w = fit.lambda * fit.factors[k];
        if (fit.beta[k] != 0.0)
            worst = std::max(worst, std::abs(g[k] - w * (fit.beta[k] > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::abs(g[k]) - w);
    }
    return worst;
}

double null_lambda_max(const Matrix& xs, const Vector& y) {
    return ((xs.transpose() * (y.array() - y.mean()).matrix()).cwiseAbs() / static_cast<double>(xs.rows())).maxCoeff();
}

}  // namespace

TEST_CASE("standardize a two-point column") {
    Matrix raw(4, 2);
    raw << 0, 3, 1, 3, 0, 3, 1, 3;
    const DesignMatrix d = standardize(raw);
    CHECK(d.mean[0] == 0.5);
    CHECK(d.scale[0] == 0.5);
    CHECK(d.values.col(0) == (Vector(4) << -1, 1, -1, 1).finished());
    CHECK_FALSE(d.constant[0]);
    CHECK(d.constant[1]);
    CHECK(d.values.col(1).isZero());
}

TEST_CASE("standardize is idempotent on retained columns") {
    Rng rng(1);
    const Matrix raw = gaussian(30, 4, rng) * 3.0 + Matrix::Constant(30, 4, 2.0);
    const DesignMatrix once = standardize(raw);
    const DesignMatrix twice = standardize(once.values);
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((twice.scale.array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(twice.mean.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize errors") {
    CHECK_THROWS(standardize(Matrix::Constant(5, 3, 1.0)));
    CHECK_THROWS(standardize(Matrix::Zero(1, 2)));
    Matrix bad = Matrix::Zero(3, 1);
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(standardize(bad));
}

TEST_CASE("null model at lambda max") {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = gaussian(40, 6, rng);
        const Vector y = gaussian(40, 1, rng).col(0);
        const DesignMatrix d = standardize(x);
        const double lmax = null_lambda_max(d.values, y);
        const LassoFit fit = lasso_fit(d, y, lmax, Vector::Ones(6));
        CHECK(fit.beta.isZero());
        CHECK(fit.intercept == doctest::Approx(y.mean()).epsilon(1e-12));
        CHECK_FALSE(lasso_fit(d, y, 0.9 * lmax, Vector::Ones(6)).beta.isZero());
    }
}

TEST_CASE("single feature matches the soft-threshold closed form") {
    Rng rng(3);
    std::uniform_real_distribution<double> frac(0.0, 1.2);
    for (int rep = 0; rep < 100; ++rep) {
        const Matrix x = gaussian(25, 1, rng);
        const Vector y = 0.7 * x.col(0) + gaussian(25, 1, rng).col(0);
        const DesignMatrix d = standardize(x);
        const double rho = d.values.col(0).dot((y.array() - y.mean()).matrix()) / 25.0;
        const double lam = frac(rng) * std::abs(rho) + 1e-6;
        const double expected = (rho > 0 ? 1.0 : -1.0) * std::max(std::abs(rho) - lam, 0.0);
        const LassoFit fit = lasso_fit(d, y, lam, Vector::Ones(1));
        CHECK(std::abs(fit.beta[0] - expected) < 1e-8);
    }
}

TEST_CASE("all-zero factors reproduce least squares") {
    Rng rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 60, q = 8;
        const Matrix x = gaussian(n, q, rng);
        const Vector y = x * Vector::LinSpaced(q, -1.0, 1.0) + gaussian(n, 1, rng).col(0);
        const LassoFit fit = lasso_fit(x, y, 0.0, Vector::Zero(q));
        const Matrix xc = x.rowwise() - x.colwise().mean();
        const Vector yc = (y.array() - y.mean()).matrix();
        const Vector ols = (xc.transpose() * xc).ldlt().solve(xc.transpose() * yc);
        CHECK((fit.beta_raw - ols).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(std::abs(fit.intercept - (y.mean() - x.colwise().mean().dot(ols))) < 1e-6);
    }
}

TEST_CASE("KKT conditions hold on random problems") {
    Rng rng(5);
    std::uniform_int_distribution<int> nd(20, 120), qd(2, 40), fpick(0, 5);
    std::uniform_real_distribution<double> frac(0.005, 0.9);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = nd(rng), q = qd(rng);
        Matrix x = rep % 2 ? gaussian(n, q, rng) : bernoulli(n, q, 0.3, rng);
        if (q > 3) x.col(q - 1) = x.col(0) + 0.01 * gaussian(n, 1, rng).col(0);
        Vector y = x.leftCols(2) * Vector::Constant(2, 1.5) + gaussian(n, 1, rng).col(0);
        Vector factors(q);
        int zeros = 0;
        for (int k = 0; k < q; ++k) {
            const int f = fpick(rng);
            if (f == 0 && zeros < 2) {
                factors[k] = 0.0;
                ++zeros;
            } else {
                factors[k] = 0.5 * (1 + f % 4);
            }
        }
        const DesignMatrix d = standardize(x);
        const double lam = frac(rng) * null_lambda_max(d.values, y);
        const LassoFit fit = lasso_fit(d, y, lam, factors);
        CHECK(fit.converged);
        worst = std::max(worst, max_kkt_violation(d.values, y, fit, d.constant));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("permuting columns permutes the solution") {
    Rng rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 80, q = 15;
        const Matrix x = bernoulli(n, q, 0.5, rng);
        const Vector y = x.leftCols(3).rowwise().sum() + gaussian(n, 1, rng).col(0);
        Vector factors = Vector::Ones(q);
        factors[q - 1] = 0.0;
        factors[3] = 2.0;
        std::vector<int> perm(q);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix xp(n, q);
        Vector fp(q);
        for (int k = 0; k < q; ++k) {
            xp.col(k) = x.col(perm[k]);
            fp[k] = factors[perm[k]];
        }
        const double lam = 0.05 * null_lambda_max(standardize(x).values, y);
        const LassoFit a = lasso_fit(x, y, lam, factors), b = lasso_fit(xp, y, lam, fp);
        for (int k = 0; k < q; ++k) CHECK(std::abs(b.beta[k] - a.beta[perm[k]]) < 1e-10);
    }
}

TEST_CASE("swapping identical columns swaps their coefficients") {
    Rng rng(7);
    const Matrix x = bernoulli(100, 6, 0.5, rng);
    const Vector y = x.col(0) - x.col(2) + gaussian(100, 1, rng).col(0);
    Matrix xs = x;
    xs.col(0).swap(xs.col(3));
    const LassoFit a = lasso_fit(x, y, 0.02, Vector::Ones(6)), b = lasso_fit(xs, y, 0.02, Vector::Ones(6));
    CHECK(std::abs(a.beta[0] - b.beta[3]) < 1e-8);
    CHECK(std::abs(a.beta[3] - b.beta[0]) < 1e-8);
}

TEST_CASE("warm and cold starts agree") {
    Rng rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 70, q = 30;
        const Matrix x = gaussian(n, q, rng);
        const Vector y = x.leftCols(4) * Vector::Constant(4, 0.8) + gaussian(n, 1, rng).col(0);
        const Vector shift = x.colwise().mean().transpose();
        std::vector<int> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        const auto cp = CrossProducts::accumulate(x, y, rows, shift, y.mean());
        ReducedProblem prob(cp, std::vector<char>(q, 0));
        const Vector f = Vector::Ones(q);
        const double lmax = prob.lambda_max(f);
        Vector warm;
        SolverOptions opt;
        for (int i = 0; i < 10; ++i) {
            const double lam = lmax * std::pow(0.01, i / 9.0);
            prob.solve(lam, f, warm, opt);
            Vector cold;
            ReducedProblem fresh(cp, std::vector<char>(q, 0));
            fresh.solve(lam, f, cold, opt);
            CHECK((warm - cold).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("objective never increases across sweeps") {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = gaussian(50, 40, rng);
        const Vector y = x.col(0) + gaussian(50, 1, rng).col(0);
        std::vector<double> trace;
        SolverOptions opt;
        opt.objective_trace = &trace;
        lasso_fit(x, y, 0.01, Vector::Ones(40), opt);
        REQUIRE(trace.size() >= 1);
        for (std::size_t t = 1; t < trace.size(); ++t) CHECK(trace[t] <= trace[t - 1] + 1e-12 * std::abs(trace[t - 1]));
    }
}

TEST_CASE("non-finite input and bad factors are rejected") {
    Matrix x = Matrix::Identity(4, 2);
    Vector y = Vector::Ones(4);
    y[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS(lasso_fit(x, y, 0.1, Vector::Ones(2)));
    y[1] = 0.0;
    CHECK_THROWS(lasso_fit(x, y, 0.1, Vector::Constant(2, -1.0)));
    CHECK_THROWS_AS(lasso_fit(x, y, 0.1, Vector::Ones(3)), DimensionError);
    CHECK_THROWS(lasso_fit(x, y, 0.0, Vector::Ones(2)));
}

TEST_CASE("fold assignment is a balanced seeded permutation") {
    const auto a = fold_assignment(23, 5, 11), b = fold_assignment(23, 5, 11);
    CHECK(a == b);
    std::vector<int> counts(5, 0);
    for (int f : a) ++counts[f];
    CHECK(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()) <= 1);
    CHECK(fold_assignment(23, 5, 12) != a);
    CHECK_THROWS(fold_assignment(9, 5, 1));
}

TEST_CASE("cross-validation is deterministic and the grid is well formed") {
    Rng rng(10);
    const Matrix x = gaussian(100, 10, rng);
    const Vector y = x.col(1) + gaussian(100, 1, rng).col(0);
    CvOptions opt;
    const auto [cv1, fit1] = lasso_cv(x, y, Vector::Ones(10), opt, 77);
    const auto [cv2, fit2] = lasso_cv(x, y, Vector::Ones(10), opt, 77);
    CHECK(cv1.lambdas == cv2.lambdas);
    CHECK(cv1.cv_mean == cv2.cv_mean);
    CHECK(cv1.cv_se == cv2.cv_se);
    CHECK(cv1.selected == cv2.selected);
    CHECK(fit1.beta == fit2.beta);
    CHECK(cv1.lambdas.size() <= 50);
    CHECK(cv1.lambdas.size() == cv1.cv_mean.size());
    for (std::size_t i = 1; i < cv1.lambdas.size(); ++i) CHECK(cv1.lambdas[i] < cv1.lambdas[i - 1]);
    CHECK(cv1.lambda_selected == cv1.lambdas[cv1.selected]);
    CHECK(fit1.lambda == cv1.lambda_selected);
    CHECK(*std::min_element(cv1.cv_mean.begin(), cv1.cv_mean.end()) == cv1.cv_mean[cv1.selected]);
}

TEST_CASE("pure noise selects a large lambda") {
    int top_quartile = 0;
    for (int rep = 0; rep < 100; ++rep) {
        Rng rng(1000 + rep);
        const Matrix x = gaussian(100, 20, rng);
        const Vector y = gaussian(100, 1, rng).col(0);
        CvOptions opt;
        const auto [cv, fit] = lasso_cv(x, y, Vector::Ones(20), opt, 500 + rep);
        top_quartile += cv.selected < opt.grid_size / 4;
    }
    CHECK(top_quartile >= 80);
}

TEST_CASE("a planted strong feature is active") {
    Rng rng(11);
    const Matrix x = gaussian(300, 10, rng);
    const Vector y = 3.0 * x.col(4);
    const auto [cv, fit] = lasso_cv(x, y, Vector::Ones(10), CvOptions{}, 3);
    CHECK(fit.beta[4] > 0.0);
    for (int k = 0; k < 10; ++k)
        if (k != 4) CHECK(std::abs(fit.beta[k]) < std::abs(fit.beta[4]));
}

TEST_CASE("interaction design layout") {
    Rng rng(12);
    {
        const Matrix xc = bernoulli(20, 2, 0.5, rng), z = bernoulli(20, 1, 0.5, rng);
        const InteractionDesign d = interaction_design(xc, z);
        REQUIRE(d.design.values.cols() == 5);
        CHECK(d.columns[2].kind == ColumnKind::Covariate);
        CHECK(d.columns[3].kind == ColumnKind::Interaction);
        CHECK(d.columns[3].main == 0);
        CHECK(d.columns[4].main == 1);
        CHECK(d.columns[4].covariate == 0);
    }
    {
        const Matrix xc = bernoulli(20, 4, 0.5, rng), z = bernoulli(20, 2, 0.5, rng);
        const InteractionDesign d = interaction_design(xc, z);
        CHECK(d.design.values.cols() == 14);
        CHECK(d.columns.size() == 14);
        CHECK(d.columns[6 + 4].covariate == 1);
        CHECK(d.columns[6 + 4].main == 0);
    }
    {
        const Matrix xc = bernoulli(20, 2, 0.5, rng), z = Matrix::Zero(20, 1);
        const InteractionDesign d = interaction_design(xc, z);
        CHECK(d.design.constant[2]);
        CHECK(d.design.constant[3]);
        CHECK(d.design.constant[4]);
        CHECK(d.design.values.rightCols(2).isZero());
    }
    {
        Matrix z = Matrix::Zero(4, 1);
        z(0, 0) = 2.0;
        CHECK_THROWS(interaction_design(Matrix::Identity(4, 2), z));
    }
}
