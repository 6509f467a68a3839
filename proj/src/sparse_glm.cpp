#include "lokf/sparse_glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lokf/rng.hpp"

namespace lokf::glm {

namespace {

constexpr double kConstantRelVar = 1e-10;
constexpr double kAliasTol = 1e-9;

bool is_constant(double var, double second_moment) {
    return !(var > 0.0) || var <= kConstantRelVar * second_moment;
}

double soft(double z, double w) {
    if (z > w) return z - w;
    if (z < -w) return z + w;
    return 0.0;
}

void check_finite(const Matrix& x, const Vector& y) {
    if (!x.allFinite()) throw std::invalid_argument("design contains non-finite values");
    if (!y.allFinite()) throw std::invalid_argument("response contains non-finite values");
    if (y.size() != x.rows()) throw DimensionError("response length does not match design rows");
}

void check_factors(const Vector& factors, Eigen::Index q) {
    if (factors.size() != q) throw DimensionError("penalty factor vector has wrong length");
    for (Eigen::Index k = 0; k < q; ++k)
        if (!std::isfinite(factors[k]) || factors[k] < 0.0)
            throw std::invalid_argument("penalty factors must be finite and nonnegative");
}

std::vector<char> zero_factor_mask(const Vector& factors) {
    std::vector<char> u(static_cast<std::size_t>(factors.size()));
    for (Eigen::Index k = 0; k < factors.size(); ++k) u[k] = factors[k] == 0.0;
    return u;
}

std::vector<int> all_rows(Eigen::Index n) {
    std::vector<int> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    return r;
}

}  // namespace

namespace detail {

// Lower Cholesky factor of a principal submatrix that supports appending and
// deleting one index at a time in O(a^2).
class SupportCholesky {
  public:
    std::vector<int> idx;  // factor order

    int size() const { return a_; }

    void clear() {
        idx.clear();
        a_ = 0;
    }

    bool reset(const Matrix& g, std::vector<int> columns) {
        idx = std::move(columns);
        a_ = static_cast<int>(idx.size());
        l_.resize(std::max(a_, 16), std::max(a_, 16));
        Eigen::LLT<Matrix> llt(g(idx, idx));
        if (llt.info() != Eigen::Success) return false;
        l_.topLeftCorner(a_, a_) = llt.matrixL();
        for (int t = 0; t < a_; ++t)
            if (!(l_(t, t) * l_(t, t) > kPivotRel * g(idx[t], idx[t]))) return false;
        return true;
    }

    bool append(const Matrix& g, int k) {
        const double diag = g(k, k);
        Vector v = g(idx, k);
        if (a_ > 0) l_.topLeftCorner(a_, a_).triangularView<Eigen::Lower>().solveInPlace(v);
        const double d = diag - v.squaredNorm();
        if (!(d > kPivotRel * diag)) return false;
        if (a_ == l_.rows()) l_.conservativeResize(2 * a_, 2 * a_);
        l_.row(a_).head(a_) = v.transpose();
        l_(a_, a_) = std::sqrt(d);
        ++a_;
        idx.push_back(k);
        return true;
    }

    void remove(int t) {
        idx.erase(idx.begin() + t);
        const int m = a_ - 1 - t;
        Vector x = l_.col(t).segment(t + 1, m);
        for (int i = t + 1; i < a_; ++i) {
            l_.row(i - 1).head(t) = l_.row(i).head(t);
            for (int j = t + 1; j <= i; ++j) l_(i - 1, j - 1) = l_(i, j);
        }
        --a_;
        for (int k = 0; k < m; ++k) {
            const int kk = t + k;
            const double lkk = l_(kk, kk);
            const double r = std::hypot(lkk, x[k]);
            const double c = r / lkk, s = x[k] / lkk;
            l_(kk, kk) = r;
            const int rest = m - k - 1;
            if (rest > 0) {
                auto col = l_.col(kk).segment(kk + 1, rest);
                auto xs = x.segment(k + 1, rest);
                col = (col + s * xs) / c;
                xs = c * xs - s * col;
            }
        }
    }

    Vector solve(const Vector& rhs) const {
        Vector v = rhs;
        const auto l = l_.topLeftCorner(a_, a_);
        l.triangularView<Eigen::Lower>().solveInPlace(v);
        l.triangularView<Eigen::Lower>().transpose().solveInPlace(v);
        return v;
    }

  private:
    static constexpr double kPivotRel = 1e-13;
    Matrix l_;
    int a_ = 0;
};

}  // namespace detail

DesignMatrix standardize(const Matrix& raw) {
    const Eigen::Index n = raw.rows(), q = raw.cols();
    if (n < 2) throw DimensionError("standardize needs at least two rows");
    if (!raw.allFinite()) throw std::invalid_argument("design contains non-finite values");
    DesignMatrix d;
    d.values.resize(n, q);
    d.mean.resize(q);
    d.scale.resize(q);
    d.constant.assign(static_cast<std::size_t>(q), false);
    bool any = false;
    for (Eigen::Index k = 0; k < q; ++k) {
        const double mu = raw.col(k).mean();
        const Vector c = raw.col(k).array() - mu;
        const double var = c.squaredNorm() / static_cast<double>(n);
        const double m2 = raw.col(k).squaredNorm() / static_cast<double>(n);
        d.mean[k] = mu;
        if (is_constant(var, m2)) {
            d.constant[k] = true;
            d.scale[k] = 1.0;
            d.values.col(k).setZero();
        } else {
            any = true;
            d.scale[k] = std::sqrt(var);
            d.values.col(k) = c / d.scale[k];
        }
    }
    if (!any) throw std::invalid_argument("every design column is constant");
    return d;
}

std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("need at least two folds");
    if (n < 2 * folds) throw std::invalid_argument("need at least two rows per fold");
    std::vector<int> perm = all_rows(n);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) fold[perm[i]] = i % folds;
    return fold;
}

CrossProducts CrossProducts::accumulate(const Matrix& x, const Vector& y, const std::vector<int>& rows,
                                        const Vector& shift, double yshift) {
    const Eigen::Index q = x.cols();
    Matrix a(static_cast<Eigen::Index>(rows.size()), q + 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::Index i = rows[r];
        a(r, 0) = 1.0;
        a.row(r).segment(1, q) = x.row(i) - shift.transpose();
        a(r, q + 1) = y[i] - yshift;
    }
    CrossProducts cp;
    cp.m_ = Matrix::Zero(q + 2, q + 2);
    cp.m_.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    cp.m_.triangularView<Eigen::StrictlyUpper>() = cp.m_.transpose();
    return cp;
}

CrossProducts CrossProducts::operator-(const CrossProducts& o) const {
    CrossProducts cp;
    cp.m_ = m_ - o.m_;
    return cp;
}

ReducedProblem::ReducedProblem(const CrossProducts& cp, const std::vector<char>& unpenalized) {
    const Matrix& m = cp.matrix();
    q_ = cp.q();
    if (static_cast<int>(unpenalized.size()) != q_) throw DimensionError("unpenalized mask has wrong length");
    const double n = cp.count();
    if (!(n >= 2.0)) throw DimensionError("training set needs at least two rows");
    const int yc = q_ + 1;
    mean_.resize(q_);
    scale_.resize(q_);
    ymean_ = m(0, yc) / n;
    yvar_ = m(yc, yc) / n - ymean_ * ymean_;

    std::vector<int> ucand, pcand;
    for (int k = 0; k < q_; ++k) {
        const double mu = m(0, k + 1) / n;
        const double m2 = m(k + 1, k + 1) / n;
        const double var = m2 - mu * mu;
        mean_[k] = mu;
        if (is_constant(var, m2)) {
            scale_[k] = 1.0;
            continue;
        }
        scale_[k] = std::sqrt(var);
        (unpenalized[k] ? ucand : pcand).push_back(k);
    }

    auto gram = [&](int a, int b) {
        return (m(a + 1, b + 1) / n - mean_[a] * mean_[b]) / (scale_[a] * scale_[b]);
    };
    auto corr = [&](int a) { return (m(a + 1, yc) / n - mean_[a] * ymean_) / scale_[a]; };

    // Incremental Cholesky over unpenalized columns, skipping aliased ones.
    Matrix l(0, 0);
    for (int k : ucand) {
        const int s = static_cast<int>(unpen_.size());
        Vector g(s);
        for (int t = 0; t < s; ++t) g[t] = gram(unpen_[t], k);
        Vector v = s ? Vector(l.triangularView<Eigen::Lower>().solve(g)) : Vector(0);
        const double d = gram(k, k) - v.squaredNorm();
        if (d <= kAliasTol) continue;
        Matrix nl = Matrix::Zero(s + 1, s + 1);
        nl.topLeftCorner(s, s) = l;
        nl.row(s).head(s) = v.transpose();
        nl(s, s) = std::sqrt(d);
        l.swap(nl);
        unpen_.push_back(k);
    }
    lu_ = l;
    const int nu = static_cast<int>(unpen_.size());
    const int np0 = static_cast<int>(pcand.size());

    Matrix gpp(np0, np0);
    Vector cpp(np0);
    for (int b = 0; b < np0; ++b) {
        cpp[b] = corr(pcand[b]);
        for (int a = b; a < np0; ++a) gpp(a, b) = gram(pcand[a], pcand[b]);
    }
    Matrix bu(nu, np0);
    if (nu > 0) {
        Matrix gup(nu, np0);
        Vector cu(nu);
        for (int t = 0; t < nu; ++t) {
            cu[t] = corr(unpen_[t]);
            for (int b = 0; b < np0; ++b) gup(t, b) = gram(unpen_[t], pcand[b]);
        }
        lc_ = lu_.triangularView<Eigen::Lower>().solve(cu);
        bu = lu_.triangularView<Eigen::Lower>().solve(gup);
        if (np0 > 0) {
            gpp.selfadjointView<Eigen::Lower>().rankUpdate(bu.transpose(), -1.0);
            cpp.noalias() -= bu.transpose() * lc_;
        }
    } else {
        lc_ = Vector(0);
    }
    gpp.triangularView<Eigen::StrictlyUpper>() = gpp.transpose();

    std::vector<int> keep;
    for (int b = 0; b < np0; ++b)
        if (gpp(b, b) > kAliasTol) keep.push_back(b);
    const int np = static_cast<int>(keep.size());
    if (np == np0) {
        gp_ = std::move(gpp);
        cp_ = std::move(cpp);
        bu_ = std::move(bu);
        pen_ = std::move(pcand);
    } else {
        gp_ = gpp(keep, keep);
        cp_ = cpp(keep);
        bu_ = bu(Eigen::all, keep);
        for (int b : keep) pen_.push_back(pcand[b]);
    }
}

ReducedProblem::~ReducedProblem() = default;
ReducedProblem::ReducedProblem(ReducedProblem&&) noexcept = default;
ReducedProblem& ReducedProblem::operator=(ReducedProblem&&) noexcept = default;

double ReducedProblem::lambda_max(const Vector& factors) const {
    double lm = 0.0;
    for (int k = 0; k < n_penalized(); ++k) {
        const double f = factors[pen_[k]];
        if (f > 0.0) lm = std::max(lm, std::abs(cp_[k]) / f);
    }
    return lm;
}

double ReducedProblem::deviance_ratio(const Vector& beta_p) const {
    if (!(yvar_ > 0.0)) return 1.0;
    const double rss = yvar_ - lc_.squaredNorm() + beta_p.dot(gp_ * beta_p) - 2.0 * cp_.dot(beta_p);
    return 1.0 - rss / yvar_;
}

double ReducedProblem::objective(const Vector& beta_p, double lambda, const Vector& factors) const {
    double pen = 0.0;
    for (int k = 0; k < n_penalized(); ++k) pen += lambda * factors[pen_[k]] * std::abs(beta_p[k]);
    return 0.5 * beta_p.dot(gp_ * beta_p) - cp_.dot(beta_p) + pen;
}

std::pair<bool, int> ReducedProblem::solve(double lambda, const Vector& factors, Vector& beta_p,
                                           const SolverOptions& opt) const {
    const int np = n_penalized();
    if (beta_p.size() != np) beta_p = Vector::Zero(np);
    if (np == 0) return {true, 0};
    Vector w(np);
    for (int k = 0; k < np; ++k) {
        w[k] = lambda * factors[pen_[k]];
        if (factors[pen_[k]] == 0.0)
            throw std::invalid_argument("unpenalized set changed after the problem was built");
    }
    Vector g = cp_;
    for (int k = 0; k < np; ++k)
        if (beta_p[k] != 0.0) g.noalias() -= beta_p[k] * gp_.col(k);

    auto update = [&](int k) {
        const double d = gp_(k, k);
        const double old = beta_p[k];
        const double nb = soft(g[k] + d * old, w[k]) / d;
        const double delta = nb - old;
        if (delta != 0.0) {
            g.noalias() -= delta * gp_.col(k);
            beta_p[k] = nb;
        }
        return std::abs(delta);
    };
    auto record = [&]() {
        if (!opt.objective_trace) return;
        double pen = 0.0;
        for (int k = 0; k < np; ++k) pen += w[k] * std::abs(beta_p[k]);
        opt.objective_trace->push_back(-0.5 * beta_p.dot(cp_ + g) + pen);
    };

    // Active-set refinement from the current point: solve the stationarity
    // equations on the signed support, step back to the first sign change if
    // one occurs, otherwise add the KKT violators. Each step keeps the signs
    // valid along the move, so the objective never increases.
    auto refine = [&](int max_steps) {
        std::vector<char> want(np, 0), have(np, 0);
        int nwant = 0;
        for (int k = 0; k < np; ++k)
            if (beta_p[k] != 0.0) {
                want[k] = 1;
                ++nwant;
            }
        if (nwant == 0) return false;
        if (!factor_) factor_ = std::make_unique<detail::SupportCholesky>();
        detail::SupportCholesky& chol = *factor_;
        // Update the factor left by the previous call when the supports mostly
        // overlap; otherwise factor from scratch.
        int changes = 0;
        for (int k : chol.idx) {
            have[k] = 1;
            changes += !want[k];
        }
        for (int k = 0; k < np; ++k) changes += want[k] && !have[k];
        bool reuse = chol.size() > 0 && 4 * changes < nwant;
        if (reuse) {
            for (int t = chol.size() - 1; t >= 0; --t)
                if (!want[chol.idx[t]]) chol.remove(t);
            for (int k = 0; k < np && reuse; ++k)
                if (want[k] && !have[k]) reuse = chol.append(gp_, k);
        }
        if (!reuse) {
            std::vector<int> cols;
            for (int k = 0; k < np; ++k)
                if (want[k]) cols.push_back(k);
            if (!chol.reset(gp_, std::move(cols))) {
                chol.clear();
                return false;
            }
        }
        std::vector<int>& sup = chol.idx;
        std::vector<double> sgn;
        for (int k : sup) sgn.push_back(beta_p[k] > 0.0 ? 1.0 : -1.0);
        for (int step = 0; step < max_steps; ++step) {
            const int a = static_cast<int>(sup.size());
            if (a == 0) return false;
            Vector rhs(a), cur(a);
            for (int t = 0; t < a; ++t) {
                rhs[t] = cp_[sup[t]] - w[sup[t]] * sgn[t];
                cur[t] = beta_p[sup[t]];
            }
            const Vector b = chol.solve(rhs);
            if (!b.allFinite()) return false;
            double frac = 1.0;
            int drop = -1;
            for (int t = 0; t < a; ++t) {
                if (b[t] * sgn[t] > 0.0) continue;
                const double ft = cur[t] == 0.0 ? 0.0 : cur[t] / (cur[t] - b[t]);
                if (ft < frac) {
                    frac = ft;
                    drop = t;
                }
            }
            beta_p(sup) = cur + frac * (b - cur);
            if (drop >= 0) {
                beta_p[sup[drop]] = 0.0;
                sgn.erase(sgn.begin() + drop);
                chol.remove(drop);
                continue;
            }
            g = cp_;
            for (int k : sup) g.noalias() -= beta_p[k] * gp_.col(k);
            std::vector<char> in(np, 0);
            for (int k : sup) in[k] = 1;
            bool added = false;
            for (int k = 0; k < np; ++k) {
                if (in[k] || std::abs(g[k]) <= w[k] * (1.0 + 1e-9) + 1e-12) continue;
                if (!chol.append(gp_, k)) return false;
                sgn.push_back(g[k] > 0.0 ? 1.0 : -1.0);
                added = true;
            }
            if (!added) return true;
        }
        return false;
    };

    int sweeps = 0;
    std::vector<int> active;
    while (sweeps < opt.max_sweeps) {
        double dmax = 0.0;
        for (int k = 0; k < np; ++k) dmax = std::max(dmax, update(k));
        ++sweeps;
        record();
        if (dmax < opt.tol) {
            // Polish on the converged support; keep the descent point if that fails.
            const Vector keep_b = beta_p, keep_g = g;
            if (!refine(64)) {
                beta_p = keep_b;
                g = keep_g;
            }
            record();
            return {true, sweeps};
        }
        active.clear();
        for (int k = 0; k < np; ++k)
            if (beta_p[k] != 0.0) active.push_back(k);
        int inner = 0, next_exact = 8;
        while (sweeps < opt.max_sweeps) {
            double amax = 0.0;
            for (int k : active) amax = std::max(amax, update(k));
            ++sweeps;
            ++inner;
            record();
            if (amax < opt.tol) break;
            if (inner == next_exact) {
                next_exact *= 2;
                const bool done = refine(64);
                if (!done) {
                    g = cp_;
                    for (int k = 0; k < np; ++k)
                        if (beta_p[k] != 0.0) g.noalias() -= beta_p[k] * gp_.col(k);
                }
                record();
                if (done) return {true, sweeps};
                break;
            }
        }
    }
    return {false, sweeps};
}

Vector ReducedProblem::full_coefficients(const Vector& beta_p) const {
    Vector full = Vector::Zero(q_);
    for (int k = 0; k < n_penalized(); ++k) full[pen_[k]] = beta_p[k];
    if (!unpen_.empty()) {
        Vector rhs = lc_;
        if (n_penalized() > 0) rhs.noalias() -= bu_ * beta_p;
        const Vector gu = lu_.transpose().triangularView<Eigen::Upper>().solve(rhs);
        for (std::size_t t = 0; t < unpen_.size(); ++t) full[unpen_[t]] = gu[t];
    }
    return full;
}

std::pair<Vector, double> ReducedProblem::raw_coefficients(const Vector& full_std) const {
    Vector slope = full_std.cwiseQuotient(scale_);
    return {slope, ymean_ - slope.dot(mean_)};
}

LassoFit make_fit(const ReducedProblem& prob, const Vector& beta_p, double lambda, const Vector& factors,
                  const Vector& shift, double yshift, bool converged, int sweeps) {
    LassoFit fit;
    fit.beta = prob.full_coefficients(beta_p);
    auto [slope, b0] = prob.raw_coefficients(fit.beta);
    fit.beta_raw = slope;
    fit.intercept = b0 + yshift - slope.dot(shift);
    fit.lambda = lambda;
    fit.factors = factors;
    fit.converged = converged;
    fit.iterations = sweeps;
    return fit;
}

LassoFit lasso_fit(const Matrix& x, const Vector& y, double lambda, const Vector& factors,
                   const SolverOptions& opt) {
    check_finite(x, y);
    check_factors(factors, x.cols());
    if (x.rows() < 2) throw DimensionError("lasso needs at least two rows");
    if (!(lambda > 0.0) && (factors.array() > 0.0).any())
        throw std::invalid_argument("lambda must be positive when any column is penalized");
    const Vector shift = x.colwise().mean().transpose();
    const double yshift = y.mean();
    const auto cp = CrossProducts::accumulate(x, y, all_rows(x.rows()), shift, yshift);
    ReducedProblem prob(cp, zero_factor_mask(factors));
    Vector beta;
    auto [ok, sweeps] = prob.solve(lambda, factors, beta, opt);
    return make_fit(prob, beta, lambda, factors, shift, yshift, ok, sweeps);
}

LassoFit lasso_fit(const DesignMatrix& x, const Vector& y, double lambda, const Vector& factors,
                   const SolverOptions& opt) {
    return lasso_fit(x.values, y, lambda, factors, opt);
}

CvSession::CvSession(const Matrix& x, const Vector& y, const Vector& factors, int folds, std::uint64_t seed,
                     bool retain_folds)
    : x_(x), y_(y), folds_(folds), seed_(seed), retain_(retain_folds) {
    check_finite(x, y);
    check_factors(factors, x.cols());
    const int n = static_cast<int>(x.rows());
    fold_of_ = fold_assignment(n, folds, seed);
    fold_rows_.assign(static_cast<std::size_t>(folds), {});
    for (int i = 0; i < n; ++i) fold_rows_[fold_of_[i]].push_back(i);
    unpen_ = zero_factor_mask(factors);
    shift_ = x.colwise().mean().transpose();
    yshift_ = y.mean();
    total_ = CrossProducts::accumulate(x, y, all_rows(n), shift_, yshift_);
    full_.emplace(total_, unpen_);
    fold_probs_.resize(static_cast<std::size_t>(folds));
    if (retain_)
        for (int f = 0; f < folds; ++f) {
            std::optional<ReducedProblem> scratch;
            fold_problem(f, scratch);
            fold_probs_[f] = std::move(scratch);
        }
}

const ReducedProblem& CvSession::fold_problem(int f, std::optional<ReducedProblem>& scratch) const {
    if (fold_probs_[f]) return *fold_probs_[f];
    const auto held = CrossProducts::accumulate(x_, y_, fold_rows_[f], shift_, yshift_);
    scratch.emplace(total_ - held, unpen_);
    return *scratch;
}

double CvSession::validation_mse(int fold, const Vector& full_std, const ReducedProblem& prob) const {
    auto [slope, b0] = prob.raw_coefficients(full_std);
    std::vector<int> nz;
    for (Eigen::Index k = 0; k < slope.size(); ++k)
        if (slope[k] != 0.0) nz.push_back(static_cast<int>(k));
    double rss = 0.0;
    for (int i : fold_rows_[fold]) {
        double pred = b0;
        for (int k : nz) pred += slope[k] * (x_(i, k) - shift_[k]);
        const double r = (y_[i] - yshift_) - pred;
        rss += r * r;
    }
    return rss / static_cast<double>(fold_rows_[fold].size());
}

namespace {

// True once a path should stop after reaching deviance ratio `dr` (previous `prev`).
bool path_saturated(double dr, double prev, const CvOptions& opt) {
    return dr >= opt.saturation || dr - prev < opt.min_gain * dr;
}

}  // namespace

CvResult CvSession::path(const Vector& factors, const CvOptions& opt) {
    check_factors(factors, x_.cols());
    if (opt.grid_size < 1) throw std::invalid_argument("grid size must be positive");
    if (!(opt.grid_ratio > 0.0 && opt.grid_ratio < 1.0)) throw std::invalid_argument("grid ratio must lie in (0,1)");
    double lmax = full_->lambda_max(factors);
    if (!(lmax > 0.0)) lmax = 1.0;
    grid_.clear();
    path_factors_ = factors;
    full_path_.clear();
    full_status_.clear();
    {
        Vector beta;
        double prev = 0.0;
        int sweeps = 0;
        for (int i = 0; i < opt.grid_size; ++i) {
            const double lam =
                opt.grid_size == 1 ? lmax
                                   : lmax * std::pow(opt.grid_ratio, static_cast<double>(i) / (opt.grid_size - 1));
            auto [ok, s] = full_->solve(lam, factors, beta, opt.solver);
            sweeps += s;
            grid_.push_back(lam);
            full_path_.push_back(beta);
            full_status_.emplace_back(ok, sweeps);
            const double dr = full_->deviance_ratio(beta);
            if (i > 0 && path_saturated(dr, prev, opt)) break;
            prev = dr;
        }
    }

    const int gs = static_cast<int>(grid_.size());
    std::vector<std::vector<double>> err(static_cast<std::size_t>(folds_), std::vector<double>(gs));
    std::vector<std::vector<Vector>> betas;
    if (retain_) betas.assign(static_cast<std::size_t>(folds_), std::vector<Vector>(gs));
    for (int f = 0; f < folds_; ++f) {
        std::optional<ReducedProblem> scratch;
        const ReducedProblem& prob = fold_problem(f, scratch);
        Vector beta;
        double prev = 0.0;
        bool frozen = false;
        for (int i = 0; i < gs; ++i) {
            if (frozen) {
                err[f][i] = err[f][i - 1];
            } else {
                prob.solve(grid_[i], factors, beta, opt.solver);
                err[f][i] = validation_mse(f, prob.full_coefficients(beta), prob);
                const double dr = prob.deviance_ratio(beta);
                frozen = i > 0 && path_saturated(dr, prev, opt);
                prev = dr;
            }
            if (retain_) betas[f][i] = beta;
        }
    }

    CvResult res;
    res.lambdas = grid_;
    res.fold_seed = seed_;
    res.cv_mean.resize(gs);
    res.cv_se.resize(gs);
    for (int i = 0; i < gs; ++i) {
        double s = 0.0;
        for (int f = 0; f < folds_; ++f) s += err[f][i];
        const double mu = s / folds_;
        double ss = 0.0;
        for (int f = 0; f < folds_; ++f) ss += (err[f][i] - mu) * (err[f][i] - mu);
        res.cv_mean[i] = mu;
        res.cv_se[i] = std::sqrt(ss / (folds_ - 1)) / std::sqrt(static_cast<double>(folds_));
    }
    int best = 0;
    for (int i = 1; i < gs; ++i)
        if (res.cv_mean[i] < res.cv_mean[best]) best = i;
    res.selected = best;
    res.lambda_selected = grid_[best];
    selected_ = best;
    fold_warm_.clear();
    if (retain_)
        for (int f = 0; f < folds_; ++f) fold_warm_.push_back(betas[f][best]);
    return res;
}

double CvSession::cv_error(double lambda, const Vector& factors, const SolverOptions& opt) {
    if (!retain_ || fold_warm_.empty()) throw std::logic_error("cv_error needs a retained session and a prior path");
    double s = 0.0;
    for (int f = 0; f < folds_; ++f) {
        const ReducedProblem& prob = *fold_probs_[f];
        Vector beta = fold_warm_[f];
        prob.solve(lambda, factors, beta, opt);
        s += validation_mse(f, prob.full_coefficients(beta), prob);
    }
    return s / folds_;
}

LassoFit CvSession::path_fit(int index) const {
    if (index < 0 || index >= static_cast<int>(full_path_.size())) throw std::out_of_range("path index out of range");
    const auto [ok, sweeps] = full_status_[index];
    return make_fit(*full_, full_path_[index], grid_[index], path_factors_, shift_, yshift_, ok, sweeps);
}

LassoFit CvSession::fit_full(double lambda, const Vector& factors, const SolverOptions& opt,
                             const LassoFit* warm) const {
    Vector beta = Vector::Zero(full_->n_penalized());
    if (warm)
        for (int k = 0; k < full_->n_penalized(); ++k) beta[k] = warm->beta[full_->penalized()[k]];
    auto [ok, sweeps] = full_->solve(lambda, factors, beta, opt);
    return make_fit(*full_, beta, lambda, factors, shift_, yshift_, ok, sweeps);
}

std::pair<CvResult, LassoFit> lasso_cv(const Matrix& x, const Vector& y, const Vector& factors,
                                       const CvOptions& opt, std::uint64_t seed) {
    CvSession session(x, y, factors, opt.folds, seed, false);
    CvResult cv = session.path(factors, opt);
    LassoFit fit = session.path_fit(cv.selected);
    return {std::move(cv), std::move(fit)};
}

InteractionDesign interaction_design(const Matrix& xc, const Matrix& zbin) {
    if (xc.rows() != zbin.rows()) throw DimensionError("xc and z must have the same number of rows");
    const Eigen::Index n = xc.rows(), q = xc.cols(), mb = zbin.cols();
    for (Eigen::Index c = 0; c < mb; ++c)
        for (Eigen::Index i = 0; i < n; ++i)
            if (zbin(i, c) != 0.0 && zbin(i, c) != 1.0)
                throw std::invalid_argument("interaction covariate Z" + std::to_string(c + 1) + " is not binary");
    Matrix raw(n, q + mb + q * mb);
    InteractionDesign out;
    raw.leftCols(q) = xc;
    for (Eigen::Index k = 0; k < q; ++k) out.columns.push_back({ColumnKind::Main, static_cast<int>(k), -1});
    raw.middleCols(q, mb) = zbin;
    for (Eigen::Index c = 0; c < mb; ++c) out.columns.push_back({ColumnKind::Covariate, -1, static_cast<int>(c)});
    for (Eigen::Index c = 0; c < mb; ++c)
        for (Eigen::Index k = 0; k < q; ++k) {
            raw.col(q + mb + c * q + k) = xc.col(k).cwiseProduct(zbin.col(c));
            out.columns.push_back({ColumnKind::Interaction, static_cast<int>(k), static_cast<int>(c)});
        }
    out.design = standardize(raw);
    return out;
}

}  // namespace lokf::glm
