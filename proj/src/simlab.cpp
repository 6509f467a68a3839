#include "lokf/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "lokf/knockoffs.hpp"

namespace lokf {

double TruthModel::coefficient(int j, const Matrix& z, Eigen::Index i) const {
    const double b = beta_bar.at(j);
    if (b == 0.0) return 0.0;
    for (const auto& c : conditions.at(j))
        if (z(i, c.covariate) != c.value) return 0.0;
    return b;
}

std::vector<int> TruthModel::relevant_under_zero(const std::vector<int>& covariates) const {
    std::vector<int> out;
    for (int j = 0; j < p(); ++j) {
        if (beta_bar[j] == 0.0) continue;
        bool ok = true;
        for (const auto& c : conditions[j])
            if (std::find(covariates.begin(), covariates.end(), c.covariate) != covariates.end() && c.value != 0.0)
                ok = false;
        if (ok) out.push_back(j);
    }
    return out;
}

Matrix ar_latent(Eigen::Index n, int dims, double rho, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    const double s = std::sqrt(1.0 - rho * rho);
    Matrix out(n, dims);
    for (Eigen::Index i = 0; i < n; ++i) {
        double prev = nd(rng);
        out(i, 0) = prev;
        for (int t = 1; t < dims; ++t) {
            prev = rho * prev + s * nd(rng);
            out(i, t) = prev;
        }
    }
    return out;
}

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Binary block [0, nb) then Phi(latent - 1) for the remaining columns.
Matrix covariates(int n, int nb, int nc, std::uint64_t seed) {
    Matrix z(n, nb + nc);
    Rng rz(derive_seed(seed, "zbin"));
    std::bernoulli_distribution coin(0.5);
    for (int c = 0; c < nb; ++c)
        for (int i = 0; i < n; ++i) z(i, c) = coin(rz) ? 1.0 : 0.0;
    Rng rl(derive_seed(seed, "latent"));
    const Matrix lat = ar_latent(n, nc, 0.5, rl);
    for (int t = 0; t < nc; ++t)
        for (int i = 0; i < n; ++i) z(i, nb + t) = norm_cdf(lat(i, t) - 1.0);
    return z;
}

Vector outcome(const DataBundle& d, const TruthModel& truth, std::uint64_t seed) {
    Rng rn(derive_seed(seed, "noise"));
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector y(d.n());
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        double v = d.z.row(i).dot(truth.gamma);
        for (int j = 0; j < truth.p(); ++j) v += d.x(i, j) * truth.coefficient(j, d.z, i);
        y[i] = v + nd(rn);
    }
    return y;
}

std::vector<std::string> default_names(const DataBundle& d) {
    std::vector<std::string> names{"y"};
    for (Eigen::Index j = 0; j < d.p(); ++j) names.push_back("x" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < d.p(); ++j) names.push_back("xk" + std::to_string(j + 1));
    for (Eigen::Index c = 0; c < d.m(); ++c) names.push_back("z" + std::to_string(c + 1));
    return names;
}

double random_sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

Generated gen_bernoulli_scenario(int n, std::uint64_t seed, int p, int nb, int nc, bool transfer) {
    if (n < 2) throw std::invalid_argument("n must be at least 2");
    Generated g;
    DataBundle& d = g.data;
    d.z = covariates(n, nb, nc, seed);
    CondBernoulliModel model;
    for (int j = 0; j < p; ++j) model.prob_column.push_back(nb + j);
    d.x = gen_bernoulli_knockoffs(d.z, model, derive_seed(seed, "x"));
    d.xk = gen_bernoulli_knockoffs(d.z, model, derive_seed(seed, "xk"));

    TruthModel& t = g.truth;
    Rng rt(derive_seed(seed, "truth"));
    std::uniform_int_distribution<int> pick(0, nb - 1);
    t.beta_bar.assign(p, 0.0);
    t.conditions.assign(p, {});
    std::vector<char> interacts(p, 1);
    if (transfer) {
        std::vector<int> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rt);
        for (int a = 0; a < p / 2; ++a) interacts[order[a]] = 0;
    }
    for (int j = 0; j < p; ++j) {
        const bool nonnull = transfer || j >= p / 2;
        if (nonnull) t.beta_bar[j] = 4.0 * random_sign(rt);
        const int l1 = pick(rt), l2 = pick(rt);
        if (!interacts[j]) continue;
        t.conditions[j].push_back({l1, 1.0});
        if (l2 != l1) t.conditions[j].push_back({l2, 1.0});
    }
    const int m = nb + nc;
    t.gamma = Vector::Zero(m);
    const int first = m / 2;
    std::vector<int> slots(m - first);
    std::iota(slots.begin(), slots.end(), first);
    std::shuffle(slots.begin(), slots.end(), rt);
    for (std::size_t a = 0; a < slots.size() / 2; ++a) t.gamma[slots[a]] = 4.0 * random_sign(rt);

    d.y = outcome(d, t, seed);
    d.column_names = default_names(d);
    if (transfer) {
        std::vector<int> bin(nb);
        std::iota(bin.begin(), bin.end(), 0);
        g.shift_relevant = t.relevant_under_zero(bin);
        g.has_shift = true;
    }
    return g;
}

}  // namespace

Generated gen_hetero(int n, std::uint64_t seed) { return gen_bernoulli_scenario(n, seed, 20, 20, 60, false); }

Generated gen_transfer(int n, std::uint64_t seed) { return gen_bernoulli_scenario(n, seed, 40, 40, 120, true); }

Generated gen_blocks(int n, std::uint64_t seed, const BlocksConfig& cfg) {
    if (n < 2) throw std::invalid_argument("n must be at least 2");
    if (cfg.n_blocks < 1 || cfg.block_size < 1) throw std::invalid_argument("block layout must be nonempty");
    if (cfg.global_blocks + cfg.local_blocks > cfg.n_blocks)
        throw std::invalid_argument("more causal blocks than blocks");
    const int nbk = cfg.n_blocks, bs = cfg.block_size, p = nbk * bs;
    Generated g;
    DataBundle& d = g.data;
    d.x.resize(n, p);
    d.xk.resize(n, p);
    d.z.resize(n, 2);
    Rng rz(derive_seed(seed, "zbin"));
    std::bernoulli_distribution half(0.5);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < n; ++i) d.z(i, c) = half(rz) ? 1.0 : 0.0;

    const double th[2] = {cfg.theta0, cfg.theta1};
    Rng rx(derive_seed(seed, "x"));
    Rng rk(derive_seed(seed, "xk"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int b = 0; b < nbk; ++b)
        for (int i = 0; i < n; ++i) {
            const int h = u(rx) < 0.5 ? 1 : 0;
            double l1 = std::log(0.5), l0 = std::log(0.5);
            for (int k = 0; k < bs; ++k) {
                const int j = b * bs + k;
                const double xv = u(rx) < th[h] ? 1.0 : 0.0;
                d.x(i, j) = xv;
                l1 += xv > 0 ? std::log(th[1]) : std::log1p(-th[1]);
                l0 += xv > 0 ? std::log(th[0]) : std::log1p(-th[0]);
            }
            const double post1 = 1.0 / (1.0 + std::exp(l0 - l1));
            const int hk = u(rk) < post1 ? 1 : 0;
            for (int k = 0; k < bs; ++k) d.xk(i, b * bs + k) = u(rk) < th[hk] ? 1.0 : 0.0;
        }

    TruthModel& t = g.truth;
    t.beta_bar.assign(p, 0.0);
    t.conditions.assign(p, {});
    t.gamma = Vector::Zero(2);
    t.blocks = BlockMap::from_sizes(std::vector<int>(nbk, bs));
    Rng rt(derive_seed(seed, "truth"));
    std::vector<int> order(nbk);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rt);
    std::uniform_int_distribution<int> member(0, bs - 1);
    const double base = cfg.amplitude / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < cfg.global_blocks + cfg.local_blocks; ++a) {
        const int j = order[a] * bs + member(rt);
        const bool local = a >= cfg.global_blocks;
        t.beta_bar[j] = random_sign(rt) * (local ? base / std::sqrt(0.5) : base);
        if (local) t.conditions[j].push_back({0, 0.0});
    }
    d.y = outcome(d, t, seed);
    d.column_names = default_names(d);
    return g;
}

namespace {

struct UnitView {
    const TruthModel& truth;
    const DiscoverySet& disc;

    int count() const { return disc.blocks ? disc.blocks->n_blocks() : truth.p(); }
    bool active(int u, const Matrix& z, Eigen::Index i) const {
        if (!disc.blocks) return truth.active(u, z, i);
        for (int j : disc.blocks->members(u))
            if (truth.active(j, z, i)) return true;
        return false;
    }
    // Number of rows of subgroup (u, l) where the unit has an effect, and the subgroup size.
    std::pair<long, long> hits(HypothesisId h, const Matrix& z) const {
        long hit = 0, tot = 0;
        for (int i : subgroup_members(disc.partition, h.j, h.l, z)) {
            ++tot;
            if (active(h.j, z, i)) ++hit;
        }
        return {hit, tot};
    }
};

}  // namespace

double metric_fdp(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z) {
    if (disc.rejected.empty()) return 0.0;
    UnitView uv{truth, disc};
    long fals = 0;
    for (const auto& h : disc.rejected)
        if (uv.hits(h, z).first == 0) ++fals;
    return static_cast<double>(fals) / static_cast<double>(disc.rejected.size());
}

double metric_power(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z) {
    UnitView uv{truth, disc};
    long denom = 0, found = 0;
    std::set<int> hit_units;
    for (const auto& h : disc.rejected)
        if (uv.hits(h, z).first > 0) hit_units.insert(h.j);
    for (int u = 0; u < uv.count(); ++u) {
        bool any = false;
        for (Eigen::Index i = 0; i < z.rows() && !any; ++i) any = uv.active(u, z, i);
        if (!any) continue;
        ++denom;
        if (hit_units.count(u)) ++found;
    }
    return denom == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(denom);
}

std::optional<double> metric_homogeneity(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z,
                                         HomogeneityMode mode) {
    UnitView uv{truth, disc};
    double s = 0.0;
    long k = 0;
    for (const auto& h : disc.rejected) {
        const auto [hit, tot] = uv.hits(h, z);
        if (mode == HomogeneityMode::TrueOnly && hit == 0) continue;
        s += tot == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(tot);
        ++k;
    }
    if (k == 0) return std::nullopt;
    return s / static_cast<double>(k);
}

Metrics evaluate(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z, HomogeneityMode mode) {
    Metrics m;
    m.fdp = metric_fdp(disc, truth, z);
    m.power = metric_power(disc, truth, z);
    m.homogeneity = metric_homogeneity(disc, truth, z, mode);
    m.n_rejections = static_cast<int>(disc.rejected.size());
    return m;
}

DiscoverySet as_discovery_set(const RobustResult& res, int p) {
    DiscoverySet ds;
    ds.alpha = res.alpha;
    ds.partition = PartitionSet::trivial(p);
    for (const auto& rd : res.rejected) ds.rejected.push_back({rd.variable, 0});
    return ds;
}

std::pair<double, double> shift_metrics(const DiscoverySet& disc, const std::vector<int>& relevant) {
    std::set<int> vars;
    for (const auto& h : disc.rejected) {
        if (disc.blocks)
            for (int j : disc.blocks->members(h.j)) vars.insert(j);
        else
            vars.insert(h.j);
    }
    const std::set<int> rel(relevant.begin(), relevant.end());
    long fals = 0, hit = 0;
    for (int j : vars) (rel.count(j) ? hit : fals) += 1;
    const double fdp = vars.empty() ? 0.0 : static_cast<double>(fals) / static_cast<double>(vars.size());
    const double pw = rel.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(rel.size());
    return {fdp, pw};
}

const std::vector<std::string>& supported_methods() {
    static const std::vector<std::string> m{"alkf", "global_kf", "split_lkf", "naive_lkf", "fixed_lkf", "robust_alkf"};
    return m;
}

std::uint64_t replicate_seed(std::uint64_t master, int n, int replicate) {
    return derive_seed(master, "replicate", {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate)});
}

std::uint64_t method_seed(std::uint64_t rep_seed, const std::string& method) {
    return derive_seed(rep_seed, "method", {detail::fnv1a(method)});
}

Generated generate(const SimConfig& cfg, int n, std::uint64_t data_seed) {
    switch (cfg.scenario) {
        case Scenario::Hetero: return gen_hetero(n, data_seed);
        case Scenario::Transfer: return gen_transfer(n, data_seed);
        case Scenario::Blocks: return gen_blocks(n, data_seed, cfg.blocks);
    }
    throw std::logic_error("unknown scenario");
}

MetricsRecord run_method(const SimConfig& cfg, const Generated& g, const std::string& method, std::uint64_t seed) {
    MetricsRecord rec;
    rec.method = method;
    rec.n = static_cast<int>(g.data.n());
    rec.seed = seed;
    LkfConfig lkf = cfg.lkf;
    if (g.truth.blocks) lkf.blocks = g.truth.blocks;
    const auto t0 = std::chrono::steady_clock::now();
    DiscoverySet ds;
    if (method == "alkf") ds = alkf(g.data, cfg.alpha, lkf, seed).second;
    else if (method == "global_kf") ds = global_kf(g.data, cfg.alpha, lkf, seed);
    else if (method == "split_lkf") ds = split_lkf(g.data, cfg.alpha, lkf, seed);
    else if (method == "naive_lkf") ds = naive_lkf(g.data, cfg.alpha, lkf, seed);
    else if (method == "fixed_lkf") ds = fixed_lkf(g.data, lkf.env_covariates, cfg.alpha, lkf, seed);
    else if (method == "robust_alkf")
        ds = as_discovery_set(robust_alkf(g.data, cfg.alpha, lkf, cfg.pc, seed), static_cast<int>(g.data.p()));
    else throw std::invalid_argument("unknown method " + method);
    const auto t1 = std::chrono::steady_clock::now();
    rec.metrics = evaluate(ds, g.truth, g.data.z, cfg.homogeneity);
    if (g.has_shift) std::tie(rec.shift_fdp, rec.shift_power) = shift_metrics(ds, g.shift_relevant);
    if (cfg.record_timing) rec.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rec;
}

std::vector<MetricsRecord> run_experiment(const SimConfig& cfg, const std::function<void(int, int)>& progress) {
    for (const auto& m : cfg.methods)
        if (std::find(supported_methods().begin(), supported_methods().end(), m) == supported_methods().end())
            throw std::invalid_argument("unknown method " + m);
    struct Task {
        int n, rep;
    };
    std::vector<Task> tasks;
    for (int n : cfg.n_values)
        for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({n, r});
    std::vector<std::vector<MetricsRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    int done = 0;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            const Task t = tasks[k];
            const std::uint64_t rs = replicate_seed(cfg.master_seed, t.n, t.rep);
            std::optional<Generated> g;
            std::string gen_error;
            try {
                g = generate(cfg, t.n, derive_seed(rs, "data"));
            } catch (const std::exception& e) {
                gen_error = e.what();
            }
            for (const auto& m : cfg.methods) {
                const std::uint64_t ms = method_seed(rs, m);
                MetricsRecord rec;
                if (g) {
                    try {
                        rec = run_method(cfg, *g, m, ms);
                    } catch (const std::exception& e) {
                        rec.error = e.what();
                    }
                } else {
                    rec.error = gen_error;
                }
                rec.method = m;
                rec.n = t.n;
                rec.replicate = t.rep;
                rec.seed = ms;
                results[k].push_back(std::move(rec));
            }
            std::lock_guard<std::mutex> lock(mu);
            ++done;
            if (progress) progress(done, static_cast<int>(tasks.size()));
        }
    };
    const int nt = std::max(1, std::min<int>(cfg.threads, static_cast<int>(tasks.size())));
    if (nt == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    std::vector<MetricsRecord> out;
    for (auto& r : results)
        for (auto& rec : r) out.push_back(std::move(rec));
    return out;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
    std::vector<std::pair<std::string, int>> keys;
    std::map<std::pair<std::string, int>, std::map<std::string, std::vector<double>>> vals;
    const std::vector<std::string> names{"fdp", "power", "homogeneity", "n_rejections", "shift_fdp", "shift_power"};
    for (const auto& r : records) {
        const auto key = std::make_pair(r.method, r.n);
        if (!vals.count(key)) keys.push_back(key);
        auto& v = vals[key];
        if (!r.error.empty()) continue;
        v["fdp"].push_back(r.metrics.fdp);
        v["power"].push_back(r.metrics.power);
        if (r.metrics.homogeneity) v["homogeneity"].push_back(*r.metrics.homogeneity);
        v["n_rejections"].push_back(r.metrics.n_rejections);
        if (r.shift_fdp) v["shift_fdp"].push_back(*r.shift_fdp);
        if (r.shift_power) v["shift_power"].push_back(*r.shift_power);
    }
    std::vector<AggregateRow> out;
    for (const auto& key : keys) {
        for (const auto& name : names) {
            auto it = vals[key].find(name);
            if (it == vals[key].end() || it->second.empty()) continue;
            const auto& xs = it->second;
            const double k = static_cast<double>(xs.size());
            const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            const double se = xs.size() > 1 ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k) : 0.0;
            out.push_back({key.first, key.second, name, mean, se, static_cast<int>(xs.size())});
        }
    }
    return out;
}

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v) {
    if (!v) {
        out << "NA";
        return;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", *v);
    out << buf;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records, bool shift_columns) {
    out << "method,replicate,n,seed,fdp,power,homogeneity,n_rejections,runtime_ms";
    if (shift_columns) out << ",shift_fdp,shift_power";
    out << '\n';
    for (const auto& r : records) {
        const bool ok = r.error.empty();
        out << r.method << ',' << r.replicate << ',' << r.n << ',' << r.seed << ',';
        put_opt(out, ok ? std::optional<double>(r.metrics.fdp) : std::nullopt);
        out << ',';
        put_opt(out, ok ? std::optional<double>(r.metrics.power) : std::nullopt);
        out << ',';
        put_opt(out, ok ? r.metrics.homogeneity : std::nullopt);
        out << ',';
        if (ok) out << r.metrics.n_rejections;
        else out << "NA";
        out << ',';
        put_opt(out, r.runtime_ms);
        if (shift_columns) {
            out << ',';
            put_opt(out, ok ? r.shift_fdp : std::nullopt);
            out << ',';
            put_opt(out, ok ? r.shift_power : std::nullopt);
        }
        out << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "method,n,metric,mean,mc_se,n_replicates\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%d", r.mean, r.mc_se, r.n_replicates);
        out << r.method << ',' << r.n << ',' << r.metric << ',' << buf << '\n';
    }
}

}  // namespace lokf
