#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lokf/filter.hpp"
#include "lokf/robust_pc.hpp"
#include "lokf/rng.hpp"

namespace lokf {

/// Ground truth: beta_j^i = beta_bar_j when every condition (z column, value)
/// holds for row i, else 0. Homogeneous effects have no conditions.
struct TruthModel {
    struct Condition {
        int covariate = 0;
        double value = 1.0;
    };
    std::vector<double> beta_bar;
    std::vector<std::vector<Condition>> conditions;
    Vector gamma;
    std::optional<BlockMap> blocks;  // metrics count blocks as units when set

    int p() const { return static_cast<int>(beta_bar.size()); }
    double coefficient(int j, const Matrix& z, Eigen::Index i) const;
    bool active(int j, const Matrix& z, Eigen::Index i) const { return coefficient(j, z, i) != 0.0; }
    /// Variables that stay non-null when every listed covariate is set to zero.
    std::vector<int> relevant_under_zero(const std::vector<int>& covariates) const;
};

struct Generated {
    DataBundle data;
    TruthModel truth;
    std::vector<int> shift_relevant;  // transfer scenario only
    bool has_shift = false;
};

/// AR(rho) latent normals with unit marginal variance, one row per individual.
Matrix ar_latent(Eigen::Index n, int dims, double rho, Rng& rng);

Generated gen_hetero(int n, std::uint64_t seed);
Generated gen_transfer(int n, std::uint64_t seed);

struct BlocksConfig {
    int n_blocks = 50;
    int block_size = 4;
    int global_blocks = 5;
    int local_blocks = 5;
    double amplitude = 12.0;
    double theta0 = 0.2;
    double theta1 = 0.8;
};

/// Latent-class blocks: per block H ~ Bernoulli(1/2) and X_j | H ~ Bernoulli(theta_H)
/// independently; knockoffs resample H from its posterior given the block and
/// then X. z = (Z1, Z2) ~ Bernoulli(1/2); local effects act where Z1 = 0.
Generated gen_blocks(int n, std::uint64_t seed, const BlocksConfig& cfg = {});

enum class HomogeneityMode { All, TrueOnly };

struct Metrics {
    double fdp = 0.0;
    double power = 0.0;
    std::optional<double> homogeneity;
    int n_rejections = 0;
};

double metric_fdp(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z);
double metric_power(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z);
std::optional<double> metric_homogeneity(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z,
                                         HomogeneityMode mode = HomogeneityMode::All);
Metrics evaluate(const DiscoverySet& disc, const TruthModel& truth, const Matrix& z,
                 HomogeneityMode mode = HomogeneityMode::All);

/// Variable-level view of a robust result (trivial subgroups).
DiscoverySet as_discovery_set(const RobustResult& res, int p);

/// Fraction of rejected variables outside `relevant`, and fraction of `relevant` rejected.
std::pair<double, double> shift_metrics(const DiscoverySet& disc, const std::vector<int>& relevant);

enum class Scenario { Hetero, Transfer, Blocks };

struct SimConfig {
    Scenario scenario = Scenario::Hetero;
    std::vector<int> n_values{500, 1000, 2000, 4000};
    int replicates = 100;
    std::uint64_t master_seed = 1;
    std::vector<std::string> methods{"alkf", "global_kf", "split_lkf", "naive_lkf"};
    double alpha = 0.1;
    LkfConfig lkf{};
    PcConfig pc{};
    BlocksConfig blocks{};
    HomogeneityMode homogeneity = HomogeneityMode::All;
    int threads = 1;
    bool record_timing = false;
};

const std::vector<std::string>& supported_methods();

struct MetricsRecord {
    std::string method;
    int replicate = 0;
    int n = 0;
    std::uint64_t seed = 0;
    Metrics metrics;
    std::optional<double> shift_fdp, shift_power;
    std::optional<double> runtime_ms;
    std::string error;
};

std::uint64_t replicate_seed(std::uint64_t master, int n, int replicate);
std::uint64_t method_seed(std::uint64_t replicate_seed, const std::string& method);

Generated generate(const SimConfig& cfg, int n, std::uint64_t data_seed);

/// Runs one method on one dataset.
MetricsRecord run_method(const SimConfig& cfg, const Generated& g, const std::string& method, std::uint64_t seed);

/// Every (n, replicate, method) in deterministic order. `progress` is called
/// after each finished replicate.
std::vector<MetricsRecord> run_experiment(const SimConfig& cfg,
                                          const std::function<void(int, int)>& progress = {});

struct AggregateRow {
    std::string method;
    int n = 0;
    std::string metric;
    double mean = 0.0;
    double mc_se = 0.0;
    int n_replicates = 0;
};

std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<MetricsRecord>& records, bool shift_columns);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

}  // namespace lokf
