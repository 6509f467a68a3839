#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "lokf/dataset_io.hpp"
#include "lokf/knockoffs.hpp"
#include "lokf/rng.hpp"
#include "lokf/run_config.hpp"

namespace fs = std::filesystem;
using namespace lokf;

namespace {

// Flag values collected before they are merged over the config file.
struct Overrides {
    std::optional<double> alpha, c_main, zeta_offset, cloak_prob;
    std::optional<int> g_max, lambda_grid_size, cv_folds, min_subgroup, replicates, threads;
    std::optional<std::uint64_t> master_seed;
    std::optional<std::string> scenario, output_dir, score_path;
    std::vector<std::string> methods;
    std::vector<int> n;
    std::vector<double> xi_grid;

    void add_to(CLI::App* app) {
        app->add_option("--alpha", alpha, "target FDR level");
        app->add_option("--methods", methods, "methods to run");
        app->add_option("--g-max", g_max, "max interacting covariates per variable");
        app->add_option("--c-main", c_main, "main-effect penalty multiplier");
        app->add_option("--zeta-offset", zeta_offset, "prior weight offset");
        app->add_option("--xi-grid", xi_grid, "prior mixing grid");
        app->add_option("--lambda-grid-size", lambda_grid_size, "lasso path length");
        app->add_option("--cv-folds", cv_folds, "cross-validation folds");
        app->add_option("--min-subgroup", min_subgroup, "smallest subgroup that gets scored");
        app->add_option("--cloak-prob", cloak_prob, "cloak swap probability");
        app->add_option("--score-path", score_path, "local or batch");
        app->add_option("--scenario", scenario, "hetero, transfer or blocks");
        app->add_option("--n", n, "sample sizes");
        app->add_option("--replicates", replicates, "replicates per sample size");
        app->add_option("--master-seed", master_seed, "master seed");
        app->add_option("--output-dir", output_dir, "output directory");
        app->add_option("--threads", threads, "worker threads");
    }

    void apply(nlohmann::json& j) const {
        auto put = [&](const char* k, const auto& v) {
            if (v) j[k] = *v;
        };
        put("alpha", alpha);
        put("c_main", c_main);
        put("zeta_offset", zeta_offset);
        put("cloak_prob", cloak_prob);
        put("g_max", g_max);
        put("lambda_grid_size", lambda_grid_size);
        put("cv_folds", cv_folds);
        put("min_subgroup", min_subgroup);
        put("replicates", replicates);
        put("threads", threads);
        put("master_seed", master_seed);
        put("scenario", scenario);
        put("output_dir", output_dir);
        put("score_path", score_path);
        if (!methods.empty()) j["methods"] = methods;
        if (!n.empty()) j["n"] = n;
        if (!xi_grid.empty()) j["xi_grid"] = xi_grid;
    }
};

nlohmann::json read_json_file(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

int cmd_simulate(const std::string& config_path, const Overrides& ov) {
    RunConfig rc;
    try {
        nlohmann::json j = read_json_file(config_path);
        ov.apply(j);
        rc = parse_run_config(j);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    fs::create_directories(rc.output_dir);
    const auto records = run_experiment(rc.sim, [](int done, int total) {
        std::fprintf(stderr, "\rreplicates %d/%d", done, total);
        if (done == total) std::fprintf(stderr, "\n");
    });
    const bool shift = rc.sim.scenario == Scenario::Transfer;
    {
        auto out = open_out(fs::path(rc.output_dir) / "records.csv");
        write_records_csv(out, records, shift);
    }
    {
        auto out = open_out(fs::path(rc.output_dir) / "aggregate.csv");
        write_aggregate_csv(out, aggregate(records));
    }
    {
        auto out = open_out(fs::path(rc.output_dir) / "resolved_config.json");
        out << to_json(rc).dump(2) << '\n';
    }
    int failed = 0;
    for (const auto& r : records)
        if (!r.error.empty()) {
            ++failed;
            std::cerr << "replicate " << r.replicate << " n=" << r.n << " " << r.method << " failed: " << r.error
                      << '\n';
        }
    return failed ? 1 : 0;
}

int cmd_analyze(const std::string& dataset, const std::string& config_path, const Overrides& ov,
                const std::string& method, std::optional<std::uint64_t> seed) {
    RunConfig rc;
    try {
        nlohmann::json j = read_json_file(config_path);
        ov.apply(j);
        rc = parse_run_config(j);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    const auto& ms = supported_methods();
    if (std::find(ms.begin(), ms.end(), method) == ms.end()) {
        std::cerr << "config error: method: unsupported method '" << method << "'\n";
        return 2;
    }
    DataBundle d;
    try {
        d = read_dataset_csv(dataset);
    } catch (const MissingKnockoffs& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    const std::uint64_t s = seed.value_or(rc.sim.master_seed);
    const double alpha = rc.sim.alpha;
    const LkfConfig& cfg = rc.sim.lkf;
    fs::create_directories(rc.output_dir);
    const fs::path dir(rc.output_dir);
    if (method == "robust_alkf") {
        const RobustResult res = robust_alkf(d, alpha, cfg, rc.sim.pc, s);
        auto out = open_out(dir / "discoveries.csv");
        write_robust_csv(out, res);
        auto pj = open_out(dir / "partition.json");
        pj << partition_to_json(res.partition) << '\n';
        std::cout << "rejections " << res.rejected.size() << "\n";
        return 0;
    }
    DiscoverySet ds;
    if (method == "alkf") ds = alkf(d, alpha, cfg, s).second;
    else if (method == "global_kf") ds = global_kf(d, alpha, cfg, s);
    else if (method == "split_lkf") ds = split_lkf(d, alpha, cfg, s);
    else if (method == "naive_lkf") ds = naive_lkf(d, alpha, cfg, s);
    else ds = fixed_lkf(d, cfg.env_covariates, alpha, cfg, s);
    {
        auto out = open_out(dir / "discoveries.csv");
        write_discoveries_csv(out, ds);
        auto pj = open_out(dir / "partition.json");
        pj << partition_to_json(ds.partition) << '\n';
    }
    std::cout << "rejections " << ds.rejected.size() << "\nthreshold " << ds.threshold << "\nfdp_estimate ";
    if (ds.fdp_estimate) std::cout << *ds.fdp_estimate << '\n';
    else std::cout << "NA\n";
    return 0;
}

int cmd_diagnose(const std::string& dataset, std::optional<int> column, const std::vector<int>& bins) {
    DataBundle d;
    try {
        d = read_dataset_csv(dataset);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::vector<int> cols;
    if (column) {
        if (*column < 1 || *column > d.p()) {
            std::cerr << "error: column " << *column << " out of range 1.." << d.p() << '\n';
            return 2;
        }
        cols.push_back(*column - 1);
    } else {
        for (int j = 0; j < d.p(); ++j) cols.push_back(j);
    }
    std::vector<int> zb;
    for (int b : bins) {
        if (b < 1 || b > d.m()) {
            std::cerr << "error: bin covariate " << b << " out of range\n";
            return 2;
        }
        zb.push_back(b - 1);
    }
    std::cout << "column,statistic,df,p_value,bins_used,bins_skipped,flagged_1pct\n";
    int flagged = 0;
    for (int j : cols) {
        const auto r = exchangeability_diagnostic(d.x, d.xk, d.z, j, zb);
        const bool f = r.p_value < 0.01;
        flagged += f;
        std::printf("%d,%.6g,%d,%.6g,%d,%d,%d\n", j + 1, r.statistic, r.df, r.p_value, r.bins_used, r.bins_skipped,
                    f ? 1 : 0);
    }
    std::fprintf(stderr, "%d of %zu columns flagged at the 1%% level\n", flagged, cols.size());
    return 0;
}

int cmd_generate(const std::string& scenario, int n, std::uint64_t seed, const std::string& out_path) {
    SimConfig cfg;
    if (scenario == "hetero") cfg.scenario = Scenario::Hetero;
    else if (scenario == "transfer") cfg.scenario = Scenario::Transfer;
    else if (scenario == "blocks") cfg.scenario = Scenario::Blocks;
    else {
        std::cerr << "config error: scenario: must be hetero, transfer or blocks\n";
        return 2;
    }
    if (n < 2) {
        std::cerr << "config error: n: must be at least 2\n";
        return 2;
    }
    const Generated g = generate(cfg, n, seed);
    write_dataset_csv(out_path, g.data);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local knockoff filters: simulation, analysis and knockoff diagnostics"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a simulation campaign");
    std::string sim_config;
    Overrides sim_ov;
    sim->add_option("--config,-c", sim_config, "JSON config file");
    sim_ov.add_to(sim);

    auto* ana = app.add_subcommand("analyze", "run a filter on a dataset CSV");
    std::string ana_data, ana_config, ana_method = "alkf";
    std::optional<std::uint64_t> ana_seed;
    Overrides ana_ov;
    ana->add_option("dataset", ana_data, "dataset CSV (y, x*, xk*, z*)")->required();
    ana->add_option("--config,-c", ana_config, "JSON config file");
    ana->add_option("--method", ana_method, "alkf, global_kf, split_lkf, naive_lkf, fixed_lkf or robust_alkf");
    ana->add_option("--seed", ana_seed, "seed (defaults to master_seed)");
    ana_ov.add_to(ana);

    auto* dia = app.add_subcommand("diagnose-knockoffs", "test knockoff exchangeability per column");
    std::string dia_data;
    std::optional<int> dia_col;
    std::vector<int> dia_bins;
    dia->add_option("dataset", dia_data, "dataset CSV")->required();
    dia->add_option("--column", dia_col, "1-based variable (default: all)");
    dia->add_option("--bin-covariates", dia_bins, "1-based z columns to condition on");

    auto* gen = app.add_subcommand("generate", "write one synthetic dataset as CSV");
    std::string gen_scenario = "hetero", gen_out;
    int gen_n = 1000;
    std::uint64_t gen_seed = 1;
    gen->add_option("--scenario", gen_scenario, "hetero, transfer or blocks");
    gen->add_option("--n", gen_n, "rows");
    gen->add_option("--seed", gen_seed, "data seed");
    gen->add_option("--out,-o", gen_out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (sim->parsed()) return cmd_simulate(sim_config, sim_ov);
        if (ana->parsed()) return cmd_analyze(ana_data, ana_config, ana_ov, ana_method, ana_seed);
        if (dia->parsed()) return cmd_diagnose(dia_data, dia_col, dia_bins);
        if (gen->parsed()) return cmd_generate(gen_scenario, gen_n, gen_seed, gen_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
