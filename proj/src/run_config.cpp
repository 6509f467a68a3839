#include "lokf/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace lokf {

namespace {

const std::set<std::string> kKeys{
    "alpha",        "methods",          "g_max",        "c_main",       "zeta_offset",   "xi_grid",
    "lambda_grid_size", "grid_ratio",   "cv_folds",     "solver_tol",   "min_subgroup",  "cloak_prob",
    "pc",           "scenario",         "n",            "replicates",   "master_seed",   "output_dir",
    "threads",      "score_path",       "use_prior",    "prescreen",    "env_covariates", "binary_covariates",
    "homogeneity",  "record_timing",    "blocks"};

template <class T>
T get(const nlohmann::json& j, const std::string& key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(key, "wrong type");
    }
}

std::vector<int> one_based(const nlohmann::json& j, const std::string& key) {
    std::vector<int> out;
    for (int v : get<std::vector<int>>(j, key)) {
        if (v < 1) throw ConfigError(key, "covariate numbers are 1-based");
        out.push_back(v - 1);
    }
    return out;
}

}  // namespace

int default_threads() {
    if (const char* s = std::getenv("LOKF_THREADS")) {
        const int t = std::atoi(s);
        if (t >= 1) return t;
    }
    return 1;
}

RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config", "top level must be an object");
    for (const auto& [k, _] : j.items())
        if (!kKeys.count(k)) throw ConfigError(k, "unknown field");
    RunConfig c;
    SimConfig& s = c.sim;
    LkfConfig& l = s.lkf;

    if (j.contains("scenario")) {
        const auto v = get<std::string>(j, "scenario");
        if (v == "hetero") s.scenario = Scenario::Hetero;
        else if (v == "transfer") s.scenario = Scenario::Transfer;
        else if (v == "blocks") s.scenario = Scenario::Blocks;
        else throw ConfigError("scenario", "must be hetero, transfer or blocks");
    }
    // Scenario defaults; explicit fields below override them.
    l.partition.c_main = s.scenario == Scenario::Blocks ? 0.25 : 1.0;
    l.partition.prescreen = s.scenario == Scenario::Blocks;
    if (s.scenario == Scenario::Blocks) l.path = ScorePath::Batch;
    if (s.scenario == Scenario::Transfer) s.methods = {"robust_alkf", "global_kf"};
    if (s.scenario == Scenario::Blocks) s.methods = {"alkf", "global_kf", "fixed_lkf"};
    s.threads = default_threads();

    if (j.contains("alpha")) s.alpha = get<double>(j, "alpha");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0,1)");
    if (j.contains("methods")) s.methods = get<std::vector<std::string>>(j, "methods");
    if (s.methods.empty()) throw ConfigError("methods", "must list at least one method");
    for (const auto& m : s.methods)
        if (std::find(supported_methods().begin(), supported_methods().end(), m) == supported_methods().end())
            throw ConfigError("methods", "unsupported method '" + m + "'");
    if (j.contains("g_max")) l.partition.g_max = get<int>(j, "g_max");
    if (l.partition.g_max < 0) throw ConfigError("g_max", "must be nonnegative");
    if (j.contains("c_main")) l.partition.c_main = get<double>(j, "c_main");
    if (!(l.partition.c_main > 0.0 && l.partition.c_main <= 1.0)) throw ConfigError("c_main", "must lie in (0,1]");
    if (j.contains("prescreen")) l.partition.prescreen = get<bool>(j, "prescreen");
    if (j.contains("zeta_offset")) l.scores.zeta_offset = get<double>(j, "zeta_offset");
    if (!(l.scores.zeta_offset > 0.0)) throw ConfigError("zeta_offset", "must be positive");
    if (j.contains("xi_grid")) l.scores.xi_grid = get<std::vector<double>>(j, "xi_grid");
    if (l.scores.xi_grid.empty()) throw ConfigError("xi_grid", "must not be empty");
    for (double xi : l.scores.xi_grid)
        if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigError("xi_grid", "values must lie in [0,1]");
    if (j.contains("use_prior")) l.scores.use_prior = get<bool>(j, "use_prior");
    glm::CvOptions& cv = l.scores.cv;
    if (j.contains("lambda_grid_size")) cv.grid_size = get<int>(j, "lambda_grid_size");
    if (cv.grid_size < 1) throw ConfigError("lambda_grid_size", "must be positive");
    if (j.contains("grid_ratio")) cv.grid_ratio = get<double>(j, "grid_ratio");
    if (!(cv.grid_ratio > 0.0 && cv.grid_ratio < 1.0)) throw ConfigError("grid_ratio", "must lie in (0,1)");
    if (j.contains("cv_folds")) cv.folds = get<int>(j, "cv_folds");
    if (cv.folds < 2) throw ConfigError("cv_folds", "must be at least 2");
    if (j.contains("solver_tol")) cv.solver.tol = get<double>(j, "solver_tol");
    if (!(cv.solver.tol > 0.0)) throw ConfigError("solver_tol", "must be positive");
    l.partition.cv = cv;
    if (j.contains("min_subgroup")) l.scores.min_subgroup = get<int>(j, "min_subgroup");
    if (l.scores.min_subgroup < 1) throw ConfigError("min_subgroup", "must be positive");
    if (j.contains("cloak_prob")) l.cloak_prob = get<double>(j, "cloak_prob");
    if (!(l.cloak_prob >= 0.0 && l.cloak_prob <= 1.0)) throw ConfigError("cloak_prob", "must lie in [0,1]");
    if (j.contains("score_path")) {
        const auto v = get<std::string>(j, "score_path");
        if (v == "local") l.path = ScorePath::Local;
        else if (v == "batch") l.path = ScorePath::Batch;
        else throw ConfigError("score_path", "must be local or batch");
    }
    if (j.contains("env_covariates")) l.env_covariates = one_based(j, "env_covariates");
    if (j.contains("binary_covariates")) l.binary_covariates = one_based(j, "binary_covariates");

    if (j.contains("pc")) {
        const auto& pc = j.at("pc");
        if (!pc.is_object()) throw ConfigError("pc", "must be an object");
        for (const auto& [k, _] : pc.items())
            if (k != "r_rule" && k != "c") throw ConfigError("pc." + k, "unknown field");
        if (pc.contains("r_rule")) {
            const auto& r = pc.at("r_rule");
            if (r.is_string() && r.get<std::string>() == "full") {
                s.pc.r_rule = PcConfig::RRule::Full;
            } else if (r.is_number_integer() && r.get<int>() >= 1) {
                s.pc.r_rule = PcConfig::RRule::Fixed;
                s.pc.r = r.get<int>();
            } else {
                throw ConfigError("pc.r_rule", "must be \"full\" or a positive integer");
            }
        }
        if (pc.contains("c")) {
            if (!pc.at("c").is_number()) throw ConfigError("pc.c", "wrong type");
            s.pc.seqstep_c = pc.at("c").get<double>();
        }
        if (!(s.pc.seqstep_c > 0.0 && s.pc.seqstep_c < 1.0)) throw ConfigError("pc.c", "must lie in (0,1)");
    }

    if (j.contains("n")) {
        const auto& n = j.at("n");
        if (n.is_number_integer()) s.n_values = {n.get<int>()};
        else s.n_values = get<std::vector<int>>(j, "n");
    } else if (s.scenario == Scenario::Transfer) {
        s.n_values = {2000};
    }
    if (s.n_values.empty()) throw ConfigError("n", "must list at least one sample size");
    for (int n : s.n_values)
        if (n < 20) throw ConfigError("n", "sample sizes must be at least 20");
    if (j.contains("replicates")) s.replicates = get<int>(j, "replicates");
    if (s.replicates < 1) throw ConfigError("replicates", "must be at least 1");
    if (j.contains("master_seed")) s.master_seed = get<std::uint64_t>(j, "master_seed");
    if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir");
    if (j.contains("threads")) s.threads = get<int>(j, "threads");
    if (s.threads < 1) throw ConfigError("threads", "must be at least 1");
    if (j.contains("homogeneity")) {
        const auto v = get<std::string>(j, "homogeneity");
        if (v == "all") s.homogeneity = HomogeneityMode::All;
        else if (v == "true_only") s.homogeneity = HomogeneityMode::TrueOnly;
        else throw ConfigError("homogeneity", "must be all or true_only");
    }
    if (j.contains("record_timing")) s.record_timing = get<bool>(j, "record_timing");
    if (j.contains("blocks")) {
        const auto& b = j.at("blocks");
        if (!b.is_object()) throw ConfigError("blocks", "must be an object");
        auto field = [&](const char* k, auto& target) {
            if (!b.contains(k)) return;
            try {
                target = b.at(k).get<std::decay_t<decltype(target)>>();
            } catch (const nlohmann::json::exception&) {
                throw ConfigError(std::string("blocks.") + k, "wrong type");
            }
        };
        for (const auto& [k, _] : b.items())
            if (k != "n_blocks" && k != "block_size" && k != "global_blocks" && k != "local_blocks" &&
                k != "amplitude" && k != "theta0" && k != "theta1")
                throw ConfigError("blocks." + k, "unknown field");
        field("n_blocks", s.blocks.n_blocks);
        field("block_size", s.blocks.block_size);
        field("global_blocks", s.blocks.global_blocks);
        field("local_blocks", s.blocks.local_blocks);
        field("amplitude", s.blocks.amplitude);
        field("theta0", s.blocks.theta0);
        field("theta1", s.blocks.theta1);
        if (s.blocks.n_blocks < 1 || s.blocks.block_size < 1) throw ConfigError("blocks", "layout must be nonempty");
        if (s.blocks.global_blocks < 0 || s.blocks.local_blocks < 0 ||
            s.blocks.global_blocks + s.blocks.local_blocks > s.blocks.n_blocks)
            throw ConfigError("blocks", "causal block counts out of range");
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

nlohmann::json to_json(const RunConfig& c) {
    const SimConfig& s = c.sim;
    const LkfConfig& l = s.lkf;
    nlohmann::json j;
    j["scenario"] = s.scenario == Scenario::Hetero ? "hetero" : s.scenario == Scenario::Transfer ? "transfer" : "blocks";
    j["alpha"] = s.alpha;
    j["methods"] = s.methods;
    j["g_max"] = l.partition.g_max;
    j["c_main"] = l.partition.c_main;
    j["prescreen"] = l.partition.prescreen;
    j["zeta_offset"] = l.scores.zeta_offset;
    j["xi_grid"] = l.scores.xi_grid;
    j["use_prior"] = l.scores.use_prior;
    j["lambda_grid_size"] = l.scores.cv.grid_size;
    j["grid_ratio"] = l.scores.cv.grid_ratio;
    j["cv_folds"] = l.scores.cv.folds;
    j["solver_tol"] = l.scores.cv.solver.tol;
    j["min_subgroup"] = l.scores.min_subgroup;
    j["cloak_prob"] = l.cloak_prob;
    j["score_path"] = l.path == ScorePath::Local ? "local" : "batch";
    std::vector<int> env;
    for (int e : l.env_covariates) env.push_back(e + 1);
    j["env_covariates"] = env;
    if (l.binary_covariates) {
        std::vector<int> b;
        for (int e : *l.binary_covariates) b.push_back(e + 1);
        j["binary_covariates"] = b;
    }
    j["pc"] = {{"c", s.pc.seqstep_c}};
    if (s.pc.r_rule == PcConfig::RRule::Full) j["pc"]["r_rule"] = "full";
    else j["pc"]["r_rule"] = s.pc.r;
    j["n"] = s.n_values;
    j["replicates"] = s.replicates;
    j["master_seed"] = s.master_seed;
    j["output_dir"] = c.output_dir;
    j["threads"] = s.threads;
    j["homogeneity"] = s.homogeneity == HomogeneityMode::All ? "all" : "true_only";
    j["record_timing"] = s.record_timing;
    j["blocks"] = {{"n_blocks", s.blocks.n_blocks},         {"block_size", s.blocks.block_size},
                   {"global_blocks", s.blocks.global_blocks}, {"local_blocks", s.blocks.local_blocks},
                   {"amplitude", s.blocks.amplitude},         {"theta0", s.blocks.theta0},
                   {"theta1", s.blocks.theta1}};
    return j;
}

}  // namespace lokf
