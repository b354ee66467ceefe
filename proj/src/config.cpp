#include "fhtc/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <Eigen/Core>

namespace fhtc {

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
    ExperimentConfig cfg;
    ControlProblem& p = cfg.problem;
    if (name == "gl1d-desk") {
        p.model = GLModel::chain(16, 0.2, 1.0, 1.0, 20.0);
        p.n_regression = 20000;
        p.n_operator = 100000;
        p.rank_q = p.rank_v = p.rank_p = 8;
    } else if (name == "gl1d-paper") {
        p.model = GLModel::chain(64, 0.2, 1.0, 1.0, 20.0);
        p.n_regression = 100000;
        p.n_operator = 200000;
        p.rank_q = p.rank_v = p.rank_p = 10;
    } else if (name == "gl2d-desk") {
        p.model = GLModel::grid(4, 0.5, 1.0, 1.0, 20.0);
        p.n_regression = 20000;
        p.n_operator = 100000;
        p.rank_q = p.rank_v = p.rank_p = 8;
    } else if (name == "gl2d-paper") {
        p.model = GLModel::grid(8, 0.5, 1.0, 1.0, 20.0);
        p.n_regression = 100000;
        p.n_operator = 200000;
        p.rank_q = p.rank_v = p.rank_p = 10;
    } else {
        throw std::invalid_argument("unknown preset '" + name +
                                    "' (expected gl1d-desk, gl1d-paper, gl2d-desk, gl2d-paper)");
    }
    p.cost.steps_K = 10;
    p.cost.horizon_T = 1.0;
    p.degree = 6;
    p.action_degree = 6;
    p.reg_mu = 1e-5;
    p.als_rounds = 5;
    p.sketch_margin = 2;
    p.substeps = 20;
    p.seed = 1234;
    cfg.output_dir = name + "-out";
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw std::invalid_argument("cannot open config file " + file.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config parse error in " + file.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    if (j.contains("preset")) cfg = preset(j["preset"].get<std::string>());
    nlohmann::json merged = nlohmann::json::parse(problem_to_json(cfg.problem));
    merged.merge_patch(j);
    merged.erase("preset");
    merged.erase("output_dir");
    cfg.problem = problem_from_json(merged.dump());
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    return cfg;
}

std::string ExperimentConfig::to_json() const {
    nlohmann::json j = nlohmann::json::parse(problem_to_json(problem));
    j["output_dir"] = output_dir;
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::string text = cfg.to_json();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int env_thread_default() {
    const char* env = std::getenv("FHTC_THREADS");
    if (!env) return 0;
    int v = std::atoi(env);
    return v > 0 ? v : 0;
}

void apply_thread_count(int threads) {
    if (threads <= 0) threads = env_thread_default();
    if (threads <= 0) return;
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
    Eigen::setNbThreads(threads);
}

}  // namespace fhtc
