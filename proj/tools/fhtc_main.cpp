// Command-line front end: solve a stabilization problem and evaluate the
// resulting action-value / value stacks against Monte-Carlo references.

#include <CLI11.hpp>

#include "fhtc/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace fhtc;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream os;
    CsvWriter(const fs::path& path, const std::string& hash, std::uint64_t seed,
              const std::string& columns) {
        os.open(path);
        if (!os) throw std::runtime_error("cannot open output file " + path.string());
        os << "# config=" << hash << " seed=" << seed << "\n" << columns << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << "\n";
    }
};

Eigen::VectorXd named_point(const ControlProblem& p, const std::string& name) {
    if (name == "yplus") return Eigen::VectorXd::Ones(p.dim());
    if (name == "yminus") return -Eigen::VectorXd::Ones(p.dim());
    if (name == "origin") return Eigen::VectorXd::Zero(p.dim());
    throw std::invalid_argument("unknown point name '" + name + "' (yplus, yminus, origin)");
}

std::vector<std::pair<std::string, Eigen::VectorXd>> parse_points(const ControlProblem& p,
                                                                  const std::string& spec) {
    std::vector<std::pair<std::string, Eigen::VectorXd>> pts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) pts.emplace_back(tok, named_point(p, tok));
    }
    if (pts.empty()) throw std::invalid_argument("no evaluation points given");
    return pts;
}

// half uniform on the box, half on the diagonal segment I = {(t, ..., t)}
std::vector<std::pair<std::string, Eigen::VectorXd>> mixed_starts(const ControlProblem& p, int n,
                                                                  std::uint64_t seed) {
    std::vector<std::pair<std::string, Eigen::VectorXd>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng = rng_stream(seed, 777000 + i);
        std::uniform_real_distribution<double> ux(p.x_lo, p.x_hi);
        Eigen::VectorXd x(p.dim());
        if (i % 2 == 0) {
            for (int j = 0; j < p.dim(); ++j) x[j] = ux(rng);
            out.emplace_back("uniform", x);
        } else {
            double t = ux(rng);
            x.setConstant(t);
            out.emplace_back("segment", x);
        }
    }
    return out;
}

ExperimentConfig resolve_config(const std::string& preset, const std::string& config_file,
                                std::uint64_t seed_override, const std::string& out_override) {
    ExperimentConfig cfg;
    if (!config_file.empty())
        cfg = ExperimentConfig::from_file(config_file);
    else if (!preset.empty())
        cfg = ExperimentConfig::preset(preset);
    else
        throw std::invalid_argument("one of --preset or --config is required");
    if (seed_override != 0) cfg.problem.seed = seed_override;
    if (!out_override.empty()) cfg.output_dir = out_override;
    cfg.problem.validate();
    return cfg;
}

int cmd_solve(const ExperimentConfig& cfg) {
    SolveReport report;
    backward_solve(cfg.problem, cfg.output_dir, &report);
    std::cout << "solved " << cfg.problem.cost.steps_K << " steps in " << report.total_seconds
              << " s; stack written to " << cfg.output_dir << "\n";
    std::cout << "markov operator marginal mass: " << report.markov_mass << "\n";
    return 0;
}

int cmd_eval_q(const fs::path& stack_dir, int k, const std::string& points, int a_grid, int n_mc,
               std::uint64_t seed, const fs::path& out) {
    SolvedStack s = load_stack(stack_dir);
    const ControlProblem& p = s.problem;
    int K = p.cost.steps_K;
    if (k < 0) k = K - 1;
    if (k >= K) throw std::invalid_argument("eval-q: k out of range");
    ExperimentConfig cfg;
    cfg.problem = p;
    cfg.output_dir = stack_dir.string();

    ValueFn v_next;
    if (k == K - 1) {
        v_next = [&](const Eigen::VectorXd& x) { return terminal_cost(p.model, x); };
    } else {
        v_next = [&](const Eigen::VectorXd& x) { return s.value_k(x, k + 1); };
    }

    CsvWriter csv(out, config_hash(cfg), seed,
                  n_mc > 0 ? "x_id,a,q_fht,q_mc,mc_stderr,rel_err" : "x_id,a,q_fht");
    auto pts = parse_points(p, points);
    for (const auto& [name, x] : pts) {
        for (int ia = 0; ia < a_grid; ++ia) {
            double a = p.a_lo + (p.a_hi - p.a_lo) * ia / std::max(1, a_grid - 1);
            double qf = s.q_value(x, a, k);
            if (n_mc > 0) {
                McEstimate mc = mc_q_reference(p, v_next, x, a, n_mc,
                                               seed ^ (0x517cc1b7ULL * (ia + 1)));
                double rel = std::abs(qf - mc.mean) / std::max(1e-300, std::abs(mc.mean));
                csv.row({name, fmt(a), fmt(qf), fmt(mc.mean), fmt(mc.std_error), fmt(rel)});
            } else {
                csv.row({name, fmt(a), fmt(qf)});
            }
        }
    }
    return 0;
}

int cmd_eval_v(const fs::path& stack_dir, int k, int n_points, int n_mc, std::uint64_t seed,
               const fs::path& out) {
    SolvedStack s = load_stack(stack_dir);
    const ControlProblem& p = s.problem;
    int K = p.cost.steps_K;
    if (k < 0) k = K - 1;
    if (k >= K) throw std::invalid_argument("eval-v: k out of range");
    ExperimentConfig cfg;
    cfg.problem = p;
    cfg.output_dir = stack_dir.string();

    CsvWriter csv(out, config_hash(cfg), seed, "point_id,kind,v_fht,v_mc,mc_stderr");
    auto starts = mixed_starts(p, n_points, seed);
    for (int i = 0; i < static_cast<int>(starts.size()); ++i) {
        const auto& [kind, x] = starts[i];
        double vf = s.value_k(x, k);
        McEstimate mc = mc_value_reference(s, x, k, n_mc, seed ^ (0x2545f49ULL * (i + 1)));
        csv.row({std::to_string(i), kind, fmt(vf), fmt(mc.mean), fmt(mc.std_error)});
    }
    return 0;
}

int cmd_hist(const fs::path& stack_dir, int n, std::uint64_t seed, const fs::path& out) {
    SolvedStack s = load_stack(stack_dir);
    const ControlProblem& p = s.problem;
    ExperimentConfig cfg;
    cfg.problem = p;
    cfg.output_dir = stack_dir.string();

    CsvWriter csv(out, config_hash(cfg), seed,
                  "particle_id,start_kind,group,final_norm2_over_d,realized_cost");
    auto starts = mixed_starts(p, n, seed);
    std::vector<std::array<double, 4>> rows(starts.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < static_cast<int>(starts.size()); ++i) {
        std::mt19937_64 rng_p = rng_stream(seed, 2 * i);
        std::mt19937_64 rng_c = rng_stream(seed, 2 * i + 1);
        RolloutResult pol = rollout(s, starts[i].second, rng_p);
        RolloutResult ctl = rollout_uncontrolled(p, starts[i].second, rng_c);
        rows[i] = {pol.x_final.squaredNorm() / p.dim(), pol.realized_cost,
                   ctl.x_final.squaredNorm() / p.dim(), ctl.realized_cost};
    }
    for (int i = 0; i < static_cast<int>(starts.size()); ++i) {
        csv.row({std::to_string(i), starts[i].first, "policy", fmt(rows[i][0]), fmt(rows[i][1])});
        csv.row({std::to_string(i), starts[i].first, "control", fmt(rows[i][2]), fmt(rows[i][3])});
    }
    return 0;
}

int cmd_mc_ref(const ExperimentConfig& cfg, const std::string& points, int a_grid, int n_mc,
               std::uint64_t seed, const fs::path& out) {
    const ControlProblem& p = cfg.problem;
    ValueFn terminal = [&](const Eigen::VectorXd& x) { return terminal_cost(p.model, x); };
    CsvWriter csv(out, config_hash(cfg), seed, "x_id,a,q_mc,mc_stderr");
    for (const auto& [name, x] : parse_points(p, points)) {
        for (int ia = 0; ia < a_grid; ++ia) {
            double a = p.a_lo + (p.a_hi - p.a_lo) * ia / std::max(1, a_grid - 1);
            McEstimate mc =
                mc_q_reference(p, terminal, x, a, n_mc, seed ^ (0x517cc1b7ULL * (ia + 1)));
            csv.row({name, fmt(a), fmt(mc.mean), fmt(mc.std_error)});
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional hierarchical tensor solver for stochastic control"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (default: FHTC_THREADS or all)");

    std::string preset, config_file, out_dir;
    std::uint64_t seed = 0;

    auto* solve = app.add_subcommand("solve", "run the backward solver and persist the stack");
    solve->add_option("--preset", preset, "gl1d-desk | gl1d-paper | gl2d-desk | gl2d-paper");
    solve->add_option("--config", config_file, "JSON configuration file");
    solve->add_option("--out", out_dir, "output directory override");
    solve->add_option("--seed", seed, "seed override");

    std::string stack_dir, points = "yplus,yminus", csv_out = "out.csv";
    int k = -1, a_grid = 21, n_mc = 10000, n_points = 60, n_particles = 1000;
    std::uint64_t eval_seed = 17;

    auto* evq = app.add_subcommand("eval-q", "action-value slices vs Monte-Carlo reference");
    evq->add_option("--stack", stack_dir, "solved stack directory")->required();
    evq->add_option("--k", k, "time step (default K-1)");
    evq->add_option("--points", points, "comma list: yplus,yminus,origin");
    evq->add_option("--a-grid", a_grid, "action grid size");
    evq->add_option("--n-mc", n_mc, "Monte-Carlo paths per point (0: no reference)");
    evq->add_option("--seed", eval_seed, "evaluation seed");
    evq->add_option("--out", csv_out, "output CSV path");

    auto* evv = app.add_subcommand("eval-v", "value function vs policy-rollout reference");
    evv->add_option("--stack", stack_dir, "solved stack directory")->required();
    evv->add_option("--k", k, "time step (default K-1)");
    evv->add_option("--n-points", n_points, "validation points (half uniform, half segment)");
    evv->add_option("--n-mc", n_mc, "rollouts per point")->default_val(100);
    evv->add_option("--seed", eval_seed, "evaluation seed");
    evv->add_option("--out", csv_out, "output CSV path");

    auto* hist = app.add_subcommand("hist", "terminal-distance histogram, policy vs control-free");
    hist->add_option("--stack", stack_dir, "solved stack directory")->required();
    hist->add_option("--n", n_particles, "number of particles");
    hist->add_option("--seed", eval_seed, "evaluation seed");
    hist->add_option("--out", csv_out, "output CSV path");

    auto* mcref = app.add_subcommand("mc-ref", "standalone Monte-Carlo Q reference at k = K-1");
    mcref->add_option("--preset", preset, "problem preset");
    mcref->add_option("--config", config_file, "JSON configuration file");
    mcref->add_option("--points", points, "comma list: yplus,yminus,origin");
    mcref->add_option("--a-grid", a_grid, "action grid size");
    mcref->add_option("--n-mc", n_mc, "Monte-Carlo paths per point");
    mcref->add_option("--seed", eval_seed, "evaluation seed");
    mcref->add_option("--out", csv_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        apply_thread_count(threads);
        if (solve->parsed()) {
            return cmd_solve(resolve_config(preset, config_file, seed, out_dir));
        } else if (evq->parsed()) {
            return cmd_eval_q(stack_dir, k, points, a_grid, n_mc, eval_seed, csv_out);
        } else if (evv->parsed()) {
            return cmd_eval_v(stack_dir, k, n_points, n_mc, eval_seed, csv_out);
        } else if (hist->parsed()) {
            return cmd_hist(stack_dir, n_particles, eval_seed, csv_out);
        } else if (mcref->parsed()) {
            return cmd_mc_ref(resolve_config(preset, config_file, 0, ""), points, a_grid, n_mc,
                              eval_seed, csv_out);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
