#include "fhtc/workflow.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fhtc {

namespace {

int int_log2(int v) {
    int l = 0;
    while ((1 << l) < v) ++l;
    return l;
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

DyadicTree ControlProblem::q_tree() const {
    return DyadicTree::build(dim(), rank_q, degree + 1, action_degree + 1);
}

DyadicTree ControlProblem::v_tree() const {
    return DyadicTree::build(dim(), rank_v, degree + 1);
}

DyadicTree ControlProblem::p_tree() const {
    return DyadicTree::build(2 * dim(), rank_p, degree + 1, action_degree + 1);
}

VariableLayout ControlProblem::layout() const {
    int delta = model.variant == GLVariant::chain_1d ? 1 : 2;
    return VariableLayout(delta, int_log2(model.m));
}

void ControlProblem::validate() const {
    std::vector<std::string> errs;
    if (!is_power_of_two(model.m))
        errs.push_back("model.m must be a power of two (got " + std::to_string(model.m) + ")");
    int want_d = model.variant == GLVariant::chain_1d ? model.m : model.m * model.m;
    if (model.d != want_d) errs.push_back("model.d must equal m (1D) or m^2 (2D)");
    if (model.omega.size() != model.d) errs.push_back("omega length must equal d");
    if (model.beta <= 0) errs.push_back("beta must be positive");
    if (!(x_lo < x_hi)) errs.push_back("state box requires x_lo < x_hi");
    if (!(a_lo < a_hi)) errs.push_back("action interval requires a_lo < a_hi");
    if (cost.steps_K < 1) errs.push_back("K must be at least 1");
    if (cost.horizon_T <= 0) errs.push_back("T must be positive");
    if (degree < 2) errs.push_back("state degree must be at least 2 (quadratic costs)");
    if (action_degree < 2) errs.push_back("action degree must be at least 2");
    if (n_regression < 2 || n_regression % 2 != 0)
        errs.push_back("n_regression must be even and positive");
    if (n_operator < 1) errs.push_back("n_operator must be positive");
    if (reg_mu < 0) errs.push_back("reg_mu must be nonnegative");
    if (als_rounds < 0) errs.push_back("als_rounds must be nonnegative");
    if (rank_q < 1 || rank_v < 1 || rank_p < 1) errs.push_back("ranks must be positive");
    if (sketch_margin < 1) errs.push_back("sketch_margin must be at least 1");
    if (substeps < 1) errs.push_back("substeps must be at least 1");
    if (!errs.empty()) {
        std::string all = "invalid problem configuration:";
        for (const std::string& e : errs) all += "\n  - " + e;
        throw std::invalid_argument(all);
    }
}

Eigen::VectorXd to_leaf_order(const VariableLayout& lay, const Eigen::VectorXd& x_site) {
    Eigen::VectorXd out(x_site.size());
    for (int g = 0; g < x_site.size(); ++g) out[lay.to_leaf(g)] = x_site[g];
    return out;
}

Eigen::VectorXd to_site_order(const VariableLayout& lay, const Eigen::VectorXd& x_leaf) {
    Eigen::VectorXd out(x_leaf.size());
    for (int g = 0; g < x_leaf.size(); ++g) out[g] = x_leaf[lay.to_leaf(g)];
    return out;
}

SampleSet gen_samples(const ControlProblem& p, int k, std::uint64_t seed) {
    int N = p.n_regression;
    int d = p.dim();
    SampleSet s;
    s.X.resize(N, d);
    s.A.resize(N);
    s.Xn.resize(N, d);
    s.R.resize(N);
    double dt = p.dt();

#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < N; ++i) {
        std::mt19937_64 rng = rng_stream(seed, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> ux(p.x_lo, p.x_hi), ua(p.a_lo, p.a_hi);
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = ux(rng);
        if (i % 2 == 1) {
            // control-free trajectory branch
            std::uniform_int_distribution<int> steps(0, k);
            int blocks = steps(rng);
            for (int b = 0; b < blocks; ++b)
                x = simulate(p.model, p.cost, x, 0.0, dt, p.substeps, rng).x_next;
        }
        double a = ua(rng);
        StepResult r = simulate(p.model, p.cost, x, a, dt, p.substeps, rng);
        s.X.row(i) = x.transpose();
        s.A[i] = a;
        s.Xn.row(i) = r.x_next.transpose();
        s.R[i] = r.cost;
    }
    return s;
}

double argmin_action(const Fht& Q, const Eigen::VectorXd& x_leaf, double* q_min, int grid) {
    Eigen::VectorXd c = Q.action_profile(
        std::span<const double>(x_leaf.data(), static_cast<size_t>(x_leaf.size())));
    const BasisSet& ab = Q.root_basis;
    auto qval = [&](double a) { return c.dot(ab.eval(a)); };
    auto qder = [&](double a) { return c.dot(ab.eval_deriv(a)); };

    double lo = ab.lo(), hi = ab.hi();
    double best_a = lo, best_q = qval(lo);
    double qhi = qval(hi);
    if (qhi < best_q) {
        best_q = qhi;
        best_a = hi;
    }
    double grid_a = best_a, grid_q = best_q;
    for (int i = 1; i + 1 < grid; ++i) {
        double a = lo + (hi - lo) * i / (grid - 1);
        double q = qval(a);
        if (q < grid_q) {
            grid_q = q;
            grid_a = a;
        }
    }
    // Newton polish from the best interior grid point
    if (grid_a > lo && grid_a < hi) {
        double a = grid_a;
        for (int it = 0; it < 4; ++it) {
            double g = qder(a);
            double eps = 1e-6 * (hi - lo);
            double gg = (qder(a + eps) - qder(a - eps)) / (2 * eps);
            if (!(gg > 0)) break;
            double an = a - g / gg;
            if (an <= lo || an >= hi) break;
            if (std::abs(an - a) < 1e-12) {
                a = an;
                break;
            }
            a = an;
        }
        double q = qval(a);
        if (q < grid_q) {
            grid_q = q;
            grid_a = a;
        }
    }
    if (grid_q < best_q) {
        best_q = grid_q;
        best_a = grid_a;
    }
    if (q_min) *q_min = best_q;
    return best_a;
}

Fht terminal_value_fht(const ControlProblem& p) {
    BasisSet sb = p.state_basis();
    int d = p.dim();
    std::vector<Eigen::VectorXd> cs(
        d, sb.project([&](double x) { return x * x / static_cast<double>(d); }));
    return sum_of_univariate(p.v_tree(), sb, cs);
}

Fht running_cost_fht(const ControlProblem& p) {
    BasisSet sb = p.state_basis();
    BasisSet ab = p.action_basis();
    int d = p.dim();
    std::vector<Eigen::VectorXd> cs(
        d, sb.project([&](double x) { return x * x / static_cast<double>(d); }));
    Eigen::VectorXd ca = ab.project([](double a) { return a * a; });
    return sum_of_univariate(p.q_tree(), sb, cs, &ab, &ca);
}

TerminalInit init_terminal(const ControlProblem& p) {
    int d = p.dim();
    double dt = p.dt();

    // operator samples: (x, a) uniform, one block of dynamics
    Eigen::MatrixXd z(p.n_operator, 2 * d + 1);
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < p.n_operator; ++i) {
        std::mt19937_64 rng = rng_stream(p.seed ^ 0xa5a5a5a5ULL, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> ux(p.x_lo, p.x_hi), ua(p.a_lo, p.a_hi);
        Eigen::VectorXd x(d);
        for (int j = 0; j < d; ++j) x[j] = ux(rng);
        double a = ua(rng);
        StepResult r = simulate(p.model, p.cost, x, a, dt, p.substeps, rng);
        Eigen::VectorXd x_leaf = to_leaf_order(p.layout(), x);
        Eigen::VectorXd xn_leaf = to_leaf_order(p.layout(), r.x_next);
        for (int j = 0; j < d; ++j) {
            z(i, 2 * j) = x_leaf[j];
            z(i, 2 * j + 1) = xn_leaf[j];
        }
        z(i, 2 * d) = a;
    }

    TerminalInit out;
    OperatorSketchOptions opt;
    opt.margin = p.sketch_margin;
    opt.seed = p.seed ^ 0x51ed1ULL;
    out.P = estimate_operator(z, p.p_tree(), p.state_basis(), p.action_basis(), opt);
    out.markov_mass = marginal_mass(out.P);

    Fht v_K = terminal_value_fht(p);
    Fht f_term = running_cost_fht(p);
    out.q_raw = apply_markov(out.P, v_K, f_term, dt);
    out.q_init = out.q_raw;
    round_fht(out.q_init, 1e-10, p.rank_q);

    // value initialization by black-box interpolation of the action minimum;
    // the target is only approximately low-rank, so oversample well beyond
    // the exact-recovery margin
    DyadicTree vt = p.v_tree();
    int vmargin = p.v_init_margin > 0 ? p.v_init_margin : std::max(p.sketch_margin, p.rank_v);
    SketchPlan plan = SketchPlan::make(vt, p.state_basis(), vmargin, p.seed ^ 0x7a11ULL);
    out.v_init = interpolate(
        [&](const Eigen::VectorXd& x_leaf) {
            double qm;
            argmin_action(out.q_init, x_leaf, &qm);
            return qm;
        },
        vt, p.state_basis(), plan);
    return out;
}

namespace {

RegressionSet q_regression(const ControlProblem& p, const ValueFn& v_next, const SampleSet& s) {
    int N = static_cast<int>(s.X.rows());
    int d = p.dim();
    VariableLayout lay = p.layout();
    RegressionSet r;
    r.X.resize(N, d + 1);
    r.y.resize(N);
    for (int i = 0; i < N; ++i) {
        r.X.row(i).head(d) = to_leaf_order(lay, s.X.row(i).transpose()).transpose();
        r.X(i, d) = s.A[i];
        r.y[i] = s.R[i] + v_next(s.Xn.row(i).transpose());
    }
    return r;
}

}  // namespace

Fht fit_q(const ControlProblem& p, const ValueFn& v_next, const Fht& init, const SampleSet& s,
          AlsResult* report) {
    Fht q = init;
    AlsWorkspace ws = AlsWorkspace::make(q, q_regression(p, v_next, s));
    AlsResult res = sweep(q, ws, p.reg_mu, p.als_rounds);
    if (report) *report = res;
    return q;
}

Fht fit_v(const ControlProblem& p, const Fht& q_k, const Fht& init, const SampleSet& s,
          AlsResult* report) {
    int N = static_cast<int>(s.X.rows());
    int d = p.dim();
    VariableLayout lay = p.layout();
    RegressionSet r;
    r.X.resize(N, d);
    r.y.resize(N);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd x_leaf = to_leaf_order(lay, s.X.row(i).transpose());
        r.X.row(i) = x_leaf.transpose();
        double qm;
        argmin_action(q_k, x_leaf, &qm);
        r.y[i] = qm;
    }
    Fht v = init;
    AlsWorkspace ws = AlsWorkspace::make(v, r);
    AlsResult res = sweep(v, ws, p.reg_mu, p.als_rounds);
    if (report) *report = res;
    return v;
}

double SolvedStack::value_k(const Eigen::VectorXd& x_site, int k) const {
    if (k == problem.cost.steps_K) return terminal_cost(problem.model, x_site);
    Eigen::VectorXd x_leaf = to_leaf_order(problem.layout(), x_site);
    return v[k].evaluate(x_leaf);
}

double SolvedStack::value_at(const Eigen::VectorXd& x_site, double t) const {
    double T = problem.cost.horizon_T;
    if (t < 0.0 || t > T) throw std::invalid_argument("value_at: t outside [0, T]");
    int K = problem.cost.steps_K;
    double dt = problem.dt();
    int k = std::min(static_cast<int>(t / dt), K - 1);
    double w = (t - k * dt) / dt;
    if (w == 0.0) return value_k(x_site, k);
    return (1.0 - w) * value_k(x_site, k) + w * value_k(x_site, k + 1);
}

double SolvedStack::q_value(const Eigen::VectorXd& x_site, double a, int k) const {
    Eigen::VectorXd x_leaf = to_leaf_order(problem.layout(), x_site);
    Eigen::VectorXd pt(x_leaf.size() + 1);
    pt.head(x_leaf.size()) = x_leaf;
    pt[x_leaf.size()] = a;
    return Q[k].evaluate(pt);
}

double SolvedStack::policy_action(const Eigen::VectorXd& x_site, int k) const {
    return argmin_action(Q[k], to_leaf_order(problem.layout(), x_site));
}

SolvedStack backward_solve(const ControlProblem& p, const std::filesystem::path& out_dir,
                           SolveReport* report) {
    namespace fs = std::filesystem;
    p.validate();
    fs::create_directories(out_dir);
    auto t_start = std::chrono::steady_clock::now();

    int K = p.cost.steps_K;
    SolvedStack stack;
    stack.problem = p;
    stack.Q.resize(K);
    stack.v.resize(K);
    SolveReport rep;

    ValueFn terminal = [&](const Eigen::VectorXd& x_site) {
        return terminal_cost(p.model, x_site);
    };

    auto write_trace = [&](const fs::path& file, const AlsResult& res) {
        std::ofstream os(file);
        os << "round,node,data_term,reg_term\n";
        char buf[128];
        for (const AlsTraceRow& row : res.trace) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", row.round, row.node,
                          row.data_term, row.reg_term);
            os << buf;
        }
    };

    for (int k = K - 1; k >= 0; --k) {
        auto t0 = std::chrono::steady_clock::now();
        StageInfo stage;
        stage.k = k;
        SampleSet samples = gen_samples(p, k, p.seed + 1000 + k);

        Fht q_init, v_init;
        if (k == K - 1) {
            TerminalInit ti = init_terminal(p);
            rep.markov_mass = ti.markov_mass;
            q_init = std::move(ti.q_init);
            v_init = std::move(ti.v_init);
        } else {
            q_init = stack.Q[k + 1];
            v_init = stack.v[k + 1];
        }

        ValueFn v_next;
        if (k == K - 1) {
            v_next = terminal;
        } else {
            const Fht& vk1 = stack.v[k + 1];
            VariableLayout lay = p.layout();
            v_next = [&vk1, lay](const Eigen::VectorXd& x_site) {
                return vk1.evaluate(to_leaf_order(lay, x_site));
            };
        }

        stack.Q[k] = fit_q(p, v_next, q_init, samples, &stage.q_fit);
        stack.v[k] = fit_v(p, stack.Q[k], v_init, samples, &stage.v_fit);

        save_fht(stack.Q[k], out_dir / ("qk_" + std::to_string(k) + ".fht"));
        save_fht(stack.v[k], out_dir / ("vk_" + std::to_string(k) + ".fht"));
        write_trace(out_dir / ("trace_q_" + std::to_string(k) + ".csv"), stage.q_fit);
        write_trace(out_dir / ("trace_v_" + std::to_string(k) + ".csv"), stage.v_fit);

        stage.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.stages.push_back(stage);
        std::cerr << "[fhtc] stage k=" << k << " done in " << stage.seconds << " s (q loss "
                  << stage.q_fit.final_loss << ", v loss " << stage.v_fit.final_loss << ")\n";
    }

    rep.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    nlohmann::json meta;
    meta["problem"] = nlohmann::json::parse(problem_to_json(p));
    meta["markov_mass"] = rep.markov_mass;
    meta["total_seconds"] = rep.total_seconds;
    nlohmann::json stages = nlohmann::json::array();
    for (const StageInfo& st : rep.stages) {
        nlohmann::json s;
        s["k"] = st.k;
        s["seconds"] = st.seconds;
        s["q_initial_loss"] = st.q_fit.initial_loss;
        s["q_final_loss"] = st.q_fit.final_loss;
        s["v_initial_loss"] = st.v_fit.initial_loss;
        s["v_final_loss"] = st.v_fit.final_loss;
        stages.push_back(s);
    }
    meta["stages"] = stages;
    std::ofstream ms(out_dir / "meta.json");
    ms << meta.dump(2) << "\n";

    if (report) *report = rep;
    return stack;
}

void save_stack(const SolvedStack& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (int k = 0; k < s.problem.cost.steps_K; ++k) {
        save_fht(s.Q[k], dir / ("qk_" + std::to_string(k) + ".fht"));
        save_fht(s.v[k], dir / ("vk_" + std::to_string(k) + ".fht"));
    }
    nlohmann::json meta;
    meta["problem"] = nlohmann::json::parse(problem_to_json(s.problem));
    std::ofstream ms(dir / "meta.json");
    ms << meta.dump(2) << "\n";
}

SolvedStack load_stack(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "meta.json");
    if (!ms) throw std::runtime_error("load_stack: missing meta.json in " + dir.string());
    nlohmann::json meta;
    ms >> meta;
    SolvedStack s;
    s.problem = problem_from_json(meta.at("problem").dump());
    int K = s.problem.cost.steps_K;
    s.Q.resize(K);
    s.v.resize(K);
    for (int k = 0; k < K; ++k) {
        s.Q[k] = load_fht(dir / ("qk_" + std::to_string(k) + ".fht"));
        s.v[k] = load_fht(dir / ("vk_" + std::to_string(k) + ".fht"));
    }
    return s;
}

RolloutResult rollout(const SolvedStack& s, const Eigen::VectorXd& x0_site, std::mt19937_64& rng,
                      int start_k) {
    const ControlProblem& p = s.problem;
    int K = p.cost.steps_K;
    RolloutResult out;
    out.actions.resize(K - start_k);
    Eigen::VectorXd x = x0_site;
    double cost = 0.0;
    for (int k = start_k; k < K; ++k) {
        double a = s.policy_action(x, k);
        StepResult r = simulate(p.model, p.cost, x, a, p.dt(), p.substeps, rng);
        cost += r.cost;
        x = r.x_next;
        out.actions[k - start_k] = a;
    }
    out.realized_cost = cost + terminal_cost(p.model, x);
    out.x_final = x;
    return out;
}

RolloutResult rollout_uncontrolled(const ControlProblem& p, const Eigen::VectorXd& x0_site,
                                   std::mt19937_64& rng, int start_k) {
    int K = p.cost.steps_K;
    RolloutResult out;
    out.actions = Eigen::VectorXd::Zero(K - start_k);
    Eigen::VectorXd x = x0_site;
    double cost = 0.0;
    for (int k = start_k; k < K; ++k) {
        StepResult r = simulate(p.model, p.cost, x, 0.0, p.dt(), p.substeps, rng);
        cost += r.cost;
        x = r.x_next;
    }
    out.realized_cost = cost + terminal_cost(p.model, x);
    out.x_final = x;
    return out;
}

McEstimate mc_q_reference(const ControlProblem& p, const ValueFn& v_next,
                          const Eigen::VectorXd& x_site, double a, int n_paths,
                          std::uint64_t seed) {
    std::vector<double> vals(n_paths);
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < n_paths; ++i) {
        std::mt19937_64 rng = rng_stream(seed, static_cast<std::uint64_t>(i));
        StepResult r = simulate(p.model, p.cost, x_site, a, p.dt(), p.substeps, rng);
        vals[i] = r.cost + v_next(r.x_next);
    }
    McEstimate e;
    double s = 0, s2 = 0;
    for (double v : vals) {
        s += v;
        s2 += v * v;
    }
    e.mean = s / n_paths;
    e.std_error = std::sqrt(std::max(0.0, s2 / n_paths - e.mean * e.mean) / n_paths);
    return e;
}

McEstimate mc_value_reference(const SolvedStack& s, const Eigen::VectorXd& x_site, int k,
                              int n_rollouts, std::uint64_t seed) {
    std::vector<double> vals(n_rollouts);
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < n_rollouts; ++i) {
        std::mt19937_64 rng = rng_stream(seed, static_cast<std::uint64_t>(i));
        vals[i] = rollout(s, x_site, rng, k).realized_cost;
    }
    McEstimate e;
    double sum = 0, s2 = 0;
    for (double v : vals) {
        sum += v;
        s2 += v * v;
    }
    e.mean = sum / n_rollouts;
    e.std_error = std::sqrt(std::max(0.0, s2 / n_rollouts - e.mean * e.mean) / n_rollouts);
    return e;
}

std::string problem_to_json(const ControlProblem& p) {
    nlohmann::json j;
    j["model"]["variant"] = p.model.variant == GLVariant::chain_1d ? "gl1d" : "gl2d";
    j["model"]["m"] = p.model.m;
    j["model"]["lambda"] = p.model.lambda;
    j["model"]["mu_gl"] = p.model.mu_gl;
    j["model"]["beta"] = p.model.beta;
    j["model"]["control_gain"] = p.model.control_gain;
    j["horizon"]["K"] = p.cost.steps_K;
    j["horizon"]["T"] = p.cost.horizon_T;
    j["domain"]["x_lo"] = p.x_lo;
    j["domain"]["x_hi"] = p.x_hi;
    j["domain"]["a_lo"] = p.a_lo;
    j["domain"]["a_hi"] = p.a_hi;
    j["basis"]["degree"] = p.degree;
    j["basis"]["action_degree"] = p.action_degree;
    j["samples"]["n_regression"] = p.n_regression;
    j["samples"]["n_operator"] = p.n_operator;
    j["solver"]["reg_mu"] = p.reg_mu;
    j["solver"]["als_rounds"] = p.als_rounds;
    j["solver"]["rank_q"] = p.rank_q;
    j["solver"]["rank_v"] = p.rank_v;
    j["solver"]["rank_p"] = p.rank_p;
    j["solver"]["sketch_margin"] = p.sketch_margin;
    j["solver"]["v_init_margin"] = p.v_init_margin;
    j["solver"]["substeps"] = p.substeps;
    j["seed"] = p.seed;
    return j.dump(2);
}

ControlProblem problem_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ControlProblem p;
    std::string variant = j.at("model").at("variant").get<std::string>();
    int m = j.at("model").at("m").get<int>();
    double lambda = j.at("model").value("lambda", 0.2);
    double mu_gl = j.at("model").value("mu_gl", 1.0);
    double beta = j.at("model").value("beta", 1.0);
    double gain = j.at("model").value("control_gain", 20.0);
    if (variant == "gl1d")
        p.model = GLModel::chain(m, lambda, mu_gl, beta, gain);
    else if (variant == "gl2d")
        p.model = GLModel::grid(m, lambda, mu_gl, beta, gain);
    else
        throw std::invalid_argument("problem_from_json: unknown variant " + variant);
    p.cost.steps_K = j.at("horizon").at("K").get<int>();
    p.cost.horizon_T = j.at("horizon").at("T").get<double>();
    if (j.contains("domain")) {
        p.x_lo = j["domain"].value("x_lo", -2.0);
        p.x_hi = j["domain"].value("x_hi", 2.0);
        p.a_lo = j["domain"].value("a_lo", -1.0);
        p.a_hi = j["domain"].value("a_hi", 1.0);
    }
    if (j.contains("basis")) {
        p.degree = j["basis"].value("degree", 6);
        p.action_degree = j["basis"].value("action_degree", p.degree);
    }
    if (j.contains("samples")) {
        p.n_regression = j["samples"].value("n_regression", 20000);
        p.n_operator = j["samples"].value("n_operator", 100000);
    }
    if (j.contains("solver")) {
        p.reg_mu = j["solver"].value("reg_mu", 1e-5);
        p.als_rounds = j["solver"].value("als_rounds", 5);
        p.rank_q = j["solver"].value("rank_q", 8);
        p.rank_v = j["solver"].value("rank_v", 8);
        p.rank_p = j["solver"].value("rank_p", 8);
        p.sketch_margin = j["solver"].value("sketch_margin", 2);
        p.v_init_margin = j["solver"].value("v_init_margin", 0);
        p.substeps = j["solver"].value("substeps", 20);
    }
    p.seed = j.value("seed", 1234);
    return p;
}

}  // namespace fhtc
