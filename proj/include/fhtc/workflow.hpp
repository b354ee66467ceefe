#pragma once

#include <filesystem>
#include <functional>

#include "fhtc/als.hpp"
#include "fhtc/density_sketch.hpp"
#include "fhtc/gl_dynamics.hpp"
#include "fhtc/sketch_interp.hpp"

namespace fhtc {

// Backward time-stepping solver for the discretized HJB problem: at each
// grid time the action-value function is fit by Sobolev-regularized ALS on
// the Bellman consistency error, the value function by ALS on the action
// minimum. The terminal step is initialized through the sketched Markov
// operator; later steps warm-start from their successors.

struct ControlProblem {
    GLModel model;
    CostSpec cost;

    double x_lo = -2.0, x_hi = 2.0;
    double a_lo = -1.0, a_hi = 1.0;
    int degree = 6;         // per-variable polynomial degree q (n = q + 1)
    int action_degree = 6;

    int n_regression = 20000;
    int n_operator = 100000;
    double reg_mu = 1e-5;
    int als_rounds = 5;
    int rank_q = 8, rank_v = 8, rank_p = 8;
    int sketch_margin = 2;
    int v_init_margin = 0;  // 0: use max(sketch_margin, rank_v)
    int substeps = 20;
    std::uint64_t seed = 1234;

    int dim() const { return model.d; }
    double dt() const { return cost.dt(); }

    BasisSet state_basis() const { return legendre_basis(degree, x_lo, x_hi); }
    BasisSet action_basis() const { return legendre_basis(action_degree, a_lo, a_hi); }
    DyadicTree q_tree() const;
    DyadicTree v_tree() const;
    DyadicTree p_tree() const;
    VariableLayout layout() const;

    // Collects every violation; throws invalid_argument listing all of them.
    void validate() const;
};

// One-step transition samples, states in site order.
struct SampleSet {
    Eigen::MatrixXd X;   // N x d
    Eigen::VectorXd A;   // N
    Eigen::MatrixXd Xn;  // N x d
    Eigen::VectorXd R;   // N
};

// Half the states uniform on the box, half from control-free trajectories
// evolved a uniform number of blocks in 0..k; actions uniform on A; each
// pair evolved one block under its action.
SampleSet gen_samples(const ControlProblem& p, int k, std::uint64_t seed);

Eigen::VectorXd to_leaf_order(const VariableLayout& lay, const Eigen::VectorXd& x_site);
Eigen::VectorXd to_site_order(const VariableLayout& lay, const Eigen::VectorXd& x_leaf);

// Global minimum of the polynomial a -> Q(x, a) over [a_lo, a_hi]: dense
// grid, Newton polish on interior minima, endpoint comparison.
double argmin_action(const Fht& Q, const Eigen::VectorXd& x_leaf, double* q_min = nullptr,
                     int grid = 101);

using ValueFn = std::function<double(const Eigen::VectorXd&)>;  // site-order input

struct TerminalInit {
    Fht P;        // Markov operator
    Fht q_raw;    // apply_markov output before the rank cap
    Fht q_init;   // rounded to the ALS rank schedule
    Fht v_init;   // sketch-interpolated action minimum
    double markov_mass = 0.0;
};

TerminalInit init_terminal(const ControlProblem& p);

// Builds h (terminal cost) and the running-cost term as exact low-rank FHTs.
Fht terminal_value_fht(const ControlProblem& p);
Fht running_cost_fht(const ControlProblem& p);

Fht fit_q(const ControlProblem& p, const ValueFn& v_next, const Fht& init, const SampleSet& s,
          AlsResult* report = nullptr);
Fht fit_v(const ControlProblem& p, const Fht& q_k, const Fht& init, const SampleSet& s,
          AlsResult* report = nullptr);

struct SolvedStack {
    ControlProblem problem;
    std::vector<Fht> Q;  // k = 0..K-1
    std::vector<Fht> v;

    // Linear interpolation between grid values; v_K is the analytic
    // terminal cost. Throws outside [0, T].
    double value_at(const Eigen::VectorXd& x_site, double t) const;
    // FHT value at grid step k; k = K uses the analytic terminal cost.
    double value_k(const Eigen::VectorXd& x_site, int k) const;
    double q_value(const Eigen::VectorXd& x_site, double a, int k) const;
    double policy_action(const Eigen::VectorXd& x_site, int k) const;
};

struct StageInfo {
    int k = 0;
    AlsResult q_fit, v_fit;
    double seconds = 0.0;
};

struct SolveReport {
    std::vector<StageInfo> stages;
    double markov_mass = 0.0;
    double total_seconds = 0.0;
};

// Full backward pass. Every (Q_k, v_k) pair and the loss traces are written
// to out_dir as soon as a stage completes; meta.json captures the problem,
// seeds, and timings.
SolvedStack backward_solve(const ControlProblem& p, const std::filesystem::path& out_dir,
                           SolveReport* report = nullptr);

void save_stack(const SolvedStack& s, const std::filesystem::path& dir);
SolvedStack load_stack(const std::filesystem::path& dir);

struct RolloutResult {
    Eigen::VectorXd x_final;       // site order
    double realized_cost = 0.0;    // running + terminal
    Eigen::VectorXd actions;
};

RolloutResult rollout(const SolvedStack& s, const Eigen::VectorXd& x0_site, std::mt19937_64& rng,
                      int start_k = 0);
// Control-free (a = 0) reference rollout with the same interface.
RolloutResult rollout_uncontrolled(const ControlProblem& p, const Eigen::VectorXd& x0_site,
                                   std::mt19937_64& rng, int start_k = 0);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo Q reference at step k: mean over paths of r + v_next(x').
McEstimate mc_q_reference(const ControlProblem& p, const ValueFn& v_next,
                          const Eigen::VectorXd& x_site, double a, int n_paths,
                          std::uint64_t seed);
// Monte-Carlo value reference: mean realized cost of policy rollouts from
// step k.
McEstimate mc_value_reference(const SolvedStack& s, const Eigen::VectorXd& x_site, int k,
                              int n_rollouts, std::uint64_t seed);

// JSON round-trip for problems (used by meta.json and the CLI config).
std::string problem_to_json(const ControlProblem& p);
ControlProblem problem_from_json(const std::string& text);

}  // namespace fhtc
