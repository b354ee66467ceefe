#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fhtc {

// Discretized Ginzburg-Landau energies on a 1D chain (Dirichlet boundary)
// or a 2D grid (interior adjacency), with controlled overdamped Langevin
// dynamics  dX = (-grad V(X) + gain * a * omega) dt + sqrt(2/beta) dB.

enum class GLVariant { chain_1d, grid_2d };

// Test overrides for the drift/noise terms.
enum class PotentialKind { ginzburg_landau, quadratic, none };

struct GLModel {
    GLVariant variant = GLVariant::chain_1d;
    int m = 64;          // sites per side
    int d = 64;          // m (1D) or m^2 (2D)
    double lambda = 0.2;
    double mu_gl = 1.0;
    double beta = 1.0;
    double control_gain = 20.0;
    Eigen::VectorXd omega;  // site order; entries in {0, 1}

    PotentialKind potential_kind = PotentialKind::ginzburg_landau;
    bool noise = true;

    double h() const { return 1.0 / (m + 1); }

    // omega_i = 1 iff i/m in [0.25, 0.6] (1-based sites)
    static GLModel chain(int m, double lambda = 0.2, double mu_gl = 1.0, double beta = 1.0,
                         double gain = 20.0);
    // omega_(i,j) = 1 iff (i/m, j/m) in [0.2, 0.8]^2 (1-based sites)
    static GLModel grid(int m, double lambda = 0.5, double mu_gl = 1.0, double beta = 1.0,
                        double gain = 20.0);
};

struct CostSpec {
    double horizon_T = 1.0;
    int steps_K = 10;
    bool zero_running_cost = false;  // test override
    double dt() const { return horizon_T / steps_K; }
};

// f(x, a) = |x|^2 / d + a^2
double running_cost(const GLModel& model, const Eigen::VectorXd& x, double a,
                    const CostSpec& cost);
// h(y) = |y|^2 / d
double terminal_cost(const GLModel& model, const Eigen::VectorXd& x);

double potential(const GLModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd drift(const GLModel& model, const Eigen::VectorXd& x, double a);

struct StepResult {
    Eigen::VectorXd x_next;
    double cost = 0.0;  // left-endpoint quadrature of the running cost
};

// Euler-Maruyama over `duration` with n_substeps inner steps under the
// constant control a. Throws on state blow-up, naming the substep.
StepResult simulate(const GLModel& model, const CostSpec& cost, const Eigen::VectorXd& x0,
                    double a, double duration, int n_substeps, std::mt19937_64& rng);

// Deterministic per-trajectory stream derived from (seed, stream index).
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace fhtc
