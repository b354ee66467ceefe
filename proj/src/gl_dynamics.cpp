#include "fhtc/gl_dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fhtc {

GLModel GLModel::chain(int m, double lambda, double mu_gl, double beta, double gain) {
    GLModel g;
    g.variant = GLVariant::chain_1d;
    g.m = m;
    g.d = m;
    g.lambda = lambda;
    g.mu_gl = mu_gl;
    g.beta = beta;
    g.control_gain = gain;
    g.omega = Eigen::VectorXd::Zero(m);
    for (int i = 1; i <= m; ++i) {
        double frac = static_cast<double>(i) / m;
        if (frac >= 0.25 && frac <= 0.6) g.omega[i - 1] = 1.0;
    }
    return g;
}

GLModel GLModel::grid(int m, double lambda, double mu_gl, double beta, double gain) {
    GLModel g;
    g.variant = GLVariant::grid_2d;
    g.m = m;
    g.d = m * m;
    g.lambda = lambda;
    g.mu_gl = mu_gl;
    g.beta = beta;
    g.control_gain = gain;
    g.omega = Eigen::VectorXd::Zero(g.d);
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) {
            double fi = static_cast<double>(i) / m, fj = static_cast<double>(j) / m;
            if (fi >= 0.2 && fi <= 0.8 && fj >= 0.2 && fj <= 0.8)
                g.omega[(i - 1) * m + (j - 1)] = 1.0;
        }
    return g;
}

double running_cost(const GLModel& model, const Eigen::VectorXd& x, double a,
                    const CostSpec& cost) {
    if (cost.zero_running_cost) return 0.0;
    return x.squaredNorm() / model.d + a * a;
}

double terminal_cost(const GLModel& model, const Eigen::VectorXd& x) {
    return x.squaredNorm() / model.d;
}

double potential(const GLModel& model, const Eigen::VectorXd& x) {
    switch (model.potential_kind) {
        case PotentialKind::none:
            return 0.0;
        case PotentialKind::quadratic:
            return 0.5 * x.squaredNorm();
        case PotentialKind::ginzburg_landau:
            break;
    }
    double h = model.h();
    double grad_term = 0.0, well_term = 0.0;
    if (model.variant == GLVariant::chain_1d) {
        int m = model.m;
        // Dirichlet boundary x_0 = x_{m+1} = 0
        for (int i = 1; i <= m + 1; ++i) {
            double xi = (i <= m) ? x[i - 1] : 0.0;
            double xim1 = (i >= 2) ? x[i - 2] : 0.0;
            double diff = (xi - xim1) / h;
            grad_term += diff * diff;
        }
        for (int i = 0; i < m; ++i) {
            double w = 1.0 - x[i] * x[i];
            well_term += w * w;
        }
        return (0.5 * model.lambda * grad_term + 0.25 * model.mu_gl * well_term) * h;
    }
    // 2D grid: interior adjacency, each unordered pair once, no wraparound
    int m = model.m;
    auto at = [&](int i, int j) { return x[(i - 1) * m + (j - 1)]; };
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= m; ++j) {
            if (i < m) {
                double diff = (at(i, j) - at(i + 1, j)) / h;
                grad_term += diff * diff;
            }
            if (j < m) {
                double diff = (at(i, j) - at(i, j + 1)) / h;
                grad_term += diff * diff;
            }
            double w = 1.0 - at(i, j) * at(i, j);
            well_term += w * w;
        }
    return (0.5 * model.lambda * grad_term + 0.25 * model.mu_gl * well_term) * h * h;
}

Eigen::VectorXd drift(const GLModel& model, const Eigen::VectorXd& x, double a) {
    Eigen::VectorXd b(model.d);
    switch (model.potential_kind) {
        case PotentialKind::none:
            b.setZero();
            break;
        case PotentialKind::quadratic:
            b = -x;
            break;
        case PotentialKind::ginzburg_landau: {
            double h = model.h();
            if (model.variant == GLVariant::chain_1d) {
                int m = model.m;
                for (int i = 0; i < m; ++i) {
                    double left = (i >= 1) ? x[i - 1] : 0.0;
                    double right = (i + 1 < m) ? x[i + 1] : 0.0;
                    double lap = (2.0 * x[i] - left - right) / h;
                    double well = model.mu_gl * h * (1.0 - x[i] * x[i]) * x[i];
                    b[i] = -(model.lambda * lap) + well;
                }
            } else {
                int m = model.m;
                auto at = [&](int i, int j) {
                    return (i >= 1 && i <= m && j >= 1 && j <= m) ? x[(i - 1) * m + (j - 1)] : 0.0;
                };
                for (int i = 1; i <= m; ++i)
                    for (int j = 1; j <= m; ++j) {
                        double xc = at(i, j);
                        double coupling = 0.0;
                        if (i > 1) coupling += xc - at(i - 1, j);
                        if (i < m) coupling += xc - at(i + 1, j);
                        if (j > 1) coupling += xc - at(i, j - 1);
                        if (j < m) coupling += xc - at(i, j + 1);
                        double well = model.mu_gl * h * h * (1.0 - xc * xc) * xc;
                        b[(i - 1) * m + (j - 1)] = -model.lambda * coupling + well;
                    }
            }
            break;
        }
    }
    b += (model.control_gain * a) * model.omega;
    return b;
}

StepResult simulate(const GLModel& model, const CostSpec& cost, const Eigen::VectorXd& x0,
                    double a, double duration, int n_substeps, std::mt19937_64& rng) {
    if (duration <= 0.0) throw std::invalid_argument("simulate: duration must be positive");
    if (n_substeps < 1) throw std::invalid_argument("simulate: need at least one substep");
    double tau = duration / n_substeps;
    double noise_scale = model.noise ? std::sqrt(2.0 * tau / model.beta) : 0.0;
    std::normal_distribution<double> gauss(0.0, 1.0);
    StepResult out;
    out.x_next = x0;
    for (int s = 0; s < n_substeps; ++s) {
        out.cost += running_cost(model, out.x_next, a, cost) * tau;
        Eigen::VectorXd b = drift(model, out.x_next, a);
        for (int i = 0; i < model.d; ++i)
            out.x_next[i] += b[i] * tau + noise_scale * gauss(rng);
        if (!out.x_next.allFinite())
            throw std::runtime_error("simulate: state blew up at substep " + std::to_string(s));
    }
    return out;
}

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream & 0xffffffffu),
                      static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace fhtc
