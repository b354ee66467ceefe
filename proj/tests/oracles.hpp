#pragma once

// Test-side oracles, kept independent of the library's quadrature and
// contraction paths.

#include <Eigen/Dense>

#include <functional>
#include <random>
#include <vector>

namespace oracles {

// Composite Simpson on [lo, hi]; panels is forced even.
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      int panels = 4096) {
    if (panels % 2) ++panels;
    double h = (hi - lo) / panels;
    double s = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Gauss nodes/weights on [lo, hi] by Golub-Welsch (eigenvalues of the
// Jacobi matrix) -- independent of the library's Newton-iteration rule.
inline void gauss_rule(int m, double lo, double hi, std::vector<double>& x,
                       std::vector<double>& w) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) {
        double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x.resize(m);
    w.resize(m);
    double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < m; ++i) {
        x[i] = c + half * es.eigenvalues()[i];
        w[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i) * half;
    }
}

// Exact polynomial integral against the Golub-Welsch rule.
inline double gauss_integral(const std::function<double(double)>& f, double lo, double hi,
                             int m = 24) {
    std::vector<double> x, w;
    gauss_rule(m, lo, hi, x, w);
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += w[i] * f(x[i]);
    return s;
}

// Tensor-grid Gauss quadrature over a box (exact for low-degree polynomials).
inline double box_quadrature(const std::function<double(const Eigen::VectorXd&)>& f, int dim,
                             double lo, double hi, int points_per_dim = 16) {
    std::vector<double> x, w;
    gauss_rule(points_per_dim, lo, hi, x, w);
    int panels = points_per_dim - 1;
    std::vector<int> idx(dim, 0);
    Eigen::VectorXd pt(dim);
    double total = 0.0;
    while (true) {
        double ww = 1.0;
        for (int k = 0; k < dim; ++k) {
            pt[k] = x[idx[k]];
            ww *= w[idx[k]];
        }
        total += ww * f(pt);
        int k = dim - 1;
        for (; k >= 0; --k) {
            if (++idx[k] <= panels) break;
            idx[k] = 0;
        }
        if (k < 0) break;
    }
    return total;
}

inline Eigen::VectorXd random_point(int dim, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) p[i] = u(rng);
    return p;
}

}  // namespace oracles
