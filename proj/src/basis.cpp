#include "fhtc/basis.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace fhtc {

Quadrature gauss_legendre(int m, double lo, double hi) {
    if (m < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    Quadrature q;
    q.nodes.resize(m);
    q.weights.resize(m);
    // Newton iteration on P_m, symmetric pairs.
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            if (m == 1) p1 = x;
            for (int k = 1; k < m; ++k) {
                double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_m(x), p0 = P_{m-1}(x)
            pp = m * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.nodes[i] = -x;
        q.nodes[m - 1 - i] = x;
        q.weights[i] = w;
        q.weights[m - 1 - i] = w;
    }
    if (m % 2 == 1) q.nodes[m / 2] = 0.0;
    // affine map [-1,1] -> [lo,hi]
    double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int i = 0; i < m; ++i) {
        q.nodes[i] = c + half * q.nodes[i];
        q.weights[i] *= half;
    }
    return q;
}

BasisSet::BasisSet(int degree, double lo, double hi) : n_(degree + 1), lo_(lo), hi_(hi) {
    if (degree < 0) throw std::invalid_argument("BasisSet: degree must be >= 0");
    if (!(lo < hi)) throw std::invalid_argument("BasisSet: interval requires lo < hi");
}

BasisSet legendre_basis(int q, double lo, double hi) { return BasisSet(q, lo, hi); }

Eigen::VectorXd BasisSet::eval(double x) const {
    x = std::min(std::max(x, lo_), hi_);
    double u = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
    Eigen::VectorXd v(n_);
    double p0 = 1.0, p1 = u;
    for (int i = 0; i < n_; ++i) {
        double p = (i == 0) ? 1.0 : (i == 1 ? u : 0.0);
        if (i >= 2) {
            p = ((2.0 * i - 1.0) * u * p1 - (i - 1.0) * p0) / i;
            p0 = p1;
            p1 = p;
        }
        v[i] = std::sqrt((2.0 * i + 1.0) / (hi_ - lo_)) * p;
    }
    return v;
}

Eigen::VectorXd BasisSet::eval_deriv(double x) const {
    x = std::min(std::max(x, lo_), hi_);
    double u = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
    double du_dx = 2.0 / (hi_ - lo_);
    Eigen::VectorXd v(n_);
    // P_k and P_k' by recurrence: P'_{k+1} = P'_{k-1} + (2k+1) P_k.
    double p0 = 1.0, p1 = u;
    double dp0 = 0.0, dp1 = 1.0;
    for (int i = 0; i < n_; ++i) {
        double dp;
        if (i == 0) {
            dp = 0.0;
        } else if (i == 1) {
            dp = 1.0;
        } else {
            double p2 = ((2.0 * i - 1.0) * u * p1 - (i - 1.0) * p0) / i;
            double dp2 = dp0 + (2.0 * i - 1.0) * p1;
            p0 = p1;
            p1 = p2;
            dp0 = dp1;
            dp1 = dp2;
            dp = dp2;
        }
        v[i] = std::sqrt((2.0 * i + 1.0) / (hi_ - lo_)) * dp * du_dx;
    }
    return v;
}

Eigen::VectorXd BasisSet::project(const std::function<double(double)>& f, int quad_nodes) const {
    int m = quad_nodes > 0 ? quad_nodes : 2 * n_ + 2;
    Quadrature q = gauss_legendre(m, lo_, hi_);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m; ++i) c += q.weights[i] * f(q.nodes[i]) * eval(q.nodes[i]);
    return c;
}

Eigen::MatrixXd sobolev_gram(const BasisSet& b) {
    int n = b.size();
    Quadrature q = gauss_legendre(2 * n + 2, b.lo(), b.hi());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < q.nodes.size(); ++i) {
        Eigen::VectorXd s = b.eval(q.nodes[i]) + b.eval_deriv(q.nodes[i]);
        K.selfadjointView<Eigen::Lower>().rankUpdate(s, q.weights[i]);
    }
    return K.selfadjointView<Eigen::Lower>();
}

}  // namespace fhtc
