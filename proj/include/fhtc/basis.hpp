#pragma once

#include <Eigen/Dense>

#include <functional>

namespace fhtc {

// Gauss-Legendre rule with `m` nodes, mapped to [lo, hi].
// Exact for polynomial integrands of degree <= 2m - 1.
struct Quadrature {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

Quadrature gauss_legendre(int m, double lo = -1.0, double hi = 1.0);

// Orthonormal shifted-Legendre basis {psi_0, ..., psi_{n-1}} on [lo, hi].
// psi_0 is the constant 1/sqrt(hi - lo); the Gram matrix of the family is
// the identity. Evaluations outside [lo, hi] are clamped to the endpoints.
class BasisSet {
public:
    BasisSet() = default;
    BasisSet(int degree, double lo, double hi);

    int size() const { return n_; }
    int degree() const { return n_ - 1; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double length() const { return hi_ - lo_; }

    Eigen::VectorXd eval(double x) const;
    Eigen::VectorXd eval_deriv(double x) const;

    // Coefficients of the orthogonal projection of `f` onto the basis span,
    // computed with a Gauss-Legendre rule of `quad_nodes` points
    // (default 2n + 2, exact for polynomial f of degree <= q).
    Eigen::VectorXd project(const std::function<double(double)>& f,
                            int quad_nodes = 0) const;

    bool operator==(const BasisSet& o) const {
        return n_ == o.n_ && lo_ == o.lo_ && hi_ == o.hi_;
    }
    bool operator!=(const BasisSet& o) const { return !(*this == o); }

private:
    int n_ = 0;
    double lo_ = -1.0;
    double hi_ = 1.0;
};

BasisSet legendre_basis(int q, double lo, double hi);

inline Eigen::VectorXd eval_vec(const BasisSet& b, double x) { return b.eval(x); }

// Gram matrix of {psi_i + psi_i'} on the basis interval:
//   K(i, i') = <psi_i + psi_i', psi_{i'} + psi_{i'}'>.
// Symmetric positive semidefinite; the per-variable factor of the mixed
// Sobolev norm used by the ALS regularizer.
Eigen::MatrixXd sobolev_gram(const BasisSet& b);

}  // namespace fhtc
