#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fhtc/basis.hpp"
#include "fhtc/tree.hpp"

namespace fhtc {

// Dense row-major multi-way array. Axis order conventions for tree nodes:
//   leaf      (parent bond, physical leg)
//   interior  (left bond, right bond, parent bond)
//   root      (left bond, right bond[, root physical leg])
//   L=0 root  (physical leg[, root physical leg])
struct TensorComponent {
    std::vector<int> dims;
    Eigen::VectorXd data;

    TensorComponent() = default;
    explicit TensorComponent(std::vector<int> d);

    int ndim() const { return static_cast<int>(dims.size()); }
    Eigen::Index size() const { return data.size(); }
    void set_zero() { data.setZero(); }

    // Contiguous matricization: rows = dims[0..split), cols = dims[split..).
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    as_matrix(int split) const;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    as_matrix(int split);

    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;
};

TensorComponent permute_axes(const TensorComponent& t, const std::vector<int>& order);
// new(ax = i, ...) = sum_j M(i, j) * t(ax = j, ...)
TensorComponent mode_multiply(const TensorComponent& t, int axis, const Eigen::MatrixXd& M);
// contract axis with a vector, dropping it
TensorComponent mode_contract(const TensorComponent& t, int axis, const Eigen::VectorXd& v);

// Functional hierarchical tensor: a binary-tree tensor network contracted
// against tensor products of univariate orthonormal basis evaluations. All
// leaves share `leaf_basis`; an optional root leg carries `root_basis`.
struct Fht {
    DyadicTree tree;
    std::vector<TensorComponent> comp;  // indexed by heap node id; [0] unused
    BasisSet leaf_basis;
    BasisSet root_basis;  // meaningful iff tree.has_root_leg()

    Fht() = default;
    Fht(DyadicTree t, BasisSet leaf_b, BasisSet root_b = BasisSet());

    static Fht zeros(const DyadicTree& t, const BasisSet& leaf_b, const BasisSet& root_b = BasisSet());
    static Fht random(const DyadicTree& t, const BasisSet& leaf_b, const BasisSet& root_b,
                      std::uint64_t seed, double scale = 1.0);

    int input_dim() const { return tree.num_leaves() + (tree.has_root_leg() ? 1 : 0); }

    // point: one value per leaf variable (leaf order), root-leg value last.
    double evaluate(std::span<const double> point) const;
    double evaluate(const Eigen::VectorXd& point) const;

    // Contract each leaf leg with the given vector (and the root leg with
    // root_vec when present). With a root leg and no root_vec, returns the
    // root-leg coefficient profile; otherwise a single value.
    Eigen::VectorXd contract_legs(const std::vector<Eigen::VectorXd>& leaf_vecs,
                                  const Eigen::VectorXd* root_vec) const;

    // Coefficient profile over the root leg at a state point (leaf order).
    Eigen::VectorXd action_profile(std::span<const double> state) const;

    void check_consistent() const;
};

// Full coefficient tensor, row-major over (leaf 0, ..., leaf d-1[, root leg]).
// Refuses when the total coefficient count exceeds `max_entries`.
Eigen::VectorXd contract_dense(const Fht& f, std::int64_t max_entries = 10'000'000);

Fht add(const Fht& a, const Fht& b);
void scale(Fht& f, double s);

// SVD rounding: truncates every bond to the larger of `tol` (relative
// singular value cutoff) and `max_rank` (0 = no cap). Exact up to the
// discarded singular values.
void round_fht(Fht& f, double tol, int max_rank = 0);

// Q(x, a) = integral of P(x, x', a) v(x') dx' contracted in coefficient
// space (orthonormal bases make the x' integral a Kronecker delta).
// P interlaces (x_1, x'_1, ..., x_d, x'_d) on 2d leaves with an optional
// root control leg; v has d leaves and no root leg. The result has the
// action-value structure: d leaves plus P's root leg.
Fht apply_markov(const Fht& P, const Fht& v);

// Q = apply_markov(P, v) + dt * f_term, where f_term is an FHT with the
// output structure (the running-cost term built analytically).
Fht apply_markov(const Fht& P, const Fht& v, const Fht& f_term, double dt);

// Rank-2 FHT for sum_j phi_j(x_j) [+ phi_a(a)], with phi_j given by basis
// coefficient vectors. Exact for costs that are sums of univariate terms.
Fht sum_of_univariate(const DyadicTree& tree, const BasisSet& leaf_basis,
                      const std::vector<Eigen::VectorXd>& leaf_coeffs,
                      const BasisSet* root_basis = nullptr,
                      const Eigen::VectorXd* root_coeffs = nullptr);

// "FHT1" binary serialization: magic, version, tree shape, per-leg basis
// metadata, node table with axis extents, then little-endian float64
// payloads in node-table order.
void save_fht(const Fht& f, const std::filesystem::path& path);
Fht load_fht(const std::filesystem::path& path);

}  // namespace fhtc
