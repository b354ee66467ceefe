#pragma once

#include <cstdint>
#include <functional>

#include "fhtc/fht.hpp"

namespace fhtc {

// Black-box recovery of all tensor components of a function from structured
// point evaluations: per-edge correlation matrices Z are SVD-factored to fix
// the bond gauges, then each component solves a small sketched linear system
// through pseudo-inverses.

// Sample points per cluster and per cluster-complement. Cluster point sets
// are reused as the row points of the edge matrix Z and as the corresponding
// mode of the parent's right-hand side B; at the root the sibling's cluster
// points serve as complement points, halving the evaluation count there.
struct SketchPlan {
    struct NodePoints {
        Eigen::MatrixXd cluster;     // r~_S x |S|, variables in leaf order
        Eigen::MatrixXd complement;  // r~_Sbar x (d - |S|)
        bool complement_is_sibling = false;
    };
    std::vector<NodePoints> node;  // by heap id; [0], [1] unused
    int margin = 2;
    std::uint64_t seed = 0;

    // Evaluation budget: sum over nodes of the Z and B tensor sizes,
    // accounting for the shared evaluations at the root.
    std::int64_t budget(const DyadicTree& t) const;

    static SketchPlan make(const DyadicTree& t, const BasisSet& leaf_basis, int margin,
                           std::uint64_t seed);
};

struct InterpStats {
    std::int64_t evaluations = 0;
    int rank_warnings = 0;
};

// Balanced SVD gauge split of Z into (A, Abar) with A = U sqrt(S),
// Abar = sqrt(S) V^T and A * Abar the best rank-r approximation of Z.
// Shrinks r to the numerical rank (sigma > 1e-12 sigma_max) with a warning.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gauge_factor(const Eigen::MatrixXd& Z, int target_rank,
                                                         int* warnings = nullptr);

using EvalFn = std::function<double(const Eigen::VectorXd&)>;

Fht interpolate(const EvalFn& g, const DyadicTree& tree, const BasisSet& leaf_basis,
                const SketchPlan& plan, InterpStats* stats = nullptr);

}  // namespace fhtc
