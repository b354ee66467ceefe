#include "fhtc/sketch_interp.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

namespace fhtc {

namespace {

Eigen::MatrixXd uniform_points(int count, int dim, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd pts(count, dim);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < dim; ++j) pts(i, j) = u(rng);
    return pts;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, double rel_tol = 1e-12) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    double cut = s.size() ? rel_tol * s[0] : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut && s[i] > 0.0) inv[i] = 1.0 / s[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::vector<int> complement_vars(const DyadicTree& t, int h) {
    std::vector<int> cl = t.cluster(h);
    int first = cl.front(), last = cl.back();
    std::vector<int> out;
    out.reserve(t.num_leaves() - static_cast<int>(cl.size()));
    for (int j = 0; j < first; ++j) out.push_back(j);
    for (int j = last + 1; j < t.num_leaves(); ++j) out.push_back(j);
    return out;
}

}  // namespace

SketchPlan SketchPlan::make(const DyadicTree& t, const BasisSet& leaf_basis, int margin,
                            std::uint64_t seed) {
    if (margin < 1) throw std::invalid_argument("SketchPlan: oversampling margin must be >= 1");
    SketchPlan plan;
    plan.margin = margin;
    plan.seed = seed;
    plan.node.resize(t.max_node_id() + 1);
    double lo = leaf_basis.lo(), hi = leaf_basis.hi();
    for (int h = 2; h <= t.max_node_id(); ++h) {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(h)));
        int r = t.parent_rank(h);
        int cl_size = static_cast<int>(t.cluster(h).size());
        int co_size = t.num_leaves() - cl_size;
        int r_cluster = (t.is_leaf(h) ? std::max(leaf_basis.size(), r) : r) + margin;
        int r_complement = r + margin;
        NodePoints& np = plan.node[h];
        np.cluster = uniform_points(r_cluster, cl_size, lo, hi, rng);
        if (h == 2 || h == 3) {
            np.complement_is_sibling = true;  // reuse the sibling's cluster points
        } else {
            np.complement = uniform_points(r_complement, co_size, lo, hi, rng);
        }
    }
    return plan;
}

std::int64_t SketchPlan::budget(const DyadicTree& t) const {
    auto complement_rows = [&](int h) -> std::int64_t {
        return node[h].complement_is_sibling ? node[h == 2 ? 3 : 2].cluster.rows()
                                             : node[h].complement.rows();
    };
    // the root grid serves as B_root, Z of node 2, and Z^T of node 3
    std::int64_t total = node[2].cluster.rows() * node[3].cluster.rows();
    for (int h = 4; h <= t.max_node_id(); ++h)
        total += node[h].cluster.rows() * complement_rows(h);  // Z (for a leaf, also its B)
    for (int h = 2; h <= t.max_node_id(); ++h) {
        if (t.is_leaf(h)) continue;
        total += node[t.left(h)].cluster.rows() * node[t.right(h)].cluster.rows() *
                 complement_rows(h);
    }
    return total;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> gauge_factor(const Eigen::MatrixXd& Z, int target_rank,
                                                         int* warnings) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    int num_rank = 0;
    double cut = s.size() ? 1e-12 * s[0] : 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut && s[i] > 0.0) ++num_rank;
    int r = std::min<int>(target_rank, static_cast<int>(std::min(Z.rows(), Z.cols())));
    if (num_rank < r) {
        std::cerr << "[fhtc] gauge_factor: numerical rank " << num_rank << " below target " << r
                  << ", shrinking\n";
        if (warnings) ++*warnings;
        r = std::max(num_rank, 1);
    }
    Eigen::VectorXd sq = s.head(r).array().sqrt();
    Eigen::MatrixXd A = svd.matrixU().leftCols(r) * sq.asDiagonal();
    Eigen::MatrixXd Abar = sq.asDiagonal() * svd.matrixV().leftCols(r).transpose();
    return {A, Abar};
}

Fht interpolate(const EvalFn& g, const DyadicTree& tree, const BasisSet& leaf_basis,
                const SketchPlan& plan, InterpStats* stats) {
    if (tree.has_root_leg())
        throw std::invalid_argument("interpolate: trees with a root leg are not supported");
    if (tree.node_count() == 1)
        throw std::invalid_argument("interpolate: degenerate single-node tree not supported");
    int d = tree.num_leaves();

    std::int64_t evals = 0;
    auto eval_checked = [&](const Eigen::VectorXd& pt) {
        ++evals;
        double v = g(pt);
        if (!std::isfinite(v))
            throw std::runtime_error("interpolate: evaluation callback returned a non-finite value");
        return v;
    };

    auto cluster_points = [&](int h) -> const Eigen::MatrixXd& { return plan.node[h].cluster; };
    auto complement_points = [&](int h) -> const Eigen::MatrixXd& {
        if (plan.node[h].complement_is_sibling) return plan.node[h == 2 ? 3 : 2].cluster;
        return plan.node[h].complement;
    };

    auto eval_Z = [&](int h) {
        const Eigen::MatrixXd& cp = cluster_points(h);
        const Eigen::MatrixXd& op = complement_points(h);
        std::vector<int> cv = tree.cluster(h);
        std::vector<int> ov = complement_vars(tree, h);
        Eigen::MatrixXd Z(cp.rows(), op.rows());
        Eigen::VectorXd pt(d);
        for (Eigen::Index i = 0; i < cp.rows(); ++i)
            for (Eigen::Index j = 0; j < op.rows(); ++j) {
                for (size_t k = 0; k < cv.size(); ++k) pt[cv[k]] = cp(i, k);
                for (size_t k = 0; k < ov.size(); ++k) pt[ov[k]] = op(j, k);
                Z(i, j) = eval_checked(pt);
            }
        return Z;
    };

    InterpStats local;
    std::vector<Eigen::MatrixXd> Z(tree.max_node_id() + 1);
    std::vector<Eigen::MatrixXd> A(tree.max_node_id() + 1), Abar(tree.max_node_id() + 1);
    Z[2] = eval_Z(2);
    Z[3] = Z[2].transpose();
    for (int h = 4; h <= tree.max_node_id(); ++h) Z[h] = eval_Z(h);
    for (int h = 2; h <= tree.max_node_id(); ++h) {
        auto [a, abar] = gauge_factor(Z[h], tree.parent_rank(h), &local.rank_warnings);
        A[h] = std::move(a);
        Abar[h] = std::move(abar);
    }

    DyadicTree t_out = tree;
    for (int h = 2; h <= tree.max_node_id(); ++h)
        t_out.set_parent_rank(h, static_cast<int>(A[h].cols()));
    Fht f(t_out, leaf_basis);

    for (int h = 1; h <= tree.max_node_id(); ++h) {
        if (tree.is_root(h)) {
            f.comp[1].as_matrix(1) = pinv(A[2]) * Z[2] * pinv(A[3]).transpose();
        } else if (tree.is_leaf(h)) {
            // B coincides with Z: rows this leaf's points, columns its
            // complement points.
            const Eigen::MatrixXd& cp = cluster_points(h);
            Eigen::MatrixXd Psi(cp.rows(), leaf_basis.size());
            for (Eigen::Index i = 0; i < cp.rows(); ++i)
                Psi.row(i) = leaf_basis.eval(cp(i, 0)).transpose();
            Eigen::MatrixXd T1 = pinv(Psi) * Z[h];  // n x r~_comp
            f.comp[h].as_matrix(1) = (T1 * pinv(Abar[h])).transpose();
        } else {
            int hl = tree.left(h), hr = tree.right(h);
            const Eigen::MatrixXd& pa = cluster_points(hl);
            const Eigen::MatrixXd& pb = cluster_points(hr);
            const Eigen::MatrixXd& pf = complement_points(h);
            std::vector<int> va = tree.cluster(hl);
            std::vector<int> vb = tree.cluster(hr);
            std::vector<int> vf = complement_vars(tree, h);
            TensorComponent B({static_cast<int>(pa.rows()), static_cast<int>(pb.rows()),
                               static_cast<int>(pf.rows())});
            Eigen::VectorXd pt(d);
            Eigen::Index idx = 0;
            for (Eigen::Index i = 0; i < pa.rows(); ++i)
                for (Eigen::Index j = 0; j < pb.rows(); ++j)
                    for (Eigen::Index k = 0; k < pf.rows(); ++k) {
                        for (size_t q = 0; q < va.size(); ++q) pt[va[q]] = pa(i, q);
                        for (size_t q = 0; q < vb.size(); ++q) pt[vb[q]] = pb(j, q);
                        for (size_t q = 0; q < vf.size(); ++q) pt[vf[q]] = pf(k, q);
                        B.data[idx++] = eval_checked(pt);
                    }
            TensorComponent G = mode_multiply(B, 0, pinv(A[hl]));
            G = mode_multiply(G, 1, pinv(A[hr]));
            G = mode_multiply(G, 2, Eigen::MatrixXd(pinv(Abar[h]).transpose()));
            f.comp[h] = std::move(G);
        }
    }
    local.evaluations = evals;
    if (stats) *stats = local;
    return f;
}

}  // namespace fhtc
