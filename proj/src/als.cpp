#include "fhtc/als.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace fhtc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-wise Khatri-Rao product, first factor slower (row-major pairing).
Eigen::MatrixXd row_kr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd K(A.rows(), A.cols() * B.cols());
    for (Eigen::Index a = 0; a < A.cols(); ++a)
        for (Eigen::Index b = 0; b < B.cols(); ++b)
            K.col(a * B.cols() + b) = A.col(a).cwiseProduct(B.col(b));
    return K;
}

struct Factor {
    const Eigen::MatrixXd* A;  // N x dim
    const Eigen::MatrixXd* M;  // dim x dim
};

// Incoming factor per axis of comp[h]: the up message of a child bond, the
// down message of the parent bond, or the physical basis evaluations.
std::vector<Factor> incoming_factors(const Fht& f, const AlsWorkspace& ws, const Messages& msgs,
                                     int h) {
    const DyadicTree& t = f.tree;
    std::vector<Factor> fac;
    if (t.node_count() == 1) {
        fac.push_back({&ws.psi[0], &ws.gram_leaf});
        if (t.has_root_leg()) fac.push_back({&ws.psi_root, &ws.gram_root});
        return fac;
    }
    if (t.is_leaf(h)) {
        fac.push_back({&msgs.down_A[h], &msgs.down_M[h]});
        fac.push_back({&ws.psi[t.leaf_index(h)], &ws.gram_leaf});
    } else {
        fac.push_back({&msgs.up_A[t.left(h)], &msgs.up_M[t.left(h)]});
        fac.push_back({&msgs.up_A[t.right(h)], &msgs.up_M[t.right(h)]});
        if (t.is_root(h)) {
            if (t.has_root_leg()) fac.push_back({&ws.psi_root, &ws.gram_root});
        } else {
            fac.push_back({&msgs.down_A[h], &msgs.down_M[h]});
        }
    }
    return fac;
}

// Permutation that brings `axis` to the front, keeping the others in order.
std::vector<int> front_permutation(int ndim, int axis) {
    std::vector<int> order;
    order.push_back(axis);
    for (int i = 0; i < ndim; ++i)
        if (i != axis) order.push_back(i);
    return order;
}

// Contract comp[h] with its incoming factors on every axis except `axis`:
// the (A, M) message that h sends across that axis.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> contract_except(
    const TensorComponent& g, const std::vector<Factor>& fac, int axis) {
    int nd = g.ndim();
    std::vector<int> order = front_permutation(nd, axis);
    TensorComponent gp = (axis == 0) ? g : permute_axes(g, order);

    // A part
    Eigen::MatrixXd kr;
    {
        bool first = true;
        for (int i = 0; i < nd; ++i) {
            if (i == axis) continue;
            kr = first ? *fac[i].A : row_kr(kr, *fac[i].A);
            first = false;
        }
    }
    Eigen::MatrixXd A = kr * gp.as_matrix(1).transpose();

    // M part
    TensorComponent gm = g;
    for (int i = 0; i < nd; ++i)
        if (i != axis) gm = mode_multiply(gm, i, *fac[i].M);
    TensorComponent gmp = (axis == 0) ? gm : permute_axes(gm, order);
    Eigen::MatrixXd M = gp.as_matrix(1) * gmp.as_matrix(1).transpose();
    return {A, M};
}

Eigen::MatrixXd kron_list(const std::vector<const Eigen::MatrixXd*>& ms) {
    Eigen::MatrixXd M = *ms[0];
    for (size_t k = 1; k < ms.size(); ++k) {
        const Eigen::MatrixXd& B = *ms[k];
        Eigen::MatrixXd out(M.rows() * B.rows(), M.cols() * B.cols());
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            for (Eigen::Index j = 0; j < M.cols(); ++j)
                out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = M(i, j) * B;
        M = std::move(out);
    }
    return M;
}

}  // namespace

AlsWorkspace AlsWorkspace::make(const Fht& f, RegressionSet data) {
    const DyadicTree& t = f.tree;
    if (data.X.cols() != f.input_dim())
        throw std::invalid_argument("AlsWorkspace: sample dimension does not match the ansatz");
    if (data.X.rows() != data.y.size())
        throw std::invalid_argument("AlsWorkspace: inputs and targets disagree on sample count");
    if (!data.y.allFinite() || !data.X.allFinite())
        throw std::invalid_argument("AlsWorkspace: non-finite training data");
    AlsWorkspace ws;
    Eigen::Index N = data.X.rows();
    ws.psi.resize(t.num_leaves());
    for (int j = 0; j < t.num_leaves(); ++j) {
        ws.psi[j].resize(N, f.leaf_basis.size());
        for (Eigen::Index i = 0; i < N; ++i)
            ws.psi[j].row(i) = f.leaf_basis.eval(data.X(i, j)).transpose();
    }
    if (t.has_root_leg()) {
        ws.psi_root.resize(N, f.root_basis.size());
        for (Eigen::Index i = 0; i < N; ++i)
            ws.psi_root.row(i) = f.root_basis.eval(data.X(i, t.num_leaves())).transpose();
        ws.gram_root = sobolev_gram(f.root_basis);
    }
    ws.gram_leaf = sobolev_gram(f.leaf_basis);
    ws.data = std::move(data);
    return ws;
}

void refresh_up(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int h) {
    const DyadicTree& t = f.tree;
    std::vector<Factor> fac = incoming_factors(f, ws, msgs, h);
    int parent_axis = t.is_leaf(h) ? 0 : 2;
    auto [A, M] = contract_except(f.comp[h], fac, parent_axis);
    msgs.up_A[h] = std::move(A);
    msgs.up_M[h] = std::move(M);
    ++msgs.update_count;
}

void refresh_down(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int child) {
    const DyadicTree& t = f.tree;
    int p = t.parent(child);
    std::vector<Factor> fac = incoming_factors(f, ws, msgs, p);
    int axis = (child == t.left(p)) ? 0 : 1;
    auto [A, M] = contract_except(f.comp[p], fac, axis);
    msgs.down_A[child] = std::move(A);
    msgs.down_M[child] = std::move(M);
    ++msgs.update_count;
}

Messages init_messages(const Fht& f, const AlsWorkspace& ws) {
    const DyadicTree& t = f.tree;
    Messages msgs;
    int ids = t.max_node_id() + 1;
    msgs.up_A.resize(ids);
    msgs.up_M.resize(ids);
    msgs.down_A.resize(ids);
    msgs.down_M.resize(ids);
    if (t.node_count() == 1) return msgs;
    for (int h = t.max_node_id(); h >= 2; --h) refresh_up(f, ws, msgs, h);
    for (int h = 1; h <= t.max_node_id(); ++h) {
        if (t.is_leaf(h)) continue;
        refresh_down(f, ws, msgs, t.left(h));
        refresh_down(f, ws, msgs, t.right(h));
    }
    return msgs;
}

NodeSolveInfo solve_node(Fht& f, int h, const Messages& msgs, const AlsWorkspace& ws,
                         double reg_mu) {
    std::vector<Factor> fac = incoming_factors(f, ws, msgs, h);
    Eigen::Index N = ws.sample_count();

    Eigen::MatrixXd kr = *fac[0].A;
    for (size_t k = 1; k < fac.size(); ++k) kr = row_kr(kr, *fac[k].A);
    Eigen::Index R = kr.cols();

    Eigen::MatrixXd H0 = Eigen::MatrixXd::Zero(R, R);
    H0.selfadjointView<Eigen::Lower>().rankUpdate(kr.transpose());
    H0 = H0.selfadjointView<Eigen::Lower>();
    Eigen::VectorXd b = kr.transpose() * ws.data.y;

    std::vector<const Eigen::MatrixXd*> mfac;
    for (const Factor& fa : fac) mfac.push_back(fa.M);
    Eigen::MatrixXd M = kron_list(mfac);

    auto eval_terms = [&](const Eigen::VectorXd& g, double& data_term, double& reg_term) {
        // explicit residual: immune to the cancellation in g'H0g - 2b'g + y'y
        data_term = (kr * g - ws.data.y).squaredNorm() / static_cast<double>(N);
        reg_term = reg_mu * g.dot(M * g);
    };

    NodeSolveInfo info;
    Eigen::VectorXd g_old = f.comp[h].data;
    eval_terms(g_old, info.data_before, info.reg_before);

    Eigen::MatrixXd H = H0 + (static_cast<double>(N) * reg_mu) * M;
    Eigen::VectorXd g;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        g = ldlt.solve(b);
        double resid = (H * g - b).norm();
        ok = std::isfinite(resid) && resid <= 1e-8 * std::max(1.0, b.norm());
    }
    if (!ok) {
        if (reg_mu > 0) {
            double jitter = 1e-12 * H.trace();
            Eigen::LDLT<Eigen::MatrixXd> retry(
                H + jitter * Eigen::MatrixXd::Identity(R, R));
            g = retry.solve(b);
        } else {
            std::cerr << "[fhtc] solve_node: singular normal matrix at node " << h
                      << ", using pseudo-inverse\n";
            g = H.completeOrthogonalDecomposition().solve(b);
        }
    }
    // keep the old component if the quadratic model says it is no worse
    double data_new, reg_new;
    eval_terms(g, data_new, reg_new);
    if (!std::isfinite(data_new + reg_new) ||
        data_new + reg_new > info.data_before + info.reg_before) {
        g = g_old;
        data_new = info.data_before;
        reg_new = info.reg_before;
    }
    info.data_after = data_new;
    info.reg_after = reg_new;
    f.comp[h].data = g;
    return info;
}

std::vector<int> als_walk_order(const DyadicTree& t) {
    std::vector<int> order;
    order.reserve(t.node_count());
    auto visit = [&](auto&& self, int h) -> void {
        if (t.is_leaf(h)) {
            order.push_back(h);
            return;
        }
        self(self, t.right(h));
        order.push_back(h);
        self(self, t.left(h));
    };
    visit(visit, DyadicTree::root());
    return order;
}

// One-step message refreshes along the tree path from `from` to `to`.
void refresh_path(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int from, int to) {
    std::vector<int> up_chain, down_chain;
    int a = from, b = to;
    while (a != b) {
        if (a > b) {
            up_chain.push_back(a);
            a /= 2;
        } else {
            down_chain.push_back(b);
            b /= 2;
        }
    }
    for (int h : up_chain) refresh_up(f, ws, msgs, h);
    for (auto it = down_chain.rbegin(); it != down_chain.rend(); ++it)
        refresh_down(f, ws, msgs, *it);
}

AlsResult sweep(Fht& f, const AlsWorkspace& ws, double reg_mu, int rounds) {
    AlsResult result;
    if (f.tree.node_count() == 1) {
        // single quadratic solve
        Messages msgs = init_messages(f, ws);
        for (int r = 0; r < rounds; ++r) {
            NodeSolveInfo info = solve_node(f, 1, msgs, ws, reg_mu);
            if (r == 0) result.initial_loss = info.loss_before();
            result.final_loss = info.loss_after();
            result.trace.push_back({r, 1, info.data_after, info.reg_after});
            ++result.node_solves;
        }
        return result;
    }

    Messages msgs = init_messages(f, ws);
    std::vector<int> order = als_walk_order(f.tree);
    int prev = order.front();
    double last_loss = 0;
    bool have_loss = false;
    for (int round = 0; round < rounds; ++round) {
        for (size_t i = 0; i < order.size(); ++i) {
            int h = order[i];
            if (!(round == 0 && i == 0)) refresh_path(f, ws, msgs, prev, h);
            NodeSolveInfo info = solve_node(f, h, msgs, ws, reg_mu);
            if (!have_loss) {
                result.initial_loss = info.loss_before();
                have_loss = true;
            } else {
                // staleness shows up at the scale of a component change;
                // re-contraction rounding noise sits orders below this
                double drift = std::abs(info.loss_before() - last_loss);
                if (drift > 1e-5 * std::max(1.0, last_loss))
                    throw std::runtime_error(
                        "sweep: loss drifted between node solves (stale messages?) at node " +
                        std::to_string(h) + ": " + std::to_string(last_loss) + " -> " +
                        std::to_string(info.loss_before()));
            }
            if (info.loss_after() > info.loss_before() + 1e-10)
                throw std::runtime_error("sweep: loss increased at node " + std::to_string(h));
            last_loss = info.loss_after();
            result.trace.push_back({round, h, info.data_after, info.reg_after});
            ++result.node_solves;
            prev = h;
        }
    }
    result.final_loss = last_loss;
    result.message_updates = msgs.update_count;
    return result;
}

}  // namespace fhtc
