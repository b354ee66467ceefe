#include "fhtc/fht.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fhtc {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

Eigen::Index prod(const std::vector<int>& dims, int from, int to) {
    Eigen::Index p = 1;
    for (int i = from; i < to; ++i) p *= dims[i];
    return p;
}

struct ThinQR {
    Eigen::MatrixXd Q;  // m x k
    Eigen::MatrixXd R;  // k x n
};

ThinQR thin_qr(const Eigen::MatrixXd& M) {
    Eigen::Index k = std::min(M.rows(), M.cols());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    ThinQR out;
    out.Q = qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), k);
    out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return out;
}

}  // namespace

TensorComponent::TensorComponent(std::vector<int> d) : dims(std::move(d)) {
    data = Eigen::VectorXd::Zero(prod(dims, 0, ndim()));
}

Eigen::Map<const RowMat> TensorComponent::as_matrix(int split) const {
    return {data.data(), prod(dims, 0, split), prod(dims, split, ndim())};
}

Eigen::Map<RowMat> TensorComponent::as_matrix(int split) {
    return {data.data(), prod(dims, 0, split), prod(dims, split, ndim())};
}

double& TensorComponent::at(std::initializer_list<int> idx) {
    Eigen::Index off = 0;
    int i = 0;
    for (int v : idx) off = off * dims[i++] + v;
    return data[off];
}

double TensorComponent::at(std::initializer_list<int> idx) const {
    Eigen::Index off = 0;
    int i = 0;
    for (int v : idx) off = off * dims[i++] + v;
    return data[off];
}

TensorComponent permute_axes(const TensorComponent& t, const std::vector<int>& order) {
    int nd = t.ndim();
    std::vector<int> new_dims(nd);
    for (int i = 0; i < nd; ++i) new_dims[i] = t.dims[order[i]];
    TensorComponent out(new_dims);

    std::vector<Eigen::Index> in_strides(nd, 1), out_strides_by_in(nd, 0);
    for (int i = nd - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * t.dims[i + 1];
    Eigen::Index s = 1;
    for (int i = nd - 1; i >= 0; --i) {
        out_strides_by_in[order[i]] = s;
        s *= new_dims[i];
    }
    std::vector<int> idx(nd, 0);
    Eigen::Index n = t.size();
    for (Eigen::Index flat = 0; flat < n; ++flat) {
        Eigen::Index off = 0;
        for (int i = 0; i < nd; ++i) off += idx[i] * out_strides_by_in[i];
        out.data[off] = t.data[flat];
        for (int i = nd - 1; i >= 0; --i) {
            if (++idx[i] < t.dims[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

TensorComponent mode_multiply(const TensorComponent& t, int axis, const Eigen::MatrixXd& M) {
    if (M.cols() != t.dims[axis]) throw std::invalid_argument("mode_multiply: shape mismatch");
    int nd = t.ndim();
    std::vector<int> order(nd);
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[0], order[axis]);
    TensorComponent p = (axis == 0) ? t : permute_axes(t, order);

    std::vector<int> rdims = p.dims;
    rdims[0] = static_cast<int>(M.rows());
    TensorComponent r(rdims);
    r.as_matrix(1) = M * p.as_matrix(1);
    if (axis == 0) return r;
    return permute_axes(r, order);  // the swap is its own inverse
}

TensorComponent mode_contract(const TensorComponent& t, int axis, const Eigen::VectorXd& v) {
    TensorComponent m = mode_multiply(t, axis, v.transpose());
    std::vector<int> dims = m.dims;
    dims.erase(dims.begin() + axis);
    TensorComponent out(dims);
    out.data = m.data;
    return out;
}

Fht::Fht(DyadicTree t, BasisSet leaf_b, BasisSet root_b)
    : tree(std::move(t)), leaf_basis(std::move(leaf_b)), root_basis(std::move(root_b)) {
    comp.resize(tree.max_node_id() + 1);
    for (int h = 1; h <= tree.max_node_id(); ++h) {
        std::vector<int> dims;
        if (tree.node_count() == 1) {
            dims = {tree.leaf_n()};
            if (tree.has_root_leg()) dims.push_back(tree.root_leg_n());
        } else if (tree.is_leaf(h)) {
            dims = {tree.parent_rank(h), tree.leaf_n()};
        } else {
            dims = {tree.parent_rank(tree.left(h)), tree.parent_rank(tree.right(h))};
            if (tree.is_root(h)) {
                if (tree.has_root_leg()) dims.push_back(tree.root_leg_n());
            } else {
                dims.push_back(tree.parent_rank(h));
            }
        }
        comp[h] = TensorComponent(dims);
    }
}

Fht Fht::zeros(const DyadicTree& t, const BasisSet& leaf_b, const BasisSet& root_b) {
    return Fht(t, leaf_b, root_b);
}

Fht Fht::random(const DyadicTree& t, const BasisSet& leaf_b, const BasisSet& root_b,
                std::uint64_t seed, double scale) {
    Fht f(t, leaf_b, root_b);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int h = 1; h <= f.tree.max_node_id(); ++h)
        for (Eigen::Index i = 0; i < f.comp[h].size(); ++i) f.comp[h].data[i] = scale * g(rng);
    return f;
}

void Fht::check_consistent() const {
    for (int h = 1; h <= tree.max_node_id(); ++h) {
        if (!comp[h].data.allFinite()) throw std::runtime_error("Fht: non-finite component entries");
        if (comp[h].size() != prod(comp[h].dims, 0, comp[h].ndim()))
            throw std::runtime_error("Fht: component size mismatch");
    }
}

Eigen::VectorXd Fht::contract_legs(const std::vector<Eigen::VectorXd>& leaf_vecs,
                                   const Eigen::VectorXd* root_vec) const {
    int d = tree.num_leaves();
    if (static_cast<int>(leaf_vecs.size()) != d)
        throw std::invalid_argument("Fht: wrong number of leaf vectors");

    if (tree.node_count() == 1) {
        const TensorComponent& g = comp[1];
        if (tree.has_root_leg()) {
            Eigen::VectorXd profile = g.as_matrix(1).transpose() * leaf_vecs[0];
            if (root_vec) {
                Eigen::VectorXd s(1);
                s[0] = profile.dot(*root_vec);
                return s;
            }
            return profile;
        }
        Eigen::VectorXd s(1);
        s[0] = g.data.dot(leaf_vecs[0]);
        return s;
    }

    std::vector<Eigen::VectorXd> up(tree.max_node_id() + 1);
    for (int h = tree.max_node_id(); h >= 2; --h) {
        const TensorComponent& g = comp[h];
        if (tree.is_leaf(h)) {
            up[h] = g.as_matrix(1) * leaf_vecs[tree.leaf_index(h)];
        } else {
            // g dims (rl, rr, rp)
            Eigen::VectorXd tmp = g.as_matrix(1).transpose() * up[tree.left(h)];
            Eigen::Map<const RowMat> m(tmp.data(), g.dims[1], g.dims[2]);
            up[h] = m.transpose() * up[tree.right(h)];
        }
    }
    const TensorComponent& g = comp[1];
    const Eigen::VectorXd& ul = up[2];
    const Eigen::VectorXd& ur = up[3];
    if (!tree.has_root_leg()) {
        Eigen::VectorXd s(1);
        s[0] = ul.dot(g.as_matrix(1) * ur);
        return s;
    }
    Eigen::VectorXd tmp = g.as_matrix(1).transpose() * ul;  // (rr*na)
    Eigen::Map<const RowMat> m(tmp.data(), g.dims[1], g.dims[2]);
    Eigen::VectorXd profile = m.transpose() * ur;
    if (root_vec) {
        Eigen::VectorXd s(1);
        s[0] = profile.dot(*root_vec);
        return s;
    }
    return profile;
}

double Fht::evaluate(std::span<const double> point) const {
    if (static_cast<int>(point.size()) != input_dim())
        throw std::invalid_argument("Fht::evaluate: point length mismatch");
    int d = tree.num_leaves();
    std::vector<Eigen::VectorXd> vecs(d);
    for (int j = 0; j < d; ++j) vecs[j] = leaf_basis.eval(point[j]);
    if (tree.has_root_leg()) {
        Eigen::VectorXd av = root_basis.eval(point[d]);
        return contract_legs(vecs, &av)[0];
    }
    return contract_legs(vecs, nullptr)[0];
}

double Fht::evaluate(const Eigen::VectorXd& point) const {
    return evaluate(std::span<const double>(point.data(), point.size()));
}

Eigen::VectorXd Fht::action_profile(std::span<const double> state) const {
    if (!tree.has_root_leg()) throw std::invalid_argument("Fht::action_profile: no root leg");
    int d = tree.num_leaves();
    if (static_cast<int>(state.size()) != d)
        throw std::invalid_argument("Fht::action_profile: state length mismatch");
    std::vector<Eigen::VectorXd> vecs(d);
    for (int j = 0; j < d; ++j) vecs[j] = leaf_basis.eval(state[j]);
    return contract_legs(vecs, nullptr);
}

Eigen::VectorXd contract_dense(const Fht& f, std::int64_t max_entries) {
    const DyadicTree& t = f.tree;
    double total = 1.0;
    for (int j = 0; j < t.num_leaves(); ++j) total *= t.leaf_n();
    if (t.has_root_leg()) total *= t.root_leg_n();
    if (total > static_cast<double>(max_entries))
        throw std::invalid_argument("contract_dense: coefficient tensor exceeds size cap");

    if (t.node_count() == 1) return f.comp[1].data;

    int n = t.leaf_n();
    // D[h]: (n^{leaves under h}) x r_parent, rows row-major over leaf vars.
    std::vector<Eigen::MatrixXd> D(t.max_node_id() + 1);
    for (int h = t.max_node_id(); h >= 2; --h) {
        const TensorComponent& g = f.comp[h];
        if (t.is_leaf(h)) {
            D[h] = g.as_matrix(1).transpose();  // n x r
            continue;
        }
        const Eigen::MatrixXd& Dl = D[t.left(h)];
        const Eigen::MatrixXd& Dr = D[t.right(h)];
        int rr = g.dims[1], rp = g.dims[2];
        Eigen::MatrixXd T1 = Dl * g.as_matrix(1);  // nA x (rr*rp)
        Eigen::Index nA = Dl.rows(), nB = Dr.rows();
        Eigen::MatrixXd R(nA * nB, rp);
        Eigen::MatrixXd Mth(nA, rr);
        for (int th = 0; th < rp; ++th) {
            for (int b = 0; b < rr; ++b) Mth.col(b) = T1.col(b * rp + th);
            Eigen::MatrixXd bt = (Mth * Dr.transpose()).transpose();  // nB x nA
            // column-major bt reads out row-major over (ia, ib)
            R.col(th) = Eigen::Map<const Eigen::VectorXd>(bt.data(), nA * nB);
        }
        D[h] = std::move(R);
        D[t.left(h)].resize(0, 0);
        D[t.right(h)].resize(0, 0);
    }

    const TensorComponent& g = f.comp[1];
    const Eigen::MatrixXd& Dl = D[2];
    const Eigen::MatrixXd& Dr = D[3];
    Eigen::Index nA = Dl.rows(), nB = Dr.rows();
    int rr = g.dims[1];
    int np = t.has_root_leg() ? t.root_leg_n() : 1;
    Eigen::MatrixXd T1 = Dl * g.as_matrix(1);  // nA x (rr*np)
    Eigen::VectorXd out(nA * nB * np);
    Eigen::MatrixXd Mth(nA, rr);
    for (int m = 0; m < np; ++m) {
        for (int b = 0; b < rr; ++b) Mth.col(b) = T1.col(b * np + m);
        Eigen::MatrixXd block = Mth * Dr.transpose();  // nA x nB
        for (Eigen::Index ia = 0; ia < nA; ++ia)
            for (Eigen::Index ib = 0; ib < nB; ++ib) out[(ia * nB + ib) * np + m] = block(ia, ib);
    }
    return out;
}

Fht add(const Fht& a, const Fht& b) {
    if (!a.tree.same_shape(b.tree) || a.leaf_basis != b.leaf_basis ||
        (a.tree.has_root_leg() && a.root_basis != b.root_basis))
        throw std::invalid_argument("add: incompatible FHT structures");

    if (a.tree.node_count() == 1) {
        Fht out = a;
        out.comp[1].data += b.comp[1].data;
        return out;
    }

    DyadicTree t = a.tree;
    for (int h = 2; h <= t.max_node_id(); ++h)
        t.set_parent_rank(h, a.tree.parent_rank(h) + b.tree.parent_rank(h));
    Fht out(t, a.leaf_basis, a.root_basis);

    // Block placement: copy a source component into `go` with bond axes
    // offset and the physical root leg (if any) shared.
    auto place = [&](TensorComponent& go, const TensorComponent& g, int off_l, int off_r,
                     int off_p, bool root) {
        int np = root ? (g.ndim() == 3 ? g.dims[2] : 1) : g.dims[2];
        int go_np = root ? (go.ndim() == 3 ? go.dims[2] : 1) : go.dims[2];
        for (int al = 0; al < g.dims[0]; ++al)
            for (int ar = 0; ar < g.dims[1]; ++ar)
                for (int p = 0; p < np; ++p) {
                    Eigen::Index src = (Eigen::Index(al) * g.dims[1] + ar) * np + p;
                    Eigen::Index dst =
                        (Eigen::Index(al + off_l) * go.dims[1] + (ar + off_r)) * go_np +
                        (root ? p : p + off_p);
                    go.data[dst] = g.data[src];
                }
    };

    for (int h = 1; h <= t.max_node_id(); ++h) {
        const TensorComponent& ga = a.comp[h];
        const TensorComponent& gb = b.comp[h];
        TensorComponent& go = out.comp[h];
        go.set_zero();
        if (t.is_leaf(h)) {
            go.as_matrix(1).topRows(ga.dims[0]) = ga.as_matrix(1);
            go.as_matrix(1).bottomRows(gb.dims[0]) = gb.as_matrix(1);
        } else if (t.is_root(h)) {
            place(go, ga, 0, 0, 0, true);
            place(go, gb, ga.dims[0], ga.dims[1], 0, true);
        } else {
            place(go, ga, 0, 0, 0, false);
            place(go, gb, ga.dims[0], ga.dims[1], ga.dims[2], false);
        }
    }
    return out;
}

void scale(Fht& f, double s) { f.comp[1].data *= s; }

namespace {

int parent_axis_of(const DyadicTree& t, int c) { return t.is_leaf(c) ? 0 : 2; }

void orthogonalize_up(Fht& f) {
    DyadicTree& t = f.tree;
    for (int h = t.max_node_id(); h >= 2; --h) {
        TensorComponent& g = f.comp[h];
        Eigen::MatrixXd M;
        if (t.is_leaf(h)) {
            M = g.as_matrix(1).transpose();  // n x rp
        } else {
            M = g.as_matrix(2);  // (rl*rr) x rp
        }
        ThinQR qr = thin_qr(M);
        int k = static_cast<int>(qr.Q.cols());
        if (t.is_leaf(h)) {
            TensorComponent ng({k, g.dims[1]});
            ng.as_matrix(1) = qr.Q.transpose();
            g = std::move(ng);
        } else {
            TensorComponent ng({g.dims[0], g.dims[1], k});
            ng.as_matrix(2) = qr.Q;
            g = std::move(ng);
        }
        int axis = (h % 2 == 0) ? 0 : 1;
        f.comp[t.parent(h)] = mode_multiply(f.comp[t.parent(h)], axis, qr.R);
        t.set_parent_rank(h, k);
    }
}

int truncation_rank(const Eigen::VectorXd& sv, double tol, int max_rank) {
    int r = 0;
    double smax = sv.size() ? sv[0] : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol * smax && sv[i] > 0.0) ++r;
    if (max_rank > 0) r = std::min(r, max_rank);
    return std::max(r, 1);
}

// Unfold comp[h] with `axis` leading, as (dims[axis] x rest).
Eigen::MatrixXd unfold_axis_front(const TensorComponent& g, int axis) {
    int nd = g.ndim();
    std::vector<int> order(nd);
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[0], order[axis]);
    TensorComponent p = (axis == 0) ? g : permute_axes(g, order);
    return p.as_matrix(1);
}

void fold_axis_front(TensorComponent& g, int axis, const Eigen::MatrixXd& M) {
    int nd = g.ndim();
    std::vector<int> order(nd);
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[0], order[axis]);
    std::vector<int> pdims(nd);
    for (int i = 0; i < nd; ++i) pdims[i] = g.dims[order[i]];
    pdims[0] = static_cast<int>(M.rows());
    TensorComponent p(pdims);
    p.as_matrix(1) = M;
    g = (axis == 0) ? std::move(p) : permute_axes(p, order);
}

void truncate_down(Fht& f, int h, double tol, int max_rank) {
    DyadicTree& t = f.tree;
    if (t.is_leaf(h)) return;
    const int children[2] = {t.left(h), t.right(h)};
    for (int axis = 0; axis < 2; ++axis) {
        int c = children[axis];
        Eigen::MatrixXd M = unfold_axis_front(f.comp[h], axis);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        int r = truncation_rank(svd.singularValues(), tol, max_rank);
        Eigen::MatrixXd U = svd.matrixU().leftCols(r);
        f.comp[c] = mode_multiply(f.comp[c], parent_axis_of(t, c), Eigen::MatrixXd(U.transpose()));
        Eigen::MatrixXd core =
            svd.singularValues().head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
        fold_axis_front(f.comp[h], axis, core);
        t.set_parent_rank(c, r);
    }
    for (int axis = 0; axis < 2; ++axis) {
        int c = children[axis];
        if (t.is_leaf(c)) continue;
        // move the orthogonality center into c
        Eigen::MatrixXd M = unfold_axis_front(f.comp[h], axis);
        ThinQR qr = thin_qr(M.transpose());  // M = R^T Q^T
        fold_axis_front(f.comp[h], axis, Eigen::MatrixXd(qr.Q.transpose()));
        f.comp[c] = mode_multiply(f.comp[c], 2, qr.R);
        t.set_parent_rank(c, static_cast<int>(qr.R.rows()));

        truncate_down(f, c, tol, max_rank);

        // move it back to h
        Eigen::MatrixXd Mc = f.comp[c].as_matrix(2);
        ThinQR qc = thin_qr(Mc);
        TensorComponent nc({f.comp[c].dims[0], f.comp[c].dims[1], static_cast<int>(qc.Q.cols())});
        nc.as_matrix(2) = qc.Q;
        f.comp[c] = std::move(nc);
        f.comp[h] = mode_multiply(f.comp[h], axis, qc.R);
        t.set_parent_rank(c, static_cast<int>(qc.R.rows()));
    }
}

}  // namespace

void round_fht(Fht& f, double tol, int max_rank) {
    if (f.tree.node_count() == 1) return;
    orthogonalize_up(f);
    truncate_down(f, DyadicTree::root(), tol, max_rank);
}

Fht apply_markov(const Fht& P, const Fht& v) {
    const DyadicTree& tp = P.tree;
    const DyadicTree& tv = v.tree;
    if (tv.has_root_leg()) throw std::invalid_argument("apply_markov: v must not carry a root leg");
    if (tp.num_leaves() != 2 * tv.num_leaves())
        throw std::invalid_argument("apply_markov: P must interlace (x, x') over 2d leaves");
    if (P.leaf_basis != v.leaf_basis)
        throw std::invalid_argument("apply_markov: state bases differ");
    if (tv.node_count() == 1)
        throw std::invalid_argument("apply_markov: d = 1 operator application not supported");

    int d = tv.num_leaves();
    DyadicTree tq = DyadicTree::build(d, 1, tv.leaf_n(), tp.root_leg_n());
    for (int h = 2; h < d; ++h) tq.set_parent_rank(h, tp.parent_rank(h) * tv.parent_rank(h));
    // leaf edges of the output: P's level-(L) node h pairs with v's leaf h
    for (int j = 0; j < d; ++j) {
        int h = d + j;
        tq.set_parent_rank(h, tp.parent_rank(h) * tv.parent_rank(h));
    }
    Fht q(tq, v.leaf_basis, P.root_basis);

    for (int h = 1; h <= tq.max_node_id(); ++h) {
        if (tq.is_leaf(h)) {
            // P's level-L node pairs the x_j and x'_j leaves; the x' leg is
            // integrated against v's leaf (delta contraction).
            const TensorComponent& pair = P.comp[h];        // (ra, rb, rp)
            const TensorComponent& px = P.comp[2 * h];      // (ra, n) leaf of x_j
            const TensorComponent& py = P.comp[2 * h + 1];  // (rb, n) leaf of x'_j
            const TensorComponent& vlf = v.comp[h];         // (rv, n)
            Eigen::MatrixXd s = py.as_matrix(1) * vlf.as_matrix(1).transpose();  // rb x rv
            TensorComponent tmp = mode_multiply(pair, 1, Eigen::MatrixXd(s.transpose()));
            TensorComponent perm = permute_axes(tmp, {2, 1, 0});  // (rp, rv, ra)
            q.comp[h].as_matrix(1) = perm.as_matrix(2) * px.as_matrix(1);
        } else if (tq.is_root(h)) {
            const TensorComponent& gp = P.comp[h];  // (pl, pr[, na])
            const TensorComponent& gv = v.comp[h];  // (vl, vr)
            TensorComponent& out = q.comp[h];
            int pl = gp.dims[0], pr = gp.dims[1];
            int vl = gv.dims[0], vr = gv.dims[1];
            int na = gp.ndim() == 3 ? gp.dims[2] : 1;
            for (int a1 = 0; a1 < pl; ++a1)
                for (int b1 = 0; b1 < pr; ++b1)
                    for (int m = 0; m < na; ++m) {
                        double pv = gp.data[(Eigen::Index(a1) * pr + b1) * na + m];
                        for (int a2 = 0; a2 < vl; ++a2)
                            for (int b2 = 0; b2 < vr; ++b2) {
                                Eigen::Index ia = Eigen::Index(a1) * vl + a2;
                                Eigen::Index ib = Eigen::Index(b1) * vr + b2;
                                out.data[(ia * out.dims[1] + ib) * na + m] =
                                    pv * gv.data[Eigen::Index(a2) * vr + b2];
                            }
                    }
        } else {
            const TensorComponent& gp = P.comp[h];  // (pl, pr, pp)
            const TensorComponent& gv = v.comp[h];  // (vl, vr, vp)
            TensorComponent& out = q.comp[h];
            int pl = gp.dims[0], pr = gp.dims[1], pp = gp.dims[2];
            int vl = gv.dims[0], vr = gv.dims[1], vp = gv.dims[2];
            for (int a1 = 0; a1 < pl; ++a1)
                for (int b1 = 0; b1 < pr; ++b1)
                    for (int p1 = 0; p1 < pp; ++p1) {
                        double pv = gp.data[(Eigen::Index(a1) * pr + b1) * pp + p1];
                        for (int a2 = 0; a2 < vl; ++a2)
                            for (int b2 = 0; b2 < vr; ++b2)
                                for (int p2 = 0; p2 < vp; ++p2) {
                                    Eigen::Index ia = Eigen::Index(a1) * vl + a2;
                                    Eigen::Index ib = Eigen::Index(b1) * vr + b2;
                                    Eigen::Index ip = Eigen::Index(p1) * vp + p2;
                                    out.data[(ia * out.dims[1] + ib) * out.dims[2] + ip] =
                                        pv * gv.data[(Eigen::Index(a2) * vr + b2) * vp + p2];
                                }
                    }
        }
    }
    return q;
}

Fht apply_markov(const Fht& P, const Fht& v, const Fht& f_term, double dt) {
    Fht q = apply_markov(P, v);
    Fht fdt = f_term;
    scale(fdt, dt);
    return add(q, fdt);
}

Fht sum_of_univariate(const DyadicTree& tree, const BasisSet& leaf_basis,
                      const std::vector<Eigen::VectorXd>& leaf_coeffs,
                      const BasisSet* root_basis, const Eigen::VectorXd* root_coeffs) {
    int d = tree.num_leaves();
    if (static_cast<int>(leaf_coeffs.size()) != d)
        throw std::invalid_argument("sum_of_univariate: need one coefficient vector per leaf");
    int n = leaf_basis.size();
    Eigen::VectorXd const_leaf = Eigen::VectorXd::Zero(n);
    const_leaf[0] = std::sqrt(leaf_basis.length());

    bool leg = tree.has_root_leg();
    if (leg && (!root_basis || tree.root_leg_n() != root_basis->size()))
        throw std::invalid_argument("sum_of_univariate: root leg requires a matching basis");

    if (tree.node_count() == 1) {
        Fht f(tree, leaf_basis, leg ? *root_basis : BasisSet());
        if (!leg) {
            f.comp[1].data = leaf_coeffs[0];
        } else {
            int na = tree.root_leg_n();
            Eigen::VectorXd const_a = Eigen::VectorXd::Zero(na);
            const_a[0] = std::sqrt(root_basis->length());
            Eigen::VectorXd ra = root_coeffs ? *root_coeffs : Eigen::VectorXd::Zero(na);
            for (int i = 0; i < n; ++i)
                for (int m = 0; m < na; ++m)
                    f.comp[1].data[Eigen::Index(i) * na + m] =
                        leaf_coeffs[0][i] * const_a[m] + const_leaf[i] * ra[m];
        }
        return f;
    }

    if (n < 2)
        throw std::invalid_argument("sum_of_univariate: basis too small to carry the sum channel");
    DyadicTree t = DyadicTree::build(d, 2, n, tree.root_leg_n());
    Fht f(t, leaf_basis, leg ? *root_basis : BasisSet());
    for (int h = 1; h <= t.max_node_id(); ++h) {
        TensorComponent& g = f.comp[h];
        g.set_zero();
        if (t.is_leaf(h)) {
            int j = t.leaf_index(h);
            if (g.dims[0] == 1) {
                // rank capped at 1 only when n == 1 (constant basis)
                g.as_matrix(1).row(0) = leaf_coeffs[j].transpose();
            } else {
                g.as_matrix(1).row(0) = const_leaf.transpose();
                g.as_matrix(1).row(1) = leaf_coeffs[j].transpose();
            }
        } else if (t.is_root(h)) {
            if (!leg) {
                g.at({1, 0}) = 1.0;
                g.at({0, 1}) = 1.0;
            } else {
                int na = t.root_leg_n();
                Eigen::VectorXd const_a = Eigen::VectorXd::Zero(na);
                const_a[0] = std::sqrt(root_basis->length());
                for (int m = 0; m < na; ++m) {
                    g.at({1, 0, m}) = const_a[m];
                    g.at({0, 1, m}) = const_a[m];
                    if (root_coeffs) g.at({0, 0, m}) = (*root_coeffs)[m];
                }
            }
        } else {
            g.at({0, 0, 0}) = 1.0;
            g.at({1, 0, 1}) = 1.0;
            g.at({0, 1, 1}) = 1.0;
        }
    }
    return f;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
double read_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace

void save_fht(const Fht& f, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little,
                  "FHT1 serialization assumes a little-endian host");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_fht: cannot open " + path.string());
    os.write("FHT1", 4);
    char version = 1;
    os.put(version);
    os.put(static_cast<char>(f.tree.levels()));
    os.put(f.tree.has_root_leg() ? 1 : 0);
    int legs = f.tree.num_leaves() + (f.tree.has_root_leg() ? 1 : 0);
    write_u32(os, static_cast<std::uint32_t>(legs));
    for (int j = 0; j < f.tree.num_leaves(); ++j) {
        write_f64(os, f.leaf_basis.lo());
        write_f64(os, f.leaf_basis.hi());
        write_u32(os, static_cast<std::uint32_t>(f.leaf_basis.size()));
    }
    if (f.tree.has_root_leg()) {
        write_f64(os, f.root_basis.lo());
        write_f64(os, f.root_basis.hi());
        write_u32(os, static_cast<std::uint32_t>(f.root_basis.size()));
    }
    write_u32(os, static_cast<std::uint32_t>(f.tree.node_count()));
    for (int h = 1; h <= f.tree.max_node_id(); ++h) {
        write_u32(os, static_cast<std::uint32_t>(f.tree.level_of(h)));
        write_u32(os, static_cast<std::uint32_t>(f.tree.block_of(h)));
        write_u32(os, static_cast<std::uint32_t>(f.comp[h].ndim()));
        for (int d : f.comp[h].dims) write_u32(os, static_cast<std::uint32_t>(d));
    }
    for (int h = 1; h <= f.tree.max_node_id(); ++h)
        os.write(reinterpret_cast<const char*>(f.comp[h].data.data()),
                 static_cast<std::streamsize>(f.comp[h].size() * 8));
    if (!os) throw std::runtime_error("save_fht: write failed for " + path.string());
}

Fht load_fht(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_fht: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FHT1", 4) != 0)
        throw std::runtime_error("load_fht: bad magic bytes");
    int version = is.get();
    if (version != 1) throw std::runtime_error("load_fht: unsupported version");
    int levels = is.get();
    bool leg = is.get() != 0;
    int legs = static_cast<int>(read_u32(is));
    int num_leaves = 1 << levels;
    if (legs != num_leaves + (leg ? 1 : 0)) throw std::runtime_error("load_fht: leg count mismatch");
    double lo = 0, hi = 1;
    int n = 1;
    for (int j = 0; j < num_leaves; ++j) {
        double l = read_f64(is), h = read_f64(is);
        int nn = static_cast<int>(read_u32(is));
        if (j == 0) {
            lo = l;
            hi = h;
            n = nn;
        } else if (l != lo || h != hi || nn != n) {
            throw std::runtime_error("load_fht: heterogeneous leaf bases unsupported");
        }
    }
    BasisSet leaf_b(n - 1, lo, hi);
    BasisSet root_b;
    int na = 0;
    if (leg) {
        double l = read_f64(is), h = read_f64(is);
        na = static_cast<int>(read_u32(is));
        root_b = BasisSet(na - 1, l, h);
    }
    int node_count = static_cast<int>(read_u32(is));
    if (node_count != 2 * num_leaves - 1) throw std::runtime_error("load_fht: node count mismatch");

    std::vector<std::vector<int>> dims(node_count + 1);
    for (int h = 1; h <= node_count; ++h) {
        read_u32(is);  // level
        read_u32(is);  // block
        int nd = static_cast<int>(read_u32(is));
        dims[h].resize(nd);
        for (int i = 0; i < nd; ++i) dims[h][i] = static_cast<int>(read_u32(is));
    }

    DyadicTree t = DyadicTree::build(num_leaves, 1, n, na);
    if (node_count > 1) {
        for (int h = 2; h <= node_count; ++h) {
            int r = t.is_leaf(h) ? dims[h][0] : dims[h][2];
            if (t.is_leaf(h) && static_cast<int>(dims[h].size()) != 2)
                throw std::runtime_error("load_fht: leaf component must have 2 axes");
            t.set_parent_rank(h, r);
        }
    }
    Fht f(t, leaf_b, root_b);
    for (int h = 1; h <= node_count; ++h) {
        if (f.comp[h].dims != dims[h]) {
            f.comp[h] = TensorComponent(dims[h]);
        }
        is.read(reinterpret_cast<char*>(f.comp[h].data.data()),
                static_cast<std::streamsize>(f.comp[h].size() * 8));
    }
    if (!is) throw std::runtime_error("load_fht: truncated payload");
    f.check_consistent();
    return f;
}

}  // namespace fhtc
