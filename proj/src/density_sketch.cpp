#include "fhtc/density_sketch.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include "fhtc/sketch_interp.hpp"  // gauge_factor

namespace fhtc {

namespace {

Eigen::MatrixXd pinv(const Eigen::MatrixXd& M, double rel_tol = 1e-12) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    double cut = s.size() ? rel_tol * s[0] : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut && s[i] > 0.0) inv[i] = 1.0 / s[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// A monomial is a list of (variable slot, basis index >= 1); the empty list
// is the constant function 1.
using Monomial = std::vector<std::pair<int, int>>;

struct SketchSet {
    std::vector<int> vars;           // z-variable indices (2d = action)
    std::vector<Monomial> monomials;
    Eigen::MatrixXd W;               // r~ x T random combination weights
    bool raw_basis = false;          // single-variable cluster: identity over psi
};

void enumerate_monomials(const std::vector<int>& caps, int max_total, int slot, int remaining,
                         Monomial& cur, std::vector<Monomial>& out) {
    if (slot == static_cast<int>(caps.size())) {
        out.push_back(cur);
        return;
    }
    int lim = std::min(caps[slot], remaining);
    for (int deg = 0; deg <= lim; ++deg) {
        if (deg > 0) cur.emplace_back(slot, deg);
        enumerate_monomials(caps, max_total, slot + 1, remaining - deg, cur, out);
        if (deg > 0) cur.pop_back();
    }
}

SketchSet make_sketch_set(const std::vector<int>& vars, int count, const std::vector<int>& caps,
                          std::uint64_t seed) {
    SketchSet s;
    s.vars = vars;
    if (vars.size() == 1) {
        s.raw_basis = true;
        return s;
    }
    // smallest total degree whose monomial family spans at least `count`
    for (int D = 2;; ++D) {
        std::vector<Monomial> mono;
        Monomial cur;
        enumerate_monomials(caps, D, 0, D, cur, mono);
        int cap_sum = 0;
        for (int c : caps) cap_sum += c;
        if (static_cast<int>(mono.size()) >= count || D >= cap_sum) {
            s.monomials = std::move(mono);
            break;
        }
    }
    if (static_cast<int>(s.monomials.size()) < count)
        throw std::invalid_argument(
            "estimate_operator: sketch rank exceeds the cluster's function space");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    s.W.resize(count, s.monomials.size());
    for (Eigen::Index i = 0; i < s.W.rows(); ++i)
        for (Eigen::Index j = 0; j < s.W.cols(); ++j) s.W(i, j) = gauss(rng);
    return s;
}

// Sketch values for a block: rows = samples, cols = sketch functions.
Eigen::MatrixXd sketch_block(const SketchSet& s, const std::vector<Eigen::MatrixXd>& basis_vals) {
    if (s.raw_basis) return basis_vals[s.vars[0]];
    Eigen::Index B = basis_vals[s.vars[0]].rows();
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Ones(B, s.monomials.size());
    for (size_t t = 0; t < s.monomials.size(); ++t)
        for (const auto& [slot, deg] : s.monomials[t])
            Phi.col(t) = Phi.col(t).cwiseProduct(basis_vals[s.vars[slot]].col(deg));
    return Phi * s.W.transpose();
}

std::vector<int> complement_with_action(const DyadicTree& t, int h) {
    std::vector<int> cl = t.cluster(h);
    std::vector<int> out;
    for (int j = 0; j < cl.front(); ++j) out.push_back(j);
    for (int j = cl.back() + 1; j < t.num_leaves(); ++j) out.push_back(j);
    out.push_back(t.num_leaves());  // the action slot
    return out;
}

}  // namespace

Fht estimate_operator(const Eigen::MatrixXd& samples, const DyadicTree& tree,
                      const BasisSet& state_basis, const BasisSet& action_basis,
                      const OperatorSketchOptions& opt, OperatorSketchStats* stats) {
    if (!tree.has_root_leg())
        throw std::invalid_argument("estimate_operator: tree must carry the action leg");
    if (tree.num_leaves() % 2 != 0 || tree.node_count() == 1)
        throw std::invalid_argument("estimate_operator: tree must interlace (x, x') pairs");
    int two_d = tree.num_leaves();
    if (samples.cols() != two_d + 1)
        throw std::invalid_argument("estimate_operator: samples must have 2d+1 columns");
    int n = state_basis.size(), na = action_basis.size();
    if (tree.leaf_n() != n || tree.root_leg_n() != na)
        throw std::invalid_argument("estimate_operator: tree leg sizes do not match the bases");
    Eigen::Index N = samples.rows();

    // sketch sets per non-root node: cluster side and complement side
    int ids = tree.max_node_id() + 1;
    std::vector<SketchSet> cl_sketch(ids), co_sketch(ids);
    std::vector<int> caps_state, caps_all;
    for (int h = 2; h < ids; ++h) {
        int r = tree.parent_rank(h);
        std::vector<int> cvars = tree.cluster(h);
        std::vector<int> caps(cvars.size(), n - 1);
        int r_cl = tree.is_leaf(h) ? n : r + opt.margin;
        cl_sketch[h] = make_sketch_set(cvars, r_cl, caps,
                                       opt.seed ^ (0x9e3779b97f4a7c15ULL * (2 * h)));
        std::vector<int> ovars = complement_with_action(tree, h);
        std::vector<int> ocaps(ovars.size(), n - 1);
        ocaps.back() = na - 1;
        co_sketch[h] = make_sketch_set(ovars, r + opt.margin, ocaps,
                                       opt.seed ^ (0x9e3779b97f4a7c15ULL * (2 * h + 1)));
    }

    auto sketch_count = [&](const SketchSet& s) -> Eigen::Index {
        return s.raw_basis ? n : s.W.rows();
    };

    // empirical moment floor
    std::int64_t biggest = 0;
    for (int h = 1; h < ids; ++h) {
        std::int64_t sz;
        if (tree.is_leaf(h)) {
            sz = static_cast<std::int64_t>(n) * sketch_count(co_sketch[h]);
        } else {
            std::int64_t fa = sketch_count(cl_sketch[tree.left(h)]);
            std::int64_t fb = sketch_count(cl_sketch[tree.right(h)]);
            std::int64_t ff = tree.is_root(h) ? na : sketch_count(co_sketch[h]);
            sz = fa * fb * ff;
        }
        biggest = std::max(biggest, sz);
    }
    if (N < 10 * biggest)
        throw std::invalid_argument(
            "estimate_operator: need at least 10x the largest sketched system in samples (" +
            std::to_string(10 * biggest) + ", got " + std::to_string(N) + ")");

    // moment accumulators
    std::vector<Eigen::MatrixXd> Z(ids);
    std::vector<TensorComponent> B(ids);
    for (int h = 2; h < ids; ++h)
        Z[h] = Eigen::MatrixXd::Zero(sketch_count(cl_sketch[h]), sketch_count(co_sketch[h]));
    for (int h = 1; h < ids; ++h) {
        if (tree.is_leaf(h)) continue;
        int fa = static_cast<int>(sketch_count(cl_sketch[tree.left(h)]));
        int fb = static_cast<int>(sketch_count(cl_sketch[tree.right(h)]));
        int ff = tree.is_root(h) ? na : static_cast<int>(sketch_count(co_sketch[h]));
        B[h] = TensorComponent({fa, fb, ff});
    }

    std::vector<Eigen::MatrixXd> basis_vals(two_d + 1);
    std::vector<Eigen::MatrixXd> Scl(ids), Sco(ids);
    for (Eigen::Index start = 0; start < N; start += opt.block) {
        Eigen::Index b = std::min<Eigen::Index>(opt.block, N - start);
        for (int v = 0; v <= two_d; ++v) {
            const BasisSet& bs = (v == two_d) ? action_basis : state_basis;
            basis_vals[v].resize(b, bs.size());
            for (Eigen::Index i = 0; i < b; ++i)
                basis_vals[v].row(i) = bs.eval(samples(start + i, v)).transpose();
        }
        for (int h = 2; h < ids; ++h) {
            Scl[h] = sketch_block(cl_sketch[h], basis_vals);
            Sco[h] = sketch_block(co_sketch[h], basis_vals);
        }
        for (int h = 2; h < ids; ++h) Z[h].noalias() += Scl[h].transpose() * Sco[h];
        for (int h = 1; h < ids; ++h) {
            if (tree.is_leaf(h)) continue;
            const Eigen::MatrixXd& Sa = Scl[tree.left(h)];
            const Eigen::MatrixXd& Sb = Scl[tree.right(h)];
            const Eigen::MatrixXd& Sf = tree.is_root(h) ? basis_vals[two_d] : Sco[h];
            Eigen::MatrixXd kr(b, Sb.cols() * Sf.cols());
            for (Eigen::Index p = 0; p < Sb.cols(); ++p)
                for (Eigen::Index q = 0; q < Sf.cols(); ++q)
                    kr.col(p * Sf.cols() + q) = Sb.col(p).cwiseProduct(Sf.col(q));
            B[h].as_matrix(1).noalias() += Sa.transpose() * kr;
        }
    }
    double invN = 1.0 / static_cast<double>(N);
    for (int h = 2; h < ids; ++h) Z[h] *= invN;
    for (int h = 1; h < ids; ++h)
        if (!tree.is_leaf(h)) B[h].data *= invN;

    // gauge fixing per edge
    OperatorSketchStats local;
    local.samples = N;
    std::vector<Eigen::MatrixXd> A(ids), Abar(ids);
    DyadicTree t_out = tree;
    for (int h = 2; h < ids; ++h) {
        int before = local.rank_warnings;
        auto [a, abar] = gauge_factor(Z[h], tree.parent_rank(h), &local.rank_warnings);
        if (local.rank_warnings != before)
            throw std::runtime_error("estimate_operator: moment matrix rank collapsed at level " +
                                     std::to_string(tree.level_of(h)) + " block " +
                                     std::to_string(tree.block_of(h)));
        A[h] = std::move(a);
        Abar[h] = std::move(abar);
        t_out.set_parent_rank(h, static_cast<int>(A[h].cols()));
    }

    Fht P(t_out, state_basis, action_basis);
    for (int h = 1; h < ids; ++h) {
        if (tree.is_root(h)) {
            TensorComponent G = mode_multiply(B[h], 0, pinv(A[tree.left(h)]));
            G = mode_multiply(G, 1, pinv(A[tree.right(h)]));
            P.comp[h] = std::move(G);
        } else if (tree.is_leaf(h)) {
            // B coincides with Z: rows are raw basis indices
            P.comp[h].as_matrix(1) = (Z[h] * pinv(Abar[h])).transpose();
        } else {
            TensorComponent G = mode_multiply(B[h], 0, pinv(A[tree.left(h)]));
            G = mode_multiply(G, 1, pinv(A[tree.right(h)]));
            G = mode_multiply(G, 2, Eigen::MatrixXd(pinv(Abar[h]).transpose()));
            P.comp[h] = std::move(G);
        }
    }

    // rescale the estimated density by Vol(X x A)
    int d = two_d / 2;
    double vol = std::pow(state_basis.length(), d) * action_basis.length();
    scale(P, vol);
    if (stats) *stats = local;
    return P;
}

double marginal_mass(const Fht& P) {
    const DyadicTree& t = P.tree;
    int d = t.num_leaves() / 2;
    std::vector<Eigen::VectorXd> leaf_vecs(t.num_leaves());
    for (int j = 0; j < t.num_leaves(); ++j) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(P.leaf_basis.size());
        v[0] = std::sqrt(P.leaf_basis.length());
        leaf_vecs[j] = v;
    }
    double integral;
    if (t.has_root_leg()) {
        Eigen::VectorXd av = Eigen::VectorXd::Zero(P.root_basis.size());
        av[0] = std::sqrt(P.root_basis.length());
        integral = P.contract_legs(leaf_vecs, &av)[0];
    } else {
        integral = P.contract_legs(leaf_vecs, nullptr)[0];
    }
    double vol = std::pow(P.leaf_basis.length(), d) *
                 (t.has_root_leg() ? P.root_basis.length() : 1.0);
    return integral / vol;
}

void save_samples(const Eigen::MatrixXd& records, const SampleSetMeta& meta,
                  const std::filesystem::path& base) {
    static_assert(std::numeric_limits<double>::is_iec559);
    if (records.cols() != 2 * meta.d + 2)
        throw std::invalid_argument("save_samples: records must have 2d+2 fields (z, o, r)");
    std::ofstream os(base, std::ios::binary);
    if (!os) throw std::runtime_error("save_samples: cannot open " + base.string());
    for (Eigen::Index i = 0; i < records.rows(); ++i)
        for (Eigen::Index j = 0; j < records.cols(); ++j) {
            double v = records(i, j);
            os.write(reinterpret_cast<const char*>(&v), 8);
        }
    nlohmann::json j;
    j["d"] = meta.d;
    j["x_lo"] = meta.x_lo;
    j["x_hi"] = meta.x_hi;
    j["a_lo"] = meta.a_lo;
    j["a_hi"] = meta.a_hi;
    j["seed"] = meta.seed;
    j["count"] = records.rows();
    j["fields"] = records.cols();
    std::ofstream js(base.string() + ".json");
    js << j.dump(2) << "\n";
}

Eigen::MatrixXd load_samples(const std::filesystem::path& base, SampleSetMeta* meta) {
    std::ifstream js(base.string() + ".json");
    if (!js) throw std::runtime_error("load_samples: missing sidecar for " + base.string());
    nlohmann::json j;
    js >> j;
    SampleSetMeta m;
    m.d = j.at("d").get<int>();
    m.x_lo = j.at("x_lo").get<double>();
    m.x_hi = j.at("x_hi").get<double>();
    m.a_lo = j.at("a_lo").get<double>();
    m.a_hi = j.at("a_hi").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.count = j.at("count").get<std::int64_t>();
    int fields = j.at("fields").get<int>();
    Eigen::MatrixXd records(m.count, fields);
    std::ifstream is(base, std::ios::binary);
    if (!is) throw std::runtime_error("load_samples: cannot open " + base.string());
    for (Eigen::Index i = 0; i < records.rows(); ++i)
        for (Eigen::Index j2 = 0; j2 < records.cols(); ++j2) {
            double v;
            is.read(reinterpret_cast<char*>(&v), 8);
            records(i, j2) = v;
        }
    if (!is) throw std::runtime_error("load_samples: truncated record file " + base.string());
    if (meta) *meta = m;
    return records;
}

}  // namespace fhtc
