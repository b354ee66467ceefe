#include <doctest.h>

#include "fhtc/fht.hpp"
#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace fhtc;

namespace {

Eigen::VectorXd dense_eval_vecs(const Fht& f, const Eigen::VectorXd& pt) {
    // <C, tensor of eval vecs> computed from the dense coefficient tensor
    Eigen::VectorXd C = contract_dense(f);
    int d = f.tree.num_leaves();
    int n = f.tree.leaf_n();
    int na = f.tree.has_root_leg() ? f.tree.root_leg_n() : 1;
    std::vector<Eigen::VectorXd> vs(d);
    for (int j = 0; j < d; ++j) vs[j] = f.leaf_basis.eval(pt[j]);
    Eigen::VectorXd av(1);
    av[0] = 1.0;
    if (f.tree.has_root_leg()) av = f.root_basis.eval(pt[d]);
    Eigen::VectorXd out(1);
    double s = 0.0;
    std::vector<int> idx(d, 0);
    Eigen::Index total = C.size();
    for (Eigen::Index flat = 0; flat < total; ++flat) {
        Eigen::Index rem = flat;
        int m = static_cast<int>(rem % na);
        rem /= na;
        double w = av[m];
        for (int j = d - 1; j >= 0; --j) {
            w *= vs[j][static_cast<int>(rem % n)];
            rem /= n;
        }
        s += C[flat] * w;
    }
    out[0] = s;
    return out;
}

}  // namespace

TEST_CASE("build_tree shapes") {
    DyadicTree t = DyadicTree::build(4, 2, 3);
    CHECK(t.node_count() == 7);
    CHECK(t.levels() == 2);
    CHECK_FALSE(t.has_root_leg());

    DyadicTree tq = DyadicTree::build(4, 2, 3, 5);
    CHECK(tq.has_root_leg());
    Fht q = Fht::zeros(tq, legendre_basis(2, -2, 2), legendre_basis(4, -1, 1));
    CHECK(q.comp[1].ndim() == 3);
    CHECK(q.comp[1].dims[2] == 5);

    DyadicTree t1 = DyadicTree::build(1, 2, 3);
    CHECK(t1.node_count() == 1);

    CHECK_THROWS_AS(DyadicTree::build(3, 2, 3), std::invalid_argument);
    CHECK_THROWS_AS(DyadicTree::build(6, 2, 3), std::invalid_argument);
}

TEST_CASE("rank schedule capped by smaller-side dimension") {
    DyadicTree t = DyadicTree::build(4, 10, 2);
    for (int j = 0; j < 4; ++j) CHECK(t.parent_rank(t.leaf_node(j)) == 2);
    CHECK(t.parent_rank(2) == 4);
    CHECK(t.parent_rank(3) == 4);
}

TEST_CASE("evaluate: zero root gives zero everywhere") {
    Fht f = Fht::random(DyadicTree::build(4, 3, 3), legendre_basis(2, -2, 2), BasisSet(), 11);
    f.comp[1].set_zero();
    std::mt19937_64 rng(0);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd p = oracles::random_point(4, -2, 2, rng);
        CHECK(f.evaluate(p) == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("evaluate: explicit constant function at d=2, n=1") {
    DyadicTree t = DyadicTree::build(2, 1, 1);
    Fht f = Fht::zeros(t, legendre_basis(0, -2, 2));
    f.comp[1].data[0] = 1.0;
    f.comp[2].data[0] = 2.0;  // coefficient 2 against psi_0 = 1/2
    f.comp[3].data[0] = 2.0;
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd p = oracles::random_point(2, -2, 2, rng);
        CHECK(f.evaluate(p) == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("evaluate agrees with dense contraction oracle") {
    std::mt19937_64 rng(42);
    for (auto [d, n, r, leg] : {std::tuple{4, 3, 3, 0}, std::tuple{8, 4, 4, 0},
                                std::tuple{4, 3, 2, 3}, std::tuple{2, 4, 4, 2}}) {
        DyadicTree t = DyadicTree::build(d, r, n, leg);
        Fht f = Fht::random(t, legendre_basis(n - 1, -2, 2), legendre_basis(std::max(leg - 1, 0), -1, 1),
                            97 + d + leg);
        for (int k = 0; k < 25; ++k) {
            Eigen::VectorXd p = oracles::random_point(f.input_dim(), -1.5, 1.5, rng);
            double a = f.evaluate(p);
            double b = dense_eval_vecs(f, p)[0];
            CHECK(a == doctest::Approx(b).epsilon(1e-12));
        }
    }
}

TEST_CASE("contract_dense: separable rank-1 FHT gives the outer product") {
    int d = 4, n = 3;
    DyadicTree t = DyadicTree::build(d, 1, n);
    Fht f = Fht::zeros(t, legendre_basis(n - 1, -1, 1));
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<Eigen::VectorXd> cs(d);
    for (int j = 0; j < d; ++j) {
        cs[j].resize(n);
        for (int i = 0; i < n; ++i) cs[j][i] = g(rng);
        f.comp[t.leaf_node(j)].as_matrix(1).row(0) = cs[j].transpose();
    }
    f.comp[1].data[0] = 1.0;
    f.comp[2].data[0] = 1.0;
    f.comp[3].data[0] = 1.0;
    Eigen::VectorXd C = contract_dense(f);
    for (int i0 = 0; i0 < n; ++i0)
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2)
                for (int i3 = 0; i3 < n; ++i3) {
                    double want = cs[0][i0] * cs[1][i1] * cs[2][i2] * cs[3][i3];
                    CHECK(C[((i0 * n + i1) * n + i2) * n + i3] ==
                          doctest::Approx(want).epsilon(1e-13));
                }
}

TEST_CASE("contract_dense reproduces evaluate on a tensor grid") {
    int d = 4, n = 2;
    Fht f = Fht::random(DyadicTree::build(d, 2, n), legendre_basis(n - 1, -1, 1), BasisSet(), 3);
    double grid[3] = {-0.8, 0.1, 0.9};
    Eigen::VectorXd p(d);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
                for (int e = 0; e < 3; ++e) {
                    p << grid[a], grid[b], grid[c], grid[e];
                    CHECK(f.evaluate(p) == doctest::Approx(dense_eval_vecs(f, p)[0]).epsilon(1e-12));
                }
}

TEST_CASE("contract_dense: zero root and size cap") {
    Fht f = Fht::random(DyadicTree::build(2, 2, 3), legendre_basis(2, -1, 1), BasisSet(), 8);
    f.comp[1].set_zero();
    CHECK(contract_dense(f).norm() == 0.0);

    Fht big = Fht::random(DyadicTree::build(16, 2, 4), legendre_basis(3, -1, 1), BasisSet(), 9);
    CHECK_THROWS_AS(contract_dense(big), std::invalid_argument);  // 4^16 > 1e7
}

TEST_CASE("evaluate is linear in a single component") {
    std::mt19937_64 rng(17);
    Fht f = Fht::random(DyadicTree::build(8, 3, 3, 2), legendre_basis(2, -2, 2),
                        legendre_basis(1, -1, 1), 21);
    Eigen::VectorXd p = oracles::random_point(f.input_dim(), -1, 1, rng);
    for (int h : {1, 2, 5, f.tree.leaf_node(3)}) {
        Eigen::VectorXd g1 = Eigen::VectorXd::Random(f.comp[h].size());
        Eigen::VectorXd g2 = Eigen::VectorXd::Random(f.comp[h].size());
        double alpha = 0.37, beta = -1.21;
        f.comp[h].data = g1;
        double e1 = f.evaluate(p);
        f.comp[h].data = g2;
        double e2 = f.evaluate(p);
        f.comp[h].data = alpha * g1 + beta * g2;
        double e = f.evaluate(p);
        CHECK(e == doctest::Approx(alpha * e1 + beta * e2).epsilon(1e-12));
    }
}

TEST_CASE("grid_to_leaf permutations") {
    // Delta = 1: identity
    auto p1 = grid_to_leaf(1, 3);
    for (int i = 0; i < 8; ++i) CHECK(p1[i] == i);

    // Delta = 2, mu = 1
    auto p2 = grid_to_leaf(2, 1);
    CHECK(p2[0] == 0);  // (0,0)
    CHECK(p2[1] == 1);  // (0,1)
    CHECK(p2[2] == 2);  // (1,0)
    CHECK(p2[3] == 3);  // (1,1)

    // Delta = 2, mu = 2: (i1, i2) = (1, 0) -> 0b0010 = 2
    auto p3 = grid_to_leaf(2, 2);
    CHECK(p3[1 * 4 + 0] == 2);

    // bijectivity / inverse composition
    for (int mu = 0; mu <= 4; ++mu) {
        for (int Delta : {1, 2}) {
            VariableLayout lay(Delta, mu);
            for (int g = 0; g < lay.size(); ++g) CHECK(lay.to_grid(lay.to_leaf(g)) == g);
        }
    }
}

namespace {

// Identity-pairing operator: coefficient copy between x and x' legs,
// constant in the action.
Fht identity_pairing_operator(int d, const BasisSet& state, const BasisSet& action) {
    int n = state.size();
    DyadicTree t = DyadicTree::build(2 * d, n, n, action.size());
    for (int h = 2; h < 2 * d; ++h) t.set_parent_rank(h, h >= d ? 1 : 1);
    // pair-level nodes sit at ids d..2d-1; their parent edges have rank 1,
    // leaf edges rank n
    for (int j = 0; j < 2 * d; ++j) t.set_parent_rank(t.leaf_node(j), n);
    Fht P = Fht::zeros(t, state, action);
    for (int h = 2; h <= t.max_node_id(); ++h) {
        TensorComponent& g = P.comp[h];
        if (t.is_leaf(h)) {
            g.as_matrix(1) = Eigen::MatrixXd::Identity(n, n);
        } else if (h >= d) {  // pair node: delta over the two leaf bonds
            for (int i = 0; i < n; ++i) g.at({i, i, 0}) = 1.0;
        } else {
            g.at({0, 0, 0}) = 1.0;
        }
    }
    for (int m = 0; m < action.size(); ++m)
        P.comp[1].at({0, 0, m}) = (m == 0) ? std::sqrt(action.length()) : 0.0;
    return P;
}

Fht gl_like_cost_fht(int d, const BasisSet& state, const BasisSet& action) {
    // f(x, a) = ||x||^2 / d + a^2 as a rank-2 FHT with root action leg
    std::vector<Eigen::VectorXd> cs(d);
    for (int j = 0; j < d; ++j)
        cs[j] = state.project([&](double x) { return x * x / d; });
    Eigen::VectorXd ca = action.project([](double a) { return a * a; });
    DyadicTree t = DyadicTree::build(d, 2, state.size(), action.size());
    return sum_of_univariate(t, state, cs, &action, &ca);
}

}  // namespace

TEST_CASE("apply_markov: zero value function leaves only the cost term") {
    int d = 4;
    BasisSet state = legendre_basis(4, -2, 2), action = legendre_basis(4, -1, 1);
    Fht P = identity_pairing_operator(d, state, action);
    Fht v = Fht::zeros(DyadicTree::build(d, 2, state.size()), state);
    Fht f_term = gl_like_cost_fht(d, state, action);
    double dt = 0.1;
    Fht q = apply_markov(P, v, f_term, dt);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 30; ++k) {
        Eigen::VectorXd p = oracles::random_point(d + 1, -1, 1, rng);
        double x2 = 0;
        for (int j = 0; j < d; ++j) x2 += p[j] * p[j];
        double want = dt * (x2 / d + p[d] * p[d]);
        CHECK(q.evaluate(p) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("apply_markov: identity pairing returns v + f dt") {
    int d = 4;
    BasisSet state = legendre_basis(4, -2, 2), action = legendre_basis(4, -1, 1);
    Fht P = identity_pairing_operator(d, state, action);
    std::vector<Eigen::VectorXd> cs(d);
    for (int j = 0; j < d; ++j)
        cs[j] = state.project([&](double x) { return x * x / d; });
    Fht v = sum_of_univariate(DyadicTree::build(d, 2, state.size()), state, cs);
    Fht f_term = gl_like_cost_fht(d, state, action);
    double dt = 0.05;
    Fht q = apply_markov(P, v, f_term, dt);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 30; ++k) {
        // keep the action coordinate inside A = [-1, 1]
        Eigen::VectorXd p = oracles::random_point(d + 1, -1.0, 1.0, rng);
        double x2 = 0;
        for (int j = 0; j < d; ++j) x2 += p[j] * p[j];
        double want = x2 / d + dt * (x2 / d + p[d] * p[d]);
        CHECK(q.evaluate(p) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("apply_markov matches the Gaussian-moment oracle for an OU kernel") {
    // d = 2 transition kernel p(x, y) = N(y; 0.9 x, 0.1), projected per pair.
    int d = 2, n = 7;
    BasisSet state = legendre_basis(n - 1, -2, 2);
    double rho = 0.5, var = 0.04;

    Eigen::MatrixXd M(n, n);
    {
        Quadrature qx = gauss_legendre(120, -2, 2);
        M.setZero();
        for (int ix = 0; ix < qx.nodes.size(); ++ix)
            for (int iy = 0; iy < qx.nodes.size(); ++iy) {
                double x = qx.nodes[ix], y = qx.nodes[iy];
                double dens = std::exp(-0.5 * (y - rho * x) * (y - rho * x) / var) /
                              std::sqrt(2 * M_PI * var);
                M += qx.weights[ix] * qx.weights[iy] * dens * state.eval(x) *
                     state.eval(y).transpose();
            }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);

    DyadicTree t = DyadicTree::build(2 * d, n, n);
    for (int j = 0; j < 2 * d; ++j) t.set_parent_rank(t.leaf_node(j), n);
    for (int h = d; h < 2 * d; ++h) t.set_parent_rank(h, 1);
    Fht P = Fht::zeros(t, state);
    P.comp[1].at({0, 0}) = 1.0;
    for (int h = d; h < 2 * d; ++h) {
        for (int i = 0; i < n; ++i) P.comp[h].at({i, i, 0}) = 1.0;
        P.comp[2 * h].as_matrix(1) = svd.matrixU().transpose();
        P.comp[2 * h + 1].as_matrix(1) =
            svd.singularValues().asDiagonal() * svd.matrixV().transpose();
    }

    std::vector<Eigen::VectorXd> cs(d);
    for (int j = 0; j < d; ++j) cs[j] = state.project([](double x) { return x * x; });
    Fht v = sum_of_univariate(DyadicTree::build(d, 2, n), state, cs);

    Fht q = apply_markov(P, v);
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd x = oracles::random_point(d, -1, 1, rng);
        double want = 0;
        for (int j = 0; j < d; ++j) want += rho * rho * x[j] * x[j] + var;
        CHECK(q.evaluate(x) == doctest::Approx(want).epsilon(1e-3));
    }
}

TEST_CASE("apply_markov agrees with the dense contraction integral") {
    int d = 2, n = 3, na = 2;
    BasisSet state = legendre_basis(n - 1, -2, 2), action = legendre_basis(na - 1, -1, 1);
    Fht P = Fht::random(DyadicTree::build(2 * d, 3, n, na), state, action, 31);
    Fht v = Fht::random(DyadicTree::build(d, 2, n), state, BasisSet(), 32);
    Fht q = apply_markov(P, v);

    Eigen::VectorXd CP = contract_dense(P);
    Eigen::VectorXd Cv = contract_dense(v);
    // dense integral over x': CQ(ix, m) = sum_{ix'} CP(interlaced, m) Cv(ix')
    std::mt19937_64 rng(12);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd p = oracles::random_point(d + 1, -1.5, 1.5, rng);
        std::vector<Eigen::VectorXd> vx(d), vy;
        for (int j = 0; j < d; ++j) vx[j] = state.eval(p[j]);
        Eigen::VectorXd va = action.eval(p[d]);
        double want = 0.0;
        // loop over all P indices: (i_x1, i_y1, i_x2, i_y2, m)
        for (int i1 = 0; i1 < n; ++i1)
            for (int j1 = 0; j1 < n; ++j1)
                for (int i2 = 0; i2 < n; ++i2)
                    for (int j2 = 0; j2 < n; ++j2)
                        for (int m = 0; m < na; ++m) {
                            double cp = CP[(((i1 * n + j1) * n + i2) * n + j2) * na + m];
                            double cv = Cv[j1 * n + j2];
                            want += cp * cv * vx[0][i1] * vx[1][i2] * va[m];
                        }
        CHECK(q.evaluate(p) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("add and scale evaluate additively") {
    BasisSet state = legendre_basis(3, -2, 2), action = legendre_basis(2, -1, 1);
    Fht f = Fht::random(DyadicTree::build(4, 3, 4, 3), state, action, 51);
    Fht g = Fht::random(DyadicTree::build(4, 2, 4, 3), state, action, 52);
    Fht s = add(f, g);
    scale(g, -2.5);
    std::mt19937_64 rng(6);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd p = oracles::random_point(5, -1, 1, rng);
        CHECK(s.evaluate(p) ==
              doctest::Approx(f.evaluate(p) - g.evaluate(p) / 2.5).epsilon(1e-11));
    }
}

TEST_CASE("round_fht recompresses an inflated sum exactly") {
    BasisSet state = legendre_basis(3, -2, 2);
    Fht f = Fht::random(DyadicTree::build(8, 3, 4), state, BasisSet(), 61, 0.5);
    Fht twice = add(f, f);
    round_fht(twice, 1e-10);
    std::mt19937_64 rng(62);
    for (int k = 0; k < 30; ++k) {
        Eigen::VectorXd p = oracles::random_point(8, -2, 2, rng);
        CHECK(twice.evaluate(p) == doctest::Approx(2 * f.evaluate(p)).epsilon(1e-9));
    }
    for (int h = 2; h <= twice.tree.max_node_id(); ++h)
        CHECK(twice.tree.parent_rank(h) <= f.tree.parent_rank(h));
}

TEST_CASE("round_fht with a hard rank cap keeps the tree consistent") {
    BasisSet state = legendre_basis(4, -2, 2), action = legendre_basis(3, -1, 1);
    Fht f = Fht::random(DyadicTree::build(8, 4, 5, 4), state, action, 63, 0.3);
    Fht g = Fht::random(DyadicTree::build(8, 3, 5, 4), state, action, 64, 0.3);
    Fht s = add(f, g);
    round_fht(s, 1e-12, 4);
    s.check_consistent();
    for (int h = 2; h <= s.tree.max_node_id(); ++h) CHECK(s.tree.parent_rank(h) <= 4);
    std::mt19937_64 rng(65);
    Eigen::VectorXd p = oracles::random_point(9, -1, 1, rng);
    CHECK(std::isfinite(s.evaluate(p)));
}

TEST_CASE("FHT1 serialization round-trips bit-exactly") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "fhtc_test_io";
    fs::create_directories(dir);
    Fht f = Fht::random(DyadicTree::build(8, 3, 4, 5), legendre_basis(3, -2, 2),
                        legendre_basis(4, -1, 1), 71);
    fs::path file = dir / "f.fht";
    save_fht(f, file);
    Fht g = load_fht(file);
    CHECK(g.tree.num_leaves() == f.tree.num_leaves());
    CHECK(g.leaf_basis == f.leaf_basis);
    CHECK(g.root_basis == f.root_basis);
    for (int h = 1; h <= f.tree.max_node_id(); ++h) {
        CHECK(g.comp[h].dims == f.comp[h].dims);
        CHECK((g.comp[h].data - f.comp[h].data).norm() == 0.0);
    }

    // corrupted magic is rejected
    {
        std::ofstream os(file, std::ios::binary);
        os.write("BOGUS", 5);
    }
    CHECK_THROWS_AS(load_fht(file), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("single-node tree evaluates and serializes") {
    DyadicTree t = DyadicTree::build(1, 1, 4);
    BasisSet b = legendre_basis(3, -1, 1);
    Fht f = Fht::zeros(t, b);
    f.comp[1].data = b.project([](double x) { return 1.0 + x; });
    Eigen::VectorXd p(1);
    p << 0.25;
    CHECK(f.evaluate(p) == doctest::Approx(1.25).epsilon(1e-12));
}
