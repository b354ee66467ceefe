#include "fhtc/tree.hpp"

#include <cmath>
#include <stdexcept>

namespace fhtc {

namespace {
bool is_power_of_two(int d) { return d > 0 && (d & (d - 1)) == 0; }

// min(cap, n^e) without overflow.
double pow_capped(double n, int e, double cap) {
    double v = 1.0;
    for (int i = 0; i < e; ++i) {
        v *= n;
        if (v >= cap) return cap;
    }
    return v;
}
}  // namespace

DyadicTree DyadicTree::build(int num_leaves, int uniform_rank, int leaf_n, int root_leg_n) {
    if (!is_power_of_two(num_leaves))
        throw std::invalid_argument("DyadicTree: number of leaves must be a power of two");
    if (uniform_rank < 1) throw std::invalid_argument("DyadicTree: rank must be positive");
    if (leaf_n < 1) throw std::invalid_argument("DyadicTree: leaf leg size must be positive");
    if (root_leg_n < 0) throw std::invalid_argument("DyadicTree: root leg size must be >= 0");

    DyadicTree t;
    t.num_leaves_ = num_leaves;
    t.levels_ = 0;
    while ((1 << t.levels_) < num_leaves) ++t.levels_;
    t.leaf_n_ = leaf_n;
    t.root_leg_n_ = root_leg_n;
    t.parent_rank_.assign(2 * num_leaves, 0);

    const double big = 1e18;
    for (int h = 2; h <= t.max_node_id(); ++h) {
        int sub = num_leaves >> t.level_of(h);  // leaves under h
        double inner = pow_capped(leaf_n, sub, big);
        double outer = pow_capped(leaf_n, num_leaves - sub, big);
        if (root_leg_n > 0) outer = std::min(outer * root_leg_n, big);
        double cap = std::min(inner, outer);
        t.parent_rank_[h] = static_cast<int>(std::min<double>(uniform_rank, cap));
    }
    return t;
}

int DyadicTree::level_of(int h) const {
    int l = 0;
    while ((h >> (l + 1)) > 0) ++l;
    return l;
}

int DyadicTree::block_of(int h) const { return h - (1 << level_of(h)) + 1; }

std::vector<int> DyadicTree::cluster(int h) const {
    int l = level_of(h);
    int sub = num_leaves_ >> l;
    int first = (h - (1 << l)) * sub;
    std::vector<int> vars(sub);
    for (int i = 0; i < sub; ++i) vars[i] = first + i;
    return vars;
}

VariableLayout::VariableLayout(int Delta, int mu) : Delta_(Delta), mu_(mu) {
    if (Delta < 1 || mu < 0) throw std::invalid_argument("VariableLayout: bad shape");
    size_ = 1;
    for (int i = 0; i < Delta * mu; ++i) size_ *= 2;
    to_leaf_ = fhtc::grid_to_leaf(Delta, mu);
    to_grid_.assign(size_, 0);
    for (int g = 0; g < size_; ++g) to_grid_[to_leaf_[g]] = g;
}

std::vector<int> grid_to_leaf(int Delta, int mu) {
    int m = 1 << mu;
    int size = 1;
    for (int i = 0; i < Delta; ++i) size *= m;
    std::vector<int> perm(size);
    std::vector<int> coord(Delta);
    for (int flat = 0; flat < size; ++flat) {
        int rem = flat;
        for (int dlt = Delta - 1; dlt >= 0; --dlt) {
            coord[dlt] = rem % m;
            rem /= m;
        }
        // k = a_{1,1} a_{2,1} ... a_{Delta,1} a_{1,2} ... a_{Delta,mu},
        // a_{dlt, b} the b-th most significant bit of coord[dlt].
        int k = 0;
        for (int b = 0; b < mu; ++b) {
            for (int dlt = 0; dlt < Delta; ++dlt) {
                int bit = (coord[dlt] >> (mu - 1 - b)) & 1;
                k = (k << 1) | bit;
            }
        }
        perm[flat] = k;
    }
    return perm;
}

}  // namespace fhtc
