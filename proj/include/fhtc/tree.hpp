#pragma once

#include <cstdint>
#include <vector>

namespace fhtc {

// Binary dyadic tree over `num_leaves = 2^levels` variables. Nodes are
// addressed heap-style: root = 1, children of h are 2h and 2h+1, parent is
// h/2. Level l holds blocks k = 1..2^l at ids h = 2^l + k - 1; leaves live
// at level `levels`. Leaf j (0-based) is node `2^levels + j`.
//
// Every non-root node carries the rank of its parent edge. Leaves carry one
// physical leg of size `leaf_n`; the root may carry an extra physical leg
// (the control variable) of size `root_leg_n`.
class DyadicTree {
public:
    DyadicTree() = default;

    // Uniform rank schedule, capped per edge by the dimension of the smaller
    // side of the bipartition (min(n^|S|, n^|S_complement| * n_root_leg)).
    static DyadicTree build(int num_leaves, int uniform_rank, int leaf_n, int root_leg_n = 0);

    int levels() const { return levels_; }
    int num_leaves() const { return num_leaves_; }
    int node_count() const { return 2 * num_leaves_ - 1; }
    int leaf_n() const { return leaf_n_; }
    int root_leg_n() const { return root_leg_n_; }
    bool has_root_leg() const { return root_leg_n_ > 0; }

    static constexpr int root() { return 1; }
    int left(int h) const { return 2 * h; }
    int right(int h) const { return 2 * h + 1; }
    int parent(int h) const { return h / 2; }
    bool is_root(int h) const { return h == 1; }
    bool is_leaf(int h) const { return h >= num_leaves_; }
    int max_node_id() const { return 2 * num_leaves_ - 1; }

    int level_of(int h) const;
    int block_of(int h) const;  // 1-based block index within the level

    int leaf_index(int h) const { return h - num_leaves_; }
    int leaf_node(int j) const { return num_leaves_ + j; }

    // Leaf variable indices (0-based) under node h, in leaf order.
    std::vector<int> cluster(int h) const;

    int parent_rank(int h) const { return parent_rank_[h]; }
    void set_parent_rank(int h, int r) { parent_rank_[h] = r; }

    bool same_shape(const DyadicTree& o) const {
        return num_leaves_ == o.num_leaves_ && leaf_n_ == o.leaf_n_ && root_leg_n_ == o.root_leg_n_;
    }

private:
    int levels_ = 0;
    int num_leaves_ = 1;
    int leaf_n_ = 1;
    int root_leg_n_ = 0;
    std::vector<int> parent_rank_;  // by node id; [0], [1] unused
};

// Bit-interleaved map between a Delta-dimensional grid with 2^mu points per
// side and the leaf order of the dyadic tree. Grid flat indices are
// row-major (first coordinate slowest).
class VariableLayout {
public:
    VariableLayout() = default;
    VariableLayout(int Delta, int mu);

    int delta() const { return Delta_; }
    int side() const { return 1 << mu_; }
    int size() const { return size_; }

    int to_leaf(int grid_flat) const { return to_leaf_[grid_flat]; }
    int to_grid(int leaf) const { return to_grid_[leaf]; }
    const std::vector<int>& grid_to_leaf() const { return to_leaf_; }

private:
    int Delta_ = 1;
    int mu_ = 0;
    int size_ = 1;
    std::vector<int> to_leaf_;
    std::vector<int> to_grid_;
};

// Permutation perm[grid_flat] = leaf index, per the binary interleaving of
// the per-coordinate bit expansions.
std::vector<int> grid_to_leaf(int Delta, int mu);

}  // namespace fhtc
