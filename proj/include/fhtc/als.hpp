#pragma once

#include <cstdint>

#include "fhtc/fht.hpp"

namespace fhtc {

// Sobolev-regularized alternating least squares over the Bellman-style
// regression loss
//   L(f) = (1/N) sum_i (f(x_i) - y_i)^2 + mu * |f|_mix^2,
// with the mixed norm factored into per-variable Gram matrices. Each node
// solve is a small normal-equation system assembled from cached messages;
// a depth-first walk keeps every message fresh with one contraction per
// tree edge, so a full sweep costs O(node count) contractions.

struct RegressionSet {
    // Inputs in leaf order; with a root leg the control value is the last
    // column. Out-of-box inputs are clamped by the basis evaluation.
    Eigen::MatrixXd X;  // N x input_dim
    Eigen::VectorXd y;  // N
};

struct AlsWorkspace {
    RegressionSet data;
    std::vector<Eigen::MatrixXd> psi;  // per leaf variable: N x n
    Eigen::MatrixXd psi_root;          // N x n_a when the tree has a root leg
    Eigen::MatrixXd gram_leaf;         // K of the shared leaf basis
    Eigen::MatrixXd gram_root;

    static AlsWorkspace make(const Fht& f, RegressionSet data);
    Eigen::Index sample_count() const { return data.y.size(); }
};

// One evaluation message (N x r) and one regularizer message (r x r) per
// directed edge: up_* flows child -> parent, down_* parent -> child, both
// indexed by the child node id.
struct Messages {
    std::vector<Eigen::MatrixXd> up_A, up_M, down_A, down_M;
    long update_count = 0;
};

Messages init_messages(const Fht& f, const AlsWorkspace& ws);

// Recompute the up (resp. down) message of node h from its neighbors'
// current messages and the current components.
void refresh_up(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int h);
void refresh_down(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int child);

// One-step refreshes along the tree path from `from` to `to` (up messages
// while ascending, down messages while descending).
void refresh_path(const Fht& f, const AlsWorkspace& ws, Messages& msgs, int from, int to);

struct NodeSolveInfo {
    double data_before = 0, reg_before = 0;
    double data_after = 0, reg_after = 0;
    double loss_before() const { return data_before + reg_before; }
    double loss_after() const { return data_after + reg_after; }
};

// Minimizes the loss over the component of node h; messages into h must be
// fresh. Returns the global loss around the solve.
NodeSolveInfo solve_node(Fht& f, int h, const Messages& msgs, const AlsWorkspace& ws,
                         double reg_mu);

struct AlsTraceRow {
    int round;
    int node;
    double data_term;
    double reg_term;
};

struct AlsResult {
    std::vector<AlsTraceRow> trace;
    double initial_loss = 0;
    double final_loss = 0;
    long node_solves = 0;
    long message_updates = 0;
};

// The depth-first walk over all nodes (right subtree, node, left subtree),
// matching the one-step message refresh schedule.
std::vector<int> als_walk_order(const DyadicTree& t);

AlsResult sweep(Fht& f, const AlsWorkspace& ws, double reg_mu, int rounds);

}  // namespace fhtc
