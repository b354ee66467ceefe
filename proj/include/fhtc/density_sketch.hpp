#pragma once

#include <cstdint>
#include <filesystem>

#include "fhtc/fht.hpp"

namespace fhtc {

// Action-dependent Markov operator estimation from joint samples
// z = (x_1, x'_1, ..., x_d, x'_d, o): the joint density of (X, X', O) is
// sketched hierarchically from empirical moments against per-cluster sketch
// functions, then rescaled by Vol(X x A) so the result is the transition
// density P(x, x', a) for (X, O) drawn uniformly.
//
// Sketch functions are random combinations of tensor-product basis
// functions of low total degree over the cluster's variables; single
// variable clusters use the raw basis itself. Complement clusters include
// the action variable.

struct OperatorSketchOptions {
    int margin = 2;          // oversampling above the edge rank
    std::uint64_t seed = 0;  // sketch-weight RNG
    int block = 4096;        // samples per accumulation block
};

struct OperatorSketchStats {
    int rank_warnings = 0;
    std::int64_t samples = 0;
};

// `samples`: N x (2d + 1) rows (z then o). `tree`: 2d leaves with a root
// control leg. Requires N >= 10 x the largest sketched system size.
Fht estimate_operator(const Eigen::MatrixXd& samples, const DyadicTree& tree,
                      const BasisSet& state_basis, const BasisSet& action_basis,
                      const OperatorSketchOptions& opt, OperatorSketchStats* stats = nullptr);

// Integral of P over all variables divided by Vol(X x A); approximately 1
// for a well-normalized operator.
double marginal_mass(const Fht& P);

// Flat little-endian float64 records (2d + 2 fields: z, o, r) with a JSON
// sidecar describing the geometry and the seed. `base` names the record
// file; the sidecar is `base` with a .json extension appended.
struct SampleSetMeta {
    int d = 0;
    double x_lo = -2, x_hi = 2;
    double a_lo = -1, a_hi = 1;
    std::uint64_t seed = 0;
    std::int64_t count = 0;
};

void save_samples(const Eigen::MatrixXd& records, const SampleSetMeta& meta,
                  const std::filesystem::path& base);
Eigen::MatrixXd load_samples(const std::filesystem::path& base, SampleSetMeta* meta = nullptr);

}  // namespace fhtc
