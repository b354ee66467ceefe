#pragma once

#include <string>

#include "fhtc/workflow.hpp"

namespace fhtc {

struct ExperimentConfig {
    ControlProblem problem;
    std::string output_dir = "out";

    // gl1d-desk, gl1d-paper, gl2d-desk, gl2d-paper
    static ExperimentConfig preset(const std::string& name);
    static ExperimentConfig from_file(const std::filesystem::path& file);
    std::string to_json() const;
};

// FNV-1a hash of the canonical configuration dump, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

// FHTC_THREADS env var, or 0 when unset.
int env_thread_default();
void apply_thread_count(int threads);

}  // namespace fhtc
