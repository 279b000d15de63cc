#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "covcal/affected.hpp"

namespace covcal {

enum class DeltaHatPolicy {
    Oracle,           // true per-pair contamination of the selection (simulation only)
    SelfConsistency,  // fraction of selected interventions whose raw affected set contains the target
    Fixed,            // delta_hat_fixed
};

struct ExperimentConfig {
    // graph and data generation
    int p = 200;
    double d_avg = 2.0;
    double w_lo = 0.3;
    double w_hi = 1.0;
    int n_obs = 200;
    int n_per_intervention = 200;
    int n_interventions = 150;

    // inference
    double alpha = 0.1;
    double q_fdr = 0.05;
    std::array<double, 3> split_fractions{0.10, 0.81, 0.09};
    std::vector<std::uint64_t> seeds;
    double sigma_unaffected = 1.0;
    double sigma_affected = 0.15;
    std::vector<double> delta_inject;
    std::vector<std::string> methods{"oracle", "estimated", "pooled", "corrected"};
    DegScore deg_score = DegScore::MeanT;
    DeltaHatPolicy delta_hat_policy = DeltaHatPolicy::Oracle;
    double delta_hat_fixed = 0.0;

    // real-perturbation pipeline
    double top_frac = 0.10;
    std::uint64_t split_seed = 1;
    int bootstrap_replicates = 0;
    std::uint64_t bootstrap_seed = 1;

    void validate() const;
};

/// Strict JSON parsing: any unknown key is an error. Missing keys keep their
/// defaults, except "seeds" which is required.
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json_text(const ExperimentConfig& cfg, int indent = 2);

}  // namespace covcal
