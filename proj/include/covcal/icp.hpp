#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covcal/dag.hpp"

namespace covcal {

struct KernelConfig {
    enum class Kind { Gaussian, Triangular, Uniform };
    Kind kind = Kind::Gaussian;
    double h = 1.0;
};

/// Kernel weight in [0,1]; non-increasing in d, and 0 at d = +inf.
double kernel_weight(double d, const KernelConfig& cfg);

/// The K variables (excluding the target) with largest |Pearson correlation|
/// with the target column on observational data; ties break to lower index.
std::vector<int> screen_candidates(const Eigen::MatrixXd& obs, int target, int k);

struct IcpParams {
    double alpha_icp = 0.05;
    int s_max = 2;
    int screen_k = 10;
};

/// Invariant-parent estimate: every subset S of the pool with |S| <= s_max is
/// fit by pooled least squares and accepted when its residuals pass Welch mean
/// and F variance tests across every environment pair at a Bonferroni-split
/// level. Returns the intersection of accepted subsets (empty if none).
/// Environments on the target itself are excluded; environments with fewer
/// than |S|+2 samples are skipped.
std::vector<int> icp_parents(const InterventionalDataset& data, int target,
                             const std::vector<int>& pool, double alpha_icp, int s_max);

// d(a) = frontier step at which a entered the parent expansion from the
// target; absent entries are infinite.
struct DistanceMap {
    int target = -1;
    int depth = 0;
    std::map<int, int> dist;

    std::optional<int> at(int a) const {
        auto it = dist.find(a);
        if (it == dist.end()) return std::nullopt;
        return it->second;
    }
    double as_real(int a) const;  // +inf when absent
};

DistanceMap expand_frontier(const InterventionalDataset& data, int target, int max_depth,
                            const IcpParams& params);

/// Weighted conformal quantile with the test point's mass attached to +inf.
/// Equal weights reduce exactly to conformal_quantile.
double weighted_conformal_quantile(std::span<const double> scores,
                                   std::span<const double> weights, double test_weight,
                                   double alpha);

/// CSV dump: "intervention,target,distance" with inf serialized as "inf".
void save_distances_csv(const DistanceMap& d, const std::vector<int>& interventions,
                        const std::string& path);

}  // namespace covcal
