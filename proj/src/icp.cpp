#include "covcal/icp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "covcal/conformal.hpp"
#include "covcal/stats.hpp"

namespace covcal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double kernel_weight(double d, const KernelConfig& cfg) {
    if (!(cfg.h > 0.0)) throw std::invalid_argument("kernel_weight: bandwidth must be positive");
    if (d < 0.0) throw std::invalid_argument("kernel_weight: distance must be nonnegative");
    if (std::isinf(d)) return 0.0;
    const double u = d / cfg.h;
    switch (cfg.kind) {
        case KernelConfig::Kind::Gaussian:
            return std::exp(-0.5 * u * u);
        case KernelConfig::Kind::Triangular:
            return u >= 1.0 ? 0.0 : 1.0 - u;
        case KernelConfig::Kind::Uniform:
            return u <= 1.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

std::vector<int> screen_candidates(const Eigen::MatrixXd& obs, int target, int k) {
    if (k < 1) throw std::invalid_argument("screen_candidates: K must be >= 1");
    const int p = static_cast<int>(obs.cols());
    if (target < 0 || target >= p) throw std::invalid_argument("screen_candidates: target out of range");
    const Eigen::VectorXd centered_t = obs.col(target).array() - obs.col(target).mean();
    const double st = centered_t.norm();
    std::vector<std::pair<double, int>> scored;
    scored.reserve(static_cast<std::size_t>(p - 1));
    for (int j = 0; j < p; ++j) {
        if (j == target) continue;
        const Eigen::VectorXd cj = obs.col(j).array() - obs.col(j).mean();
        const double sj = cj.norm();
        double corr = 0.0;
        if (st > 0.0 && sj > 0.0) corr = std::fabs(centered_t.dot(cj) / (st * sj));
        scored.emplace_back(corr, j);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::vector<int> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

// Pooled least squares of the target on subset columns (with intercept), then
// per-environment residual vectors.
std::vector<std::vector<double>> pooled_residuals(const std::vector<const Eigen::MatrixXd*>& envs,
                                                  int target, const std::vector<int>& subset) {
    const int d = static_cast<int>(subset.size()) + 1;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(d);
    for (const Eigen::MatrixXd* m : envs) {
        const Eigen::Index n = m->rows();
        Eigen::MatrixXd x(n, d);
        x.col(0).setOnes();
        for (std::size_t j = 0; j < subset.size(); ++j) {
            x.col(static_cast<Eigen::Index>(j) + 1) = m->col(subset[j]);
        }
        xtx.noalias() += x.transpose() * x;
        xty.noalias() += x.transpose() * m->col(target);
    }
    const Eigen::VectorXd beta = xtx.ldlt().solve(xty);
    std::vector<std::vector<double>> res;
    res.reserve(envs.size());
    for (const Eigen::MatrixXd* m : envs) {
        const Eigen::Index n = m->rows();
        Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, beta(0));
        for (std::size_t j = 0; j < subset.size(); ++j) {
            pred += beta(static_cast<Eigen::Index>(j) + 1) * m->col(subset[j]);
        }
        const Eigen::VectorXd r = m->col(target) - pred;
        res.emplace_back(r.data(), r.data() + r.size());
    }
    return res;
}

bool invariant_across_envs(const std::vector<std::vector<double>>& res, double alpha_icp) {
    const std::size_t e = res.size();
    if (e < 2) return true;
    const std::size_t pairs = e * (e - 1) / 2;
    const double level = alpha_icp / (2.0 * static_cast<double>(pairs));
    for (std::size_t i = 0; i < e; ++i) {
        for (std::size_t j = i + 1; j < e; ++j) {
            if (welch_t_test(res[i], res[j]).p_value <= level) return false;
            if (f_variance_test(res[i], res[j]).p_value <= level) return false;
        }
    }
    return true;
}

void for_each_subset(const std::vector<int>& pool, int s_max,
                     const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> subset;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
        fn(subset);
        if (static_cast<int>(subset.size()) == s_max) return;
        for (std::size_t i = start; i < pool.size(); ++i) {
            subset.push_back(pool[i]);
            rec(i + 1);
            subset.pop_back();
        }
    };
    rec(0);
}

}  // namespace

std::vector<int> icp_parents(const InterventionalDataset& data, int target,
                             const std::vector<int>& pool, double alpha_icp, int s_max) {
    if (s_max < 0) throw std::invalid_argument("icp_parents: s_max must be >= 0");
    if (!(alpha_icp > 0.0 && alpha_icp < 1.0)) {
        throw std::invalid_argument("icp_parents: alpha_icp must be in (0,1)");
    }
    for (int v : pool) {
        if (v == target) throw std::invalid_argument("icp_parents: pool must exclude the target");
    }
    bool any_accepted = false;
    std::vector<int> inter;
    for_each_subset(pool, s_max, [&](const std::vector<int>& subset) {
        // environments: observational plus interventions not on the target
        std::vector<const Eigen::MatrixXd*> envs;
        const Eigen::Index min_rows = static_cast<Eigen::Index>(subset.size()) + 2;
        if (data.obs.rows() >= min_rows) envs.push_back(&data.obs);
        for (int a : data.intervened) {
            if (a == target) continue;
            const Eigen::MatrixXd& m = data.per_intervention.at(a);
            if (m.rows() >= min_rows) envs.push_back(&m);
        }
        if (envs.size() < 2) return;
        const auto res = pooled_residuals(envs, target, subset);
        if (!invariant_across_envs(res, alpha_icp)) return;
        if (!any_accepted) {
            inter = subset;
            any_accepted = true;
        } else {
            std::vector<int> sorted = subset;
            std::sort(sorted.begin(), sorted.end());
            std::vector<int> tmp;
            std::set_intersection(inter.begin(), inter.end(), sorted.begin(), sorted.end(),
                                  std::back_inserter(tmp));
            inter.swap(tmp);
        }
    });
    if (!any_accepted) return {};
    return inter;
}

double DistanceMap::as_real(int a) const {
    const auto v = at(a);
    return v ? static_cast<double>(*v) : kInf;
}

DistanceMap expand_frontier(const InterventionalDataset& data, int target, int max_depth,
                            const IcpParams& params) {
    if (max_depth < 1) throw std::invalid_argument("expand_frontier: depth must be >= 1");
    DistanceMap dm;
    dm.target = target;
    dm.depth = max_depth;
    dm.dist[target] = 0;
    std::vector<int> frontier{target};
    for (int t = 1; t <= max_depth && !frontier.empty(); ++t) {
        std::vector<int> next;
        for (int g : frontier) {
            const std::vector<int> pool = screen_candidates(data.obs, g, params.screen_k);
            const std::vector<int> parents =
                icp_parents(data, g, pool, params.alpha_icp, params.s_max);
            for (int v : parents) {
                if (dm.dist.find(v) == dm.dist.end()) {
                    dm.dist[v] = t;
                    next.push_back(v);
                }
            }
        }
        frontier.swap(next);
    }
    return dm;
}

double weighted_conformal_quantile(std::span<const double> scores,
                                   std::span<const double> weights, double test_weight,
                                   double alpha) {
    if (scores.size() != weights.size()) {
        throw std::invalid_argument("weighted_conformal_quantile: size mismatch");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("weighted_conformal_quantile: alpha must be in (0,1)");
    }
    if (!(test_weight > 0.0)) {
        throw std::invalid_argument("weighted_conformal_quantile: test weight must be positive");
    }
    double total = test_weight;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("weighted_conformal_quantile: negative weight");
        total += w;
    }
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // same slack construction as conformal_rank so equal weights match exactly
    const double threshold = (1.0 - alpha) * total - kRankSlack * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < idx.size();) {
        const double v = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == v) {
            cum += weights[idx[i]];
            ++i;
        }
        if (cum >= threshold) return v;
    }
    return kInf;
}

void save_distances_csv(const DistanceMap& d, const std::vector<int>& interventions,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_distances_csv: cannot open " + path);
    out << "intervention,target,distance\n";
    for (int a : interventions) {
        out << a << ',' << d.target << ',';
        const auto v = d.at(a);
        if (v) {
            out << *v;
        } else {
            out << "inf";
        }
        out << '\n';
    }
}

}  // namespace covcal
