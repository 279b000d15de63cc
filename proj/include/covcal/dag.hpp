#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace covcal {

struct Edge {
    int parent = 0;
    int child = 0;
    double weight = 0.0;
};

// Weighted DAG with an explicit topological order (topo_order[k] = node at
// position k; parents always precede children).
struct Dag {
    int p = 0;
    std::vector<Edge> edges;
    std::vector<int> topo_order;

    /// Throws if the order is not a permutation or some edge goes backwards.
    void validate() const;

    /// Per-child (parent, weight) lists, indexed by node id.
    std::vector<std::vector<std::pair<int, double>>> parent_lists() const;

    /// Per-parent child lists, indexed by node id.
    std::vector<std::vector<int>> child_lists() const;
};

/// Random DAG: a uniform topological order, then each (earlier, later) pair
/// receives an edge independently with probability d_avg/(p-1); weights are
/// uniform on [-w_hi,-w_lo] ∪ [w_lo,w_hi]. Deterministic given seed.
Dag gen_er_dag(int p, double d_avg, double w_lo, double w_hi, std::uint64_t seed);

// Exact reachability sets, self excluded.
struct DescendantSets {
    int p = 0;
    std::vector<std::vector<int>> desc;  // desc[a], sorted

    bool contains(int a, int i) const {
        return bits_[static_cast<std::size_t>(a) * words_ + static_cast<std::size_t>(i >> 6)] >>
                   (i & 63) &
               1ULL;
    }

    static DescendantSets from_lists(int p, std::vector<std::vector<int>> lists);

  private:
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

DescendantSets descendant_sets(const Dag& dag);

/// n i.i.d. samples of the linear Gaussian SEM (unit noise), computed in
/// topological order; a hard intervention pins that node to 0 before its
/// children are evaluated. Rows are samples, columns are node values.
Eigen::MatrixXd sample_sem(const Dag& dag, int n, std::optional<int> intervention,
                           std::uint64_t seed);

// Observational samples plus per-intervention sample matrices.
struct InterventionalDataset {
    Eigen::MatrixXd obs;
    std::vector<int> intervened;  // in insertion order
    std::map<int, Eigen::MatrixXd> per_intervention;

    int p() const { return static_cast<int>(obs.cols()); }
    /// Checks column counts and that each intervened column is identically 0.
    void validate() const;
};

/// Samples a full dataset: n_obs observational rows plus n_per rows under
/// do(a):=0 for each a in interventions. Substreams are derived from seed.
InterventionalDataset sample_dataset(const Dag& dag, int n_obs, int n_per,
                                     const std::vector<int>& interventions, std::uint64_t seed);

/// Edge-list CSV: header "parent,child,weight".
void save_dag_csv(const Dag& dag, const std::string& path);
Dag load_dag_csv(const std::string& path);

}  // namespace covcal
