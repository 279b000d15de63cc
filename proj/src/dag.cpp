#include "covcal/dag.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "covcal/rng.hpp"

namespace covcal {

void Dag::validate() const {
    if (p < 0) throw std::invalid_argument("Dag: negative node count");
    if (static_cast<int>(topo_order.size()) != p) {
        throw std::invalid_argument("Dag: topo_order size must equal p");
    }
    std::vector<int> pos(static_cast<std::size_t>(p), -1);
    for (int k = 0; k < p; ++k) {
        const int v = topo_order[static_cast<std::size_t>(k)];
        if (v < 0 || v >= p || pos[static_cast<std::size_t>(v)] != -1) {
            throw std::invalid_argument("Dag: topo_order is not a permutation");
        }
        pos[static_cast<std::size_t>(v)] = k;
    }
    for (const Edge& e : edges) {
        if (e.parent < 0 || e.parent >= p || e.child < 0 || e.child >= p) {
            throw std::invalid_argument("Dag: edge endpoint out of range");
        }
        if (pos[static_cast<std::size_t>(e.parent)] >= pos[static_cast<std::size_t>(e.child)]) {
            throw std::invalid_argument("Dag: edge violates the topological order");
        }
    }
}

std::vector<std::vector<std::pair<int, double>>> Dag::parent_lists() const {
    std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(p));
    for (const Edge& e : edges) {
        out[static_cast<std::size_t>(e.child)].emplace_back(e.parent, e.weight);
    }
    return out;
}

std::vector<std::vector<int>> Dag::child_lists() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(p));
    for (const Edge& e : edges) {
        out[static_cast<std::size_t>(e.parent)].push_back(e.child);
    }
    return out;
}

Dag gen_er_dag(int p, double d_avg, double w_lo, double w_hi, std::uint64_t seed) {
    if (p < 1) throw std::invalid_argument("gen_er_dag: p must be >= 1");
    if (!(d_avg >= 0.0 && d_avg <= static_cast<double>(p - 1) + 1e-12)) {
        throw std::invalid_argument("gen_er_dag: d_avg must be in [0, p-1]");
    }
    if (!(0.0 < w_lo && w_lo < w_hi)) {
        throw std::invalid_argument("gen_er_dag: need 0 < w_lo < w_hi");
    }
    Rng rng(seed);
    Dag dag;
    dag.p = p;
    dag.topo_order = rng.permutation(p);
    const double prob = p > 1 ? d_avg / static_cast<double>(p - 1) : 0.0;
    for (int j = 0; j + 1 < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
            if (rng.uniform() < prob) {
                const double mag = rng.uniform(w_lo, w_hi);
                const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
                dag.edges.push_back({dag.topo_order[static_cast<std::size_t>(j)],
                                     dag.topo_order[static_cast<std::size_t>(k)], sign * mag});
            }
        }
    }
    return dag;
}

DescendantSets DescendantSets::from_lists(int p, std::vector<std::vector<int>> lists) {
    DescendantSets out;
    out.p = p;
    out.words_ = static_cast<std::size_t>((p + 63) / 64);
    out.bits_.assign(static_cast<std::size_t>(p) * out.words_, 0);
    for (int a = 0; a < p; ++a) {
        auto& l = lists[static_cast<std::size_t>(a)];
        std::sort(l.begin(), l.end());
        for (int i : l) {
            out.bits_[static_cast<std::size_t>(a) * out.words_ + static_cast<std::size_t>(i >> 6)] |=
                1ULL << (i & 63);
        }
    }
    out.desc = std::move(lists);
    return out;
}

DescendantSets descendant_sets(const Dag& dag) {
    dag.validate();
    const int p = dag.p;
    const std::size_t words = static_cast<std::size_t>((p + 63) / 64);
    // position-indexed closure, computed in reverse topological order
    std::vector<int> pos(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) pos[static_cast<std::size_t>(dag.topo_order[static_cast<std::size_t>(k)])] = k;
    std::vector<std::vector<int>> children_pos(static_cast<std::size_t>(p));
    for (const Edge& e : dag.edges) {
        children_pos[static_cast<std::size_t>(pos[static_cast<std::size_t>(e.parent)])].push_back(
            pos[static_cast<std::size_t>(e.child)]);
    }
    std::vector<std::uint64_t> reach(static_cast<std::size_t>(p) * words, 0);
    for (int k = p - 1; k >= 0; --k) {
        auto* row = &reach[static_cast<std::size_t>(k) * words];
        for (int kc : children_pos[static_cast<std::size_t>(k)]) {
            row[kc >> 6] |= 1ULL << (kc & 63);
            const auto* crow = &reach[static_cast<std::size_t>(kc) * words];
            for (std::size_t w = 0; w < words; ++w) row[w] |= crow[w];
        }
    }
    std::vector<std::vector<int>> lists(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) {
        const int a = dag.topo_order[static_cast<std::size_t>(k)];
        const auto* row = &reach[static_cast<std::size_t>(k) * words];
        auto& out = lists[static_cast<std::size_t>(a)];
        for (int kj = 0; kj < p; ++kj) {
            if (row[kj >> 6] >> (kj & 63) & 1ULL) {
                out.push_back(dag.topo_order[static_cast<std::size_t>(kj)]);
            }
        }
    }
    return DescendantSets::from_lists(p, std::move(lists));
}

Eigen::MatrixXd sample_sem(const Dag& dag, int n, std::optional<int> intervention,
                           std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_sem: n must be >= 1");
    if (intervention && (*intervention < 0 || *intervention >= dag.p)) {
        throw std::invalid_argument("sample_sem: intervention node out of range");
    }
    const auto parents = dag.parent_lists();
    Eigen::MatrixXd x(n, dag.p);
    Rng rng(seed);
    for (int r = 0; r < n; ++r) {
        for (int k = 0; k < dag.p; ++k) {
            const int v = dag.topo_order[static_cast<std::size_t>(k)];
            if (intervention && v == *intervention) {
                x(r, v) = 0.0;
                continue;
            }
            double val = rng.normal();
            for (const auto& [par, w] : parents[static_cast<std::size_t>(v)]) {
                val += w * x(r, par);
            }
            x(r, v) = val;
        }
    }
    return x;
}

void InterventionalDataset::validate() const {
    const int cols = p();
    for (const auto& [a, m] : per_intervention) {
        if (m.cols() != cols) throw std::invalid_argument("InterventionalDataset: column count mismatch");
        if (a < 0 || a >= cols) throw std::invalid_argument("InterventionalDataset: bad intervention node");
        if ((m.col(a).array() != 0.0).any()) {
            throw std::invalid_argument("InterventionalDataset: intervened column must be identically 0");
        }
    }
    for (int a : intervened) {
        if (per_intervention.find(a) == per_intervention.end()) {
            throw std::invalid_argument("InterventionalDataset: missing matrix for intervened node");
        }
    }
}

InterventionalDataset sample_dataset(const Dag& dag, int n_obs, int n_per,
                                     const std::vector<int>& interventions, std::uint64_t seed) {
    InterventionalDataset d;
    d.obs = sample_sem(dag, n_obs, std::nullopt, derive_seed(seed, {0xb5u}));
    d.intervened = interventions;
    for (int a : interventions) {
        d.per_intervention[a] =
            sample_sem(dag, n_per, a, derive_seed(seed, {0xa7u, static_cast<std::uint64_t>(a)}));
    }
    return d;
}

void save_dag_csv(const Dag& dag, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_dag_csv: cannot open " + path);
    out << "parent,child,weight\n";
    char buf[64];
    for (const Edge& e : dag.edges) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", e.parent, e.child, e.weight);
        out << buf;
    }
}

Dag load_dag_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dag_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_dag_csv: empty file " + path);
    Dag dag;
    int max_node = -1;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, w;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, w)) {
            throw std::runtime_error("load_dag_csv: malformed line " + std::to_string(lineno));
        }
        Edge e;
        e.parent = std::stoi(a);
        e.child = std::stoi(b);
        e.weight = std::stod(w);
        max_node = std::max({max_node, e.parent, e.child});
        dag.edges.push_back(e);
    }
    dag.p = max_node + 1;
    // recover a topological order with Kahn's algorithm
    std::vector<int> indeg(static_cast<std::size_t>(dag.p), 0);
    auto children = dag.child_lists();
    for (const Edge& e : dag.edges) ++indeg[static_cast<std::size_t>(e.child)];
    std::vector<int> queue;
    for (int v = 0; v < dag.p; ++v) {
        if (indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int v = queue[head];
        dag.topo_order.push_back(v);
        for (int c : children[static_cast<std::size_t>(v)]) {
            if (--indeg[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
        }
    }
    if (static_cast<int>(dag.topo_order.size()) != dag.p) {
        throw std::runtime_error("load_dag_csv: edge list contains a cycle");
    }
    return dag;
}

}  // namespace covcal
