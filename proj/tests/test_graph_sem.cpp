#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "covcal/dag.hpp"
#include "covcal/rng.hpp"

using namespace covcal;

namespace {

// independent reachability oracle: plain recursive DFS over adjacency lists
void dfs(int v, const std::vector<std::vector<int>>& adj, std::set<int>& seen) {
    for (int c : adj[static_cast<std::size_t>(v)]) {
        if (seen.insert(c).second) dfs(c, adj, seen);
    }
}

std::vector<std::set<int>> dfs_reachability(const Dag& dag) {
    const auto adj = dag.child_lists();
    std::vector<std::set<int>> out(static_cast<std::size_t>(dag.p));
    for (int v = 0; v < dag.p; ++v) dfs(v, adj, out[static_cast<std::size_t>(v)]);
    return out;
}

Dag chain_dag(int p, double w) {
    Dag d;
    d.p = p;
    for (int v = 0; v + 1 < p; ++v) d.edges.push_back({v, v + 1, w});
    for (int v = 0; v < p; ++v) d.topo_order.push_back(v);
    return d;
}

// Figure-style DAG: five upstream interventions, mid-layer g/h/k, target i.
// nodes: a1..a5 = 0..4, g=5, h=6, k=7, i=8, astar=9
Dag figure_dag() {
    Dag d;
    d.p = 10;
    d.edges = {{0, 5, 1.0}, {5, 8, 1.0}, {1, 6, 1.0}, {2, 6, 1.0},
               {3, 5, 1.0}, {3, 6, 1.0}, {4, 7, 1.0}, {9, 7, 1.0}};
    d.topo_order = {0, 1, 2, 3, 4, 9, 5, 6, 7, 8};
    return d;
}

}  // namespace

TEST_CASE("gen_er_dag param validation and degenerate cases") {
    CHECK_THROWS_AS(gen_er_dag(0, 1.0, 0.3, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_er_dag(10, -0.1, 0.3, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_er_dag(10, 10.0, 0.3, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_er_dag(10, 2.0, 1.0, 0.3, 1), std::invalid_argument);
    const Dag d = gen_er_dag(2, 0.0, 0.3, 1.0, 5);
    CHECK(d.edges.empty());
    CHECK(d.p == 2);
}

TEST_CASE("gen_er_dag expected edge count p*d/2") {
    double total = 0.0;
    const int runs = 1000;
    for (int s = 0; s < runs; ++s) {
        total += static_cast<double>(gen_er_dag(200, 2.0, 0.3, 1.0, 10000 + s).edges.size());
    }
    const double mean = total / runs;
    CHECK(mean > 190.0);
    CHECK(mean < 210.0);
}

TEST_CASE("gen_er_dag weights live in the magnitude band") {
    const Dag d = gen_er_dag(200, 2.0, 0.3, 1.0, 99);
    CHECK(d.edges.size() > 100);
    bool saw_negative = false;
    for (const Edge& e : d.edges) {
        CHECK(std::fabs(e.weight) >= 0.3);
        CHECK(std::fabs(e.weight) <= 1.0);
        saw_negative = saw_negative || e.weight < 0.0;
    }
    CHECK(saw_negative);
    d.validate();
}

TEST_CASE("gen_er_dag and sample_sem are deterministic per seed") {
    const Dag a = gen_er_dag(50, 2.0, 0.3, 1.0, 123);
    const Dag b = gen_er_dag(50, 2.0, 0.3, 1.0, 123);
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        CHECK(a.edges[i].parent == b.edges[i].parent);
        CHECK(a.edges[i].child == b.edges[i].child);
        CHECK(a.edges[i].weight == b.edges[i].weight);
    }
    const auto x = sample_sem(a, 20, 3, 55);
    const auto y = sample_sem(b, 20, 3, 55);
    CHECK((x - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("descendant_sets on simple graphs") {
    const Dag chain = chain_dag(3, 1.0);
    const auto d = descendant_sets(chain);
    CHECK(d.desc[0] == std::vector<int>{1, 2});
    CHECK(d.desc[1] == std::vector<int>{2});
    CHECK(d.desc[2].empty());

    Dag empty;
    empty.p = 4;
    empty.topo_order = {2, 0, 3, 1};
    const auto e = descendant_sets(empty);
    for (const auto& s : e.desc) CHECK(s.empty());
}

TEST_CASE("descendant_sets on the figure DAG") {
    const auto d = descendant_sets(figure_dag());
    CHECK(d.desc[3] == std::vector<int>{5, 6, 8});  // a4 reaches g, h, i
    CHECK(d.desc[0] == std::vector<int>{5, 8});     // a1 reaches g, i
    CHECK(d.desc[4] == std::vector<int>{7});
    CHECK_FALSE(d.contains(3, 7));
    CHECK(d.contains(3, 8));
}

TEST_CASE("descendant_sets transitivity property") {
    const Dag g = gen_er_dag(40, 2.5, 0.3, 1.0, 2024);
    const auto d = descendant_sets(g);
    for (int a = 0; a < g.p; ++a) {
        for (int b : d.desc[static_cast<std::size_t>(a)]) {
            for (int c : d.desc[static_cast<std::size_t>(b)]) {
                CHECK(d.contains(a, c));
            }
        }
    }
}

TEST_CASE("descendant_sets equals DFS reachability exhaustively up to p=6") {
    for (int p = 1; p <= 6; ++p) {
        const int n_pairs = p * (p - 1) / 2;
        for (std::uint32_t mask = 0; mask < (1u << n_pairs); ++mask) {
            Dag d;
            d.p = p;
            for (int v = 0; v < p; ++v) d.topo_order.push_back(v);
            int bit = 0;
            for (int a = 0; a < p; ++a) {
                for (int b = a + 1; b < p; ++b, ++bit) {
                    if (mask >> bit & 1u) d.edges.push_back({a, b, 0.5});
                }
            }
            const auto fast = descendant_sets(d);
            const auto oracle = dfs_reachability(d);
            for (int v = 0; v < p; ++v) {
                const std::set<int> got(fast.desc[static_cast<std::size_t>(v)].begin(),
                                        fast.desc[static_cast<std::size_t>(v)].end());
                REQUIRE(got == oracle[static_cast<std::size_t>(v)]);
            }
        }
    }
}

TEST_CASE("sample_sem marginals on the empty graph") {
    Dag empty;
    empty.p = 5;
    empty.topo_order = {0, 1, 2, 3, 4};
    const auto x = sample_sem(empty, 10000, std::nullopt, 31);
    for (int j = 0; j < empty.p; ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / (x.rows() - 1);
        CHECK(std::fabs(mean) < 0.05);
        CHECK(std::fabs(var - 1.0) < 0.1);
    }
}

TEST_CASE("sample_sem pins the intervened column at zero") {
    const Dag g = gen_er_dag(20, 2.0, 0.3, 1.0, 7);
    const auto x = sample_sem(g, 50, 11, 8);
    CHECK((x.col(11).array() == 0.0).all());
    CHECK((x.col(0).array() != 0.0).any());
}

TEST_CASE("sample_sem variance propagation on a weighted chain") {
    const double w = 0.7;
    const Dag chain = chain_dag(2, w);
    const auto x = sample_sem(chain, 10000, std::nullopt, 17);
    const double mean = x.col(1).mean();
    const double var = (x.col(1).array() - mean).square().sum() / (x.rows() - 1);
    CHECK(std::fabs(var - (w * w + 1.0)) < 0.1);
}

TEST_CASE("non-descendant columns are distributionally unchanged under do(a)") {
    const Dag g = gen_er_dag(30, 2.0, 0.3, 1.0, 4711);
    const auto d = descendant_sets(g);
    const int a = g.topo_order[2];
    const int n = 5000;
    const auto obs = sample_sem(g, n, std::nullopt, 100);
    const auto intv = sample_sem(g, n, a, 101);
    for (int i = 0; i < g.p; ++i) {
        if (i == a || d.contains(a, i)) continue;
        const double m1 = obs.col(i).mean();
        const double m2 = intv.col(i).mean();
        const double v1 = (obs.col(i).array() - m1).square().sum() / (n - 1);
        const double v2 = (intv.col(i).array() - m2).square().sum() / (n - 1);
        const double se_mean = std::sqrt(v1 / n + v2 / n);
        CHECK(std::fabs(m1 - m2) <= 4.0 * se_mean);
        const double se_var = std::sqrt(2.0 * v1 * v1 / (n - 1) + 2.0 * v2 * v2 / (n - 1));
        CHECK(std::fabs(v1 - v2) <= 4.0 * se_var);
    }
}

TEST_CASE("dataset sampling and validation") {
    const Dag g = gen_er_dag(15, 2.0, 0.3, 1.0, 5);
    const auto data = sample_dataset(g, 40, 30, {2, 7}, 9);
    data.validate();
    CHECK(data.obs.rows() == 40);
    CHECK(data.per_intervention.at(2).rows() == 30);
    CHECK((data.per_intervention.at(7).col(7).array() == 0.0).all());

    InterventionalDataset bad = data;
    bad.per_intervention[2](0, 2) = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("dag csv round trip") {
    const Dag g = gen_er_dag(25, 2.0, 0.3, 1.0, 77);
    const auto path = std::filesystem::temp_directory_path() / "covcal_dag_test.csv";
    save_dag_csv(g, path.string());
    const Dag back = load_dag_csv(path.string());
    back.validate();
    REQUIRE(back.edges.size() == g.edges.size());
    std::set<std::tuple<int, int, double>> a, b;
    for (const auto& e : g.edges) a.insert({e.parent, e.child, e.weight});
    for (const auto& e : back.edges) b.insert({e.parent, e.child, e.weight});
    CHECK(a == b);
    std::filesystem::remove(path);
}
