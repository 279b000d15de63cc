#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "covcal/affected.hpp"
#include "covcal/rng.hpp"

using namespace covcal;

namespace {

Dag chain2(double w) {
    Dag d;
    d.p = 2;
    d.edges = {{0, 1, w}};
    d.topo_order = {0, 1};
    return d;
}

}  // namespace

TEST_CASE("intervened node is never in its own affected set") {
    const Dag g = gen_er_dag(12, 2.0, 0.3, 1.0, 42);
    const auto data = sample_dataset(g, 100, 100, {0, 3, 9}, 11);
    for (auto variant : {DegScore::MeanT, DegScore::AbsT}) {
        const auto s = compute_affected_sets(data, 0.05, variant);
        for (const auto& [a, genes] : s.sets) {
            CHECK_FALSE(s.contains(a, a));
            (void)genes;
        }
    }
}

TEST_CASE("abs_t detects the variance change on a weighted chain") {
    // do(0) drops Var of node 1 from 2 to 1; the scale test sees it
    int hits = 0;
    const int runs = 60;
    for (int r = 0; r < runs; ++r) {
        const Dag d = chain2(1.0);
        const auto data = sample_dataset(d, 200, 200, {0}, derive_seed(500, {static_cast<std::uint64_t>(r)}));
        const auto s = compute_affected_sets(data, 0.05, DegScore::AbsT);
        if (s.contains(0, 1)) ++hits;
    }
    CHECK(hits >= static_cast<int>(0.95 * runs));
}

TEST_CASE("mean_t has no power against a pure variance change") {
    int hits = 0;
    const int runs = 40;
    for (int r = 0; r < runs; ++r) {
        const Dag d = chain2(1.0);
        const auto data = sample_dataset(d, 200, 200, {0}, derive_seed(501, {static_cast<std::uint64_t>(r)}));
        const auto s = compute_affected_sets(data, 0.05, DegScore::MeanT);
        if (s.contains(0, 1)) ++hits;
    }
    CHECK(hits <= runs / 2);
}

TEST_CASE("global null keeps affected sets small") {
    Dag empty;
    empty.p = 20;
    for (int v = 0; v < empty.p; ++v) empty.topo_order.push_back(v);
    double total = 0.0;
    const int runs = 50;
    for (int r = 0; r < runs; ++r) {
        const auto data = sample_dataset(empty, 80, 80, {4},
                                         derive_seed(502, {static_cast<std::uint64_t>(r)}));
        const auto s = compute_affected_sets(data, 0.05, DegScore::MeanT);
        total += static_cast<double>(s.sets.at(4).size());
    }
    CHECK(total / runs <= 0.05 * empty.p);
}

TEST_CASE("false discoveries among the detected sets stay near the fdr level") {
    // fraction of S_a outside desc(a), averaged over seeds, should be about q
    double outside = 0.0, detected = 0.0;
    for (int r = 0; r < 100; ++r) {
        const Dag g = gen_er_dag(15, 2.0, 0.3, 1.0, derive_seed(503, {static_cast<std::uint64_t>(r)}));
        const auto desc = descendant_sets(g);
        const int a = g.topo_order[0];
        const auto data = sample_dataset(g, 250, 250, {a},
                                         derive_seed(504, {static_cast<std::uint64_t>(r)}));
        const auto s = compute_affected_sets(data, 0.05, DegScore::AbsT);
        for (int i : s.sets.at(a)) {
            detected += 1.0;
            if (!desc.contains(a, i)) outside += 1.0;
        }
    }
    if (detected > 0.0) CHECK(outside / detected <= 0.05 + 0.02);
    CHECK(detected > 0.0);
}

TEST_CASE("affected sets are monotone in q") {
    const Dag g = gen_er_dag(15, 2.5, 0.3, 1.0, 66);
    const auto data = sample_dataset(g, 150, 150, {1, 5, 8}, 67);
    const auto narrow = compute_affected_sets(data, 0.02, DegScore::AbsT);
    const auto wide = compute_affected_sets(data, 0.20, DegScore::AbsT);
    for (const auto& [a, genes] : narrow.sets) {
        for (int i : genes) CHECK(wide.contains(a, i));
    }
}

TEST_CASE("affected sets are deterministic given the dataset") {
    const Dag g = gen_er_dag(10, 2.0, 0.3, 1.0, 3);
    const auto data = sample_dataset(g, 60, 60, {2, 6}, 4);
    const auto s1 = compute_affected_sets(data, 0.05);
    const auto s2 = compute_affected_sets(data, 0.05);
    CHECK(s1.sets == s2.sets);
}

TEST_CASE("affected csv dump") {
    AffectedSets s;
    s.q = 0.05;
    s.sets[3] = {1, 7};
    s.sets[5] = {};
    const auto path = std::filesystem::temp_directory_path() / "covcal_affected_test.csv";
    save_affected_csv(s, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "intervention,gene");
    std::getline(in, line);
    CHECK(line == "3,1");
    std::getline(in, line);
    CHECK(line == "3,7");
    CHECK_FALSE(std::getline(in, line));
    std::filesystem::remove(path);
}
