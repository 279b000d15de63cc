#pragma once

#include <map>
#include <string>
#include <vector>

#include "covcal/dag.hpp"

namespace covcal {

enum class DegScore {
    MeanT,  // Welch t-test on raw values
    AbsT,   // Welch t-test on |value - arm mean| (scale test)
};

// Differentially affected set S_a per intervention, from gene-wise tests with
// BH correction applied within each intervention. The intervened node itself
// is always removed from its own set.
struct AffectedSets {
    double q = 0.0;
    std::map<int, std::vector<int>> sets;  // sorted gene lists

    bool contains(int a, int i) const;
};

AffectedSets compute_affected_sets(const InterventionalDataset& data, double q,
                                   DegScore score = DegScore::MeanT);

/// CSV dump: "intervention,gene", one row per member.
void save_affected_csv(const AffectedSets& s, const std::string& path);

}  // namespace covcal
