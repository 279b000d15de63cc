#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "covcal/affected.hpp"
#include "covcal/dag.hpp"

namespace covcal {

// Binary affected/unaffected indicators, one row per intervention. The (a, a)
// cell is structurally 0 (descendant sets exclude self) and is skipped by
// classification metrics; calibration selection treats it as selectable.
struct ZMatrix {
    std::vector<int> interventions;  // row order
    int p = 0;
    std::vector<std::uint8_t> z;  // row-major, |interventions| x p

    static ZMatrix from_descendants(const DescendantSets& d, const std::vector<int>& interventions);
    static ZMatrix from_sets(const std::map<int, std::vector<int>>& sets, int p);

    bool has_row(int a) const { return row_of_.count(a) != 0; }
    std::uint8_t at(int a, int i) const;
    bool applicable(int a, int i) const { return a != i; }

  private:
    std::map<int, std::size_t> row_of_;
};

/// U(a) = {b != a : a in S_b}.
std::map<int, std::vector<int>> upstream_sets(const AffectedSets& s);

/// Descendant-set estimates: S_a when U(a) is empty, otherwise
/// S_a ∩ ⋂_{b in U(a)} S_b.
std::map<int, std::vector<int>> intersect_descendants(const AffectedSets& s);

struct ClassificationMetrics {
    // "false positive" = truly affected but declared unaffected (selected into
    // the calibration pool); the error that contaminates.
    std::optional<double> fpr;
    std::optional<double> fnr;
    double pi0 = 0.0;
    double delta_plugin = 0.0;
};

ClassificationMetrics classification_metrics(const ZMatrix& z_hat, const ZMatrix& z_true,
                                             int target, const std::vector<int>& pool);

struct CalibrationSelection {
    std::vector<int> selected;
    long n = 0;
    long m = 0;          // good members, when ground truth is supplied
    double delta = 0.0;  // (n - m) / n, 0 when n == 0
};

/// A_hat = {a in pool : z_hat(a, target) = 0}; pool must not contain a_star.
CalibrationSelection select_calibration(const ZMatrix& z_hat, int target, int a_star,
                                        const std::vector<int>& pool,
                                        const ZMatrix* z_true = nullptr);

/// CSV dump: "intervention,gene,zhat".
void save_zmatrix_csv(const ZMatrix& z, const std::string& path);

}  // namespace covcal
