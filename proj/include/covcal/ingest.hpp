#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "covcal/affected.hpp"

namespace covcal {

// Perturbation-major log-fold-change matrix.
struct PerturbMatrix {
    std::vector<std::string> genes;
    std::vector<std::string> perturbations;
    Eigen::MatrixXd lfc;  // |perturbations| x |genes|
    std::optional<std::vector<int>> cell_counts;

    int n_genes() const { return static_cast<int>(genes.size()); }
    int n_perturbations() const { return static_cast<int>(perturbations.size()); }
};

/// Loads "gene,<pert1>,<pert2>,..." with one row per gene and numeric cells;
/// malformed numerics raise with the row/column location.
PerturbMatrix load_lfc_csv(const std::string& path);

/// Loads "cell_id,perturbation,<gene...>" of log-normalized expression.
/// Genes expressed (nonzero) in fewer than min_expr_frac of all cells are
/// dropped, perturbations with fewer than min_cells cells are dropped, and
/// LFC is the mean difference against the control perturbation.
PerturbMatrix load_cells_csv(const std::string& path, const std::string& control_label,
                             int min_cells, double min_expr_frac);

/// Per perturbation, the ceil(top_frac * n_genes) genes with largest |LFC|;
/// ties break to the lower gene index. Keys are perturbation row indices.
AffectedSets proxy_affected_sets(const PerturbMatrix& m, double top_frac);

void save_lfc_csv(const PerturbMatrix& m, const std::string& path);

}  // namespace covcal
