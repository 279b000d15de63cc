#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "covcal/config.hpp"
#include "covcal/conformal.hpp"
#include "covcal/dag.hpp"
#include "covcal/discovery.hpp"
#include "covcal/ingest.hpp"

namespace covcal {

enum class Method : std::uint8_t { Oracle = 0, Estimated = 1, Pooled = 2, Corrected = 3 };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct EvaluationRecord {
    std::uint64_t seed = 0;
    Method method = Method::Oracle;
    int test_intervention = -1;
    int gene = -1;
    double center = 0.0;
    double radius = 0.0;  // +inf when infeasible
    bool covered = false;
    bool feasible = true;
    long n_cal = 0;
    double delta_true = 0.0;
    double delta_hat = 0.0;
    double delta_inject = std::numeric_limits<double>::quiet_NaN();  // set by run_ablation only
};

struct MethodSummary {
    Method method = Method::Oracle;
    double delta_inject = std::numeric_limits<double>::quiet_NaN();
    long n_records = 0;
    double coverage = 0.0;
    double mean_width = 0.0;  // over feasible records
    double mean_n_cal = 0.0;
    double mean_delta_hat = 0.0;
    double mean_delta_true = 0.0;
    double feasible_fraction = 1.0;
    double bootstrap_sd = std::numeric_limits<double>::quiet_NaN();
};

struct Report {
    std::vector<MethodSummary> rows;
    long n_pairs = 0;
    long skipped_pairs = 0;
    bool has_bootstrap = false;
};

struct RunResult {
    Report report;
    std::vector<EvaluationRecord> records;
};

/// Synthetic nonconformity scores |N(0, sigma)| per (intervention, gene);
/// sigma_affected where z=1, sigma_unaffected where z=0. Rows follow
/// z.interventions order.
Eigen::MatrixXd gen_scores(const ZMatrix& z, double sigma_unaffected, double sigma_affected,
                           std::uint64_t seed);

/// Largest-remainder sizes for (train, cal, test); fractional-part ties
/// (within 1e-9) are resolved toward the later split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions);

struct SplitResult {
    std::vector<int> train, cal, test;
};

/// Disjoint partition by a seeded shuffle followed by largest-remainder sizes.
SplitResult split_interventions(const std::vector<int>& interventions,
                                const std::array<double, 3>& fractions, std::uint64_t seed);

/// Main synthetic experiment: DAG + SEM sampling, DEG discovery on train+cal,
/// descendant estimates, synthetic scores, and per-(test intervention, safe
/// gene) evaluation of the configured methods. threads=0 uses hardware
/// concurrency; aggregation is ordered by seed regardless of thread count.
RunResult run_main(const ExperimentConfig& cfg, int threads = 0);

/// Controlled-contamination ablation over cfg.delta_inject: the truly
/// unaffected calibration set is contaminated by resampled affected scores;
/// the corrected method runs at alpha' = alpha - g(delta_inject, n) with the
/// order-statistic rank clamped at n. Pairs with no affected calibration
/// points are skipped at every delta.
RunResult run_ablation(const ExperimentConfig& cfg, int threads = 0);

/// Generic real-perturbation pipeline on an ingested LFC matrix: proxy oracle
/// sets from |LFC| quantiles, descendant estimates from train+cal, scores
/// |LFC|, and the corrected method's coverage averaged over feasible
/// evaluations only.
RunResult run_real(const PerturbMatrix& m, const ExperimentConfig& cfg);

struct BoundGapRow {
    Method method = Method::Oracle;
    double delta = 0.0;
    double coverage = 0.0;
    double bound = 0.0;
    double gap = 0.0;
    long n = 0;
};

/// Per-method, per-delta gap between empirical coverage and the theoretical
/// lower bound at the method's nominal contamination (0 for oracle/pooled).
std::vector<BoundGapRow> bound_gap(const Report& report, double alpha);

struct RecoverySimResult {
    long superset_events = 0;
    long superset_failures = 0;
    double superset_bound_mean = 0.0;  // mean union-bound prediction
    long fp_events = 0;
    long fp_count = 0;
    double eps_cx_bound = 0.0;

    double superset_failure_rate() const {
        return superset_events > 0 ? static_cast<double>(superset_failures) /
                                         static_cast<double>(superset_events)
                                   : 0.0;
    }
    double fp_rate() const {
        return fp_events > 0 ? static_cast<double>(fp_count) / static_cast<double>(fp_events) : 0.0;
    }
};

/// Corrupts true descendant sets of random chain/tree DAGs (p in [4,10]) with
/// miss probability eps_fn and inclusion probability eps_fp, runs the
/// intersection estimator, and tallies superset failures (over interventions
/// whose upstream sets contain only true ancestors) and false positives (over
/// pairs where upstream diversity holds in the true graph).
RecoverySimResult simulate_recovery(const RecoveryParams& params, int trials, std::uint64_t seed);

/// Deterministic 3-node construction where the diversity assumption fails and
/// the intersection estimator keeps the false positive. Returns true when the
/// spurious gene is retained.
bool diversity_violation_retains_fp();

/// Bootstrap SD of per-method coverage over B record resamples.
std::map<Method, double> bootstrap_stability(const std::vector<EvaluationRecord>& records, int b,
                                             std::uint64_t seed, bool corrected_feasible_only = false);

Report summarize(const std::vector<EvaluationRecord>& records, bool corrected_feasible_only);

void write_records_csv(const std::string& path, const std::vector<EvaluationRecord>& records,
                       bool with_delta_inject);
void write_summary_csv(const std::string& path, const Report& report);

// Synthetic real-pipeline fixture: LFC matrix from a known SEM where
// perturbations alternate between small and large sample counts, so rows have
// heterogeneous noise scales.
struct SmokeDataConfig {
    int p = 2000;
    int n_perturbations = 50;
    double d_avg = 1.0;
    double w_lo = 0.3;
    double w_hi = 1.0;
    int n_obs = 500;
    int n_small = 50;
    int n_big = 800;
    std::uint64_t seed = 1;
};

PerturbMatrix make_smoke_perturb_matrix(const SmokeDataConfig& cfg);

}  // namespace covcal
