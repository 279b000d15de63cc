#include "covcal/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "covcal/rng.hpp"
#include "covcal/stats.hpp"

namespace covcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// substream tags
constexpr std::uint64_t kTagGraph = 0x01;
constexpr std::uint64_t kTagPick = 0x02;
constexpr std::uint64_t kTagSplit = 0x03;
constexpr std::uint64_t kTagData = 0x04;
constexpr std::uint64_t kTagScores = 0x05;
constexpr std::uint64_t kTagContam = 0x06;
constexpr std::uint64_t kTagRecovery = 0x07;
constexpr std::uint64_t kTagBootstrap = 0x08;

bool method_enabled(const ExperimentConfig& cfg, Method m) {
    const char* name = method_name(m);
    return std::find(cfg.methods.begin(), cfg.methods.end(), name) != cfg.methods.end();
}

struct SeedOutput {
    std::vector<EvaluationRecord> records;
    long skipped = 0;
    long pairs = 0;
};

template <class Fn>
std::vector<SeedOutput> map_seeds(const std::vector<std::uint64_t>& seeds, int threads, Fn fn) {
    std::vector<SeedOutput> out(seeds.size());
    unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(seeds.size()));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) out[i] = fn(seeds[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= seeds.size()) break;
                out[i] = fn(seeds[i]);
            }
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

RunResult collect(std::vector<SeedOutput> outs, bool corrected_feasible_only) {
    RunResult r;
    long skipped = 0, pairs = 0;
    std::size_t total = 0;
    for (const auto& o : outs) total += o.records.size();
    r.records.reserve(total);
    for (auto& o : outs) {
        r.records.insert(r.records.end(), o.records.begin(), o.records.end());
        skipped += o.skipped;
        pairs += o.pairs;
    }
    r.report = summarize(r.records, corrected_feasible_only);
    r.report.skipped_pairs = skipped;
    r.report.n_pairs = pairs;
    return r;
}

double finite_or(double v, double fallback) { return std::isfinite(v) ? v : fallback; }

}  // namespace

const char* method_name(Method m) {
    switch (m) {
        case Method::Oracle: return "oracle";
        case Method::Estimated: return "estimated";
        case Method::Pooled: return "pooled";
        case Method::Corrected: return "corrected";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "oracle") return Method::Oracle;
    if (name == "estimated") return Method::Estimated;
    if (name == "pooled") return Method::Pooled;
    if (name == "corrected") return Method::Corrected;
    throw std::invalid_argument("unknown method '" + name + "'");
}

Eigen::MatrixXd gen_scores(const ZMatrix& z, double sigma_unaffected, double sigma_affected,
                           std::uint64_t seed) {
    if (!(sigma_unaffected > 0.0) || !(sigma_affected > 0.0)) {
        throw std::invalid_argument("gen_scores: sigmas must be positive");
    }
    Rng rng(seed);
    const auto rows = static_cast<Eigen::Index>(z.interventions.size());
    Eigen::MatrixXd s(rows, z.p);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const int a = z.interventions[static_cast<std::size_t>(r)];
        for (int i = 0; i < z.p; ++i) {
            const double sigma = z.at(a, i) ? sigma_affected : sigma_unaffected;
            s(r, i) = std::fabs(sigma * rng.normal());
        }
    }
    return s;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& fractions) {
    std::array<double, 3> quota{};
    std::array<std::size_t, 3> base{};
    std::size_t assigned = 0;
    for (int j = 0; j < 3; ++j) {
        quota[static_cast<std::size_t>(j)] = static_cast<double>(n) * fractions[static_cast<std::size_t>(j)];
        base[static_cast<std::size_t>(j)] = static_cast<std::size_t>(std::floor(quota[static_cast<std::size_t>(j)] + 1e-9));
        assigned += base[static_cast<std::size_t>(j)];
    }
    std::size_t remaining = n - assigned;
    // largest remainder; near-ties go to the later split
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double fa = quota[static_cast<std::size_t>(a)] - std::floor(quota[static_cast<std::size_t>(a)] + 1e-9);
        const double fb = quota[static_cast<std::size_t>(b)] - std::floor(quota[static_cast<std::size_t>(b)] + 1e-9);
        if (std::fabs(fa - fb) > 1e-9) return fa > fb;
        return a > b;
    });
    for (std::size_t r = 0; r < remaining; ++r) base[static_cast<std::size_t>(order[r % 3])] += 1;
    return base;
}

SplitResult split_interventions(const std::vector<int>& interventions,
                                const std::array<double, 3>& fractions, std::uint64_t seed) {
    const double fsum = fractions[0] + fractions[1] + fractions[2];
    if (std::fabs(fsum - 1.0) > 1e-9) throw std::invalid_argument("split_interventions: fractions must sum to 1");
    std::vector<int> shuffled = interventions;
    Rng rng(seed);
    rng.shuffle(shuffled);
    const auto sizes = split_sizes(shuffled.size(), fractions);
    SplitResult s;
    s.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
    s.cal.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(sizes[0]),
                 shuffled.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]));
    s.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]), shuffled.end());
    return s;
}

namespace {

// Shared per-seed synthetic setup: graph, intervention set, split, truth, scores.
struct SyntheticSeed {
    Dag dag;
    DescendantSets desc;
    std::vector<int> interventions;
    SplitResult split;
    ZMatrix z_true;
    Eigen::MatrixXd scores;  // |interventions| x p
    std::map<int, Eigen::Index> score_row;
};

SyntheticSeed make_synthetic_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    SyntheticSeed s;
    s.dag = gen_er_dag(cfg.p, cfg.d_avg, cfg.w_lo, cfg.w_hi, derive_seed(seed, {kTagGraph}));
    s.desc = descendant_sets(s.dag);
    Rng pick(derive_seed(seed, {kTagPick}));
    s.interventions = pick.sample_without_replacement(cfg.p, cfg.n_interventions);
    s.split = split_interventions(s.interventions, cfg.split_fractions, derive_seed(seed, {kTagSplit}));
    s.z_true = ZMatrix::from_descendants(s.desc, s.interventions);
    s.scores = gen_scores(s.z_true, cfg.sigma_unaffected, cfg.sigma_affected,
                          derive_seed(seed, {kTagScores}));
    for (std::size_t r = 0; r < s.interventions.size(); ++r) {
        s.score_row[s.interventions[r]] = static_cast<Eigen::Index>(r);
    }
    return s;
}

EvaluationRecord base_record(std::uint64_t seed, Method m, int a_star, int gene, double q,
                             double test_score, long n_cal) {
    EvaluationRecord rec;
    rec.seed = seed;
    rec.method = m;
    rec.test_intervention = a_star;
    rec.gene = gene;
    rec.center = 0.0;
    rec.radius = q;
    rec.feasible = std::isfinite(q);
    rec.covered = make_interval(0.0, q).covers(test_score);
    rec.n_cal = n_cal;
    return rec;
}

SeedOutput run_main_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeedOutput out;
    const SyntheticSeed s = make_synthetic_seed(cfg, seed);

    // DEG discovery sees only train+cal interventions
    std::vector<int> tc = s.split.train;
    tc.insert(tc.end(), s.split.cal.begin(), s.split.cal.end());
    const InterventionalDataset data =
        sample_dataset(s.dag, cfg.n_obs, cfg.n_per_intervention, tc, derive_seed(seed, {kTagData}));
    const AffectedSets deg = compute_affected_sets(data, cfg.q_fdr, cfg.deg_score);
    const ZMatrix z_hat = ZMatrix::from_sets(intersect_descendants(deg), cfg.p);

    const auto& cal = s.split.cal;
    std::vector<double> pool_scores(cal.size()), est_scores, oracle_scores;
    for (int a_star : s.split.test) {
        const Eigen::Index star_row = s.score_row.at(a_star);
        for (int gene = 0; gene < cfg.p; ++gene) {
            if (gene == a_star || s.z_true.at(a_star, gene)) continue;
            ++out.pairs;
            const double test_score = s.scores(star_row, gene);

            oracle_scores.clear();
            est_scores.clear();
            long pool_bad = 0;
            long est_bad = 0;
            long est_raw_hits = 0;
            for (std::size_t c = 0; c < cal.size(); ++c) {
                const int a = cal[c];
                const double sc = s.scores(s.score_row.at(a), gene);
                pool_scores[c] = sc;
                const bool truly_affected = s.z_true.at(a, gene) != 0;
                if (truly_affected) ++pool_bad;
                if (!truly_affected) oracle_scores.push_back(sc);
                if (z_hat.at(a, gene) == 0) {
                    est_scores.push_back(sc);
                    if (truly_affected) ++est_bad;
                    if (deg.contains(a, gene)) ++est_raw_hits;
                }
            }
            const long n_est = static_cast<long>(est_scores.size());
            const double est_delta_true =
                n_est > 0 ? static_cast<double>(est_bad) / static_cast<double>(n_est) : 0.0;
            double delta_hat = 0.0;
            switch (cfg.delta_hat_policy) {
                case DeltaHatPolicy::Oracle: delta_hat = est_delta_true; break;
                case DeltaHatPolicy::SelfConsistency:
                    delta_hat = n_est > 0 ? static_cast<double>(est_raw_hits) / static_cast<double>(n_est)
                                          : 0.0;
                    break;
                case DeltaHatPolicy::Fixed: delta_hat = cfg.delta_hat_fixed; break;
            }

            if (method_enabled(cfg, Method::Oracle)) {
                const double q = conformal_quantile(oracle_scores, cfg.alpha);
                auto rec = base_record(seed, Method::Oracle, a_star, gene, q, test_score,
                                       static_cast<long>(oracle_scores.size()));
                out.records.push_back(rec);
            }
            if (method_enabled(cfg, Method::Estimated)) {
                const double q = conformal_quantile(est_scores, cfg.alpha);
                auto rec = base_record(seed, Method::Estimated, a_star, gene, q, test_score, n_est);
                rec.delta_true = est_delta_true;
                rec.delta_hat = delta_hat;
                out.records.push_back(rec);
            }
            if (method_enabled(cfg, Method::Pooled)) {
                const double q = conformal_quantile(pool_scores, cfg.alpha);
                auto rec = base_record(seed, Method::Pooled, a_star, gene, q, test_score,
                                       static_cast<long>(cal.size()));
                rec.delta_true = cal.empty() ? 0.0
                                             : static_cast<double>(pool_bad) /
                                                   static_cast<double>(cal.size());
                out.records.push_back(rec);
            }
            if (method_enabled(cfg, Method::Corrected)) {
                double q = kInf;
                if (n_est > 0) {
                    const CorrectedAlpha ca = corrected_alpha(cfg.alpha, delta_hat, n_est);
                    if (ca.feasible_hint) q = conformal_quantile(est_scores, ca.alpha_prime);
                }
                auto rec = base_record(seed, Method::Corrected, a_star, gene, q, test_score, n_est);
                rec.delta_true = est_delta_true;
                rec.delta_hat = delta_hat;
                out.records.push_back(rec);
            }
        }
    }
    return out;
}

SeedOutput run_ablation_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    SeedOutput out;
    const SyntheticSeed s = make_synthetic_seed(cfg, seed);
    const auto& cal = s.split.cal;

    std::vector<double> pool_scores(cal.size()), clean, affected, contaminated;
    for (int a_star : s.split.test) {
        const Eigen::Index star_row = s.score_row.at(a_star);
        for (int gene = 0; gene < cfg.p; ++gene) {
            if (gene == a_star || s.z_true.at(a_star, gene)) continue;
            clean.clear();
            affected.clear();
            for (std::size_t c = 0; c < cal.size(); ++c) {
                const int a = cal[c];
                const double sc = s.scores(s.score_row.at(a), gene);
                pool_scores[c] = sc;
                if (s.z_true.at(a, gene)) {
                    affected.push_back(sc);
                } else {
                    clean.push_back(sc);
                }
            }
            if (affected.empty()) {
                ++out.skipped;
                continue;
            }
            ++out.pairs;
            const double test_score = s.scores(star_row, gene);
            const long m_clean = static_cast<long>(clean.size());
            const double q_oracle = conformal_quantile(clean, cfg.alpha);
            const double q_pooled = conformal_quantile(pool_scores, cfg.alpha);

            for (std::size_t di = 0; di < cfg.delta_inject.size(); ++di) {
                const double d = cfg.delta_inject[di];
                const long c_n = std::lround(d * static_cast<double>(m_clean));
                contaminated = clean;
                double realized = 0.0;
                if (c_n > 0) {
                    Rng rng(derive_seed(seed, {kTagContam, static_cast<std::uint64_t>(a_star),
                                               static_cast<std::uint64_t>(gene),
                                               static_cast<std::uint64_t>(di)}));
                    const auto pos =
                        rng.sample_without_replacement(static_cast<int>(m_clean), static_cast<int>(c_n));
                    for (int p_i : pos) {
                        contaminated[static_cast<std::size_t>(p_i)] =
                            affected[static_cast<std::size_t>(rng.below(affected.size()))];
                    }
                    realized = static_cast<double>(c_n) / static_cast<double>(m_clean);
                }

                if (method_enabled(cfg, Method::Oracle)) {
                    auto rec = base_record(seed, Method::Oracle, a_star, gene, q_oracle, test_score, m_clean);
                    rec.delta_inject = d;
                    out.records.push_back(rec);
                }
                if (method_enabled(cfg, Method::Estimated)) {
                    const double q = conformal_quantile(contaminated, cfg.alpha);
                    auto rec = base_record(seed, Method::Estimated, a_star, gene, q, test_score, m_clean);
                    rec.delta_true = realized;
                    rec.delta_hat = realized;
                    rec.delta_inject = d;
                    out.records.push_back(rec);
                }
                if (method_enabled(cfg, Method::Pooled)) {
                    auto rec = base_record(seed, Method::Pooled, a_star, gene, q_pooled, test_score,
                                           static_cast<long>(cal.size()));
                    rec.delta_inject = d;
                    out.records.push_back(rec);
                }
                if (method_enabled(cfg, Method::Corrected)) {
                    // alpha' = alpha - g(delta_inject, n), with the rank clamped
                    // at n so the quantile stays finite (the max score).
                    const CorrectedAlpha ca = corrected_alpha(cfg.alpha, d, m_clean);
                    long k = ca.feasible_hint ? conformal_rank(m_clean, ca.alpha_prime) : m_clean + 1;
                    k = std::min(k, m_clean);
                    const double q = kth_smallest(contaminated, static_cast<std::size_t>(k));
                    auto rec = base_record(seed, Method::Corrected, a_star, gene, q, test_score, m_clean);
                    rec.delta_true = realized;
                    rec.delta_hat = d;
                    rec.delta_inject = d;
                    out.records.push_back(rec);
                }
            }
        }
    }
    return out;
}

}  // namespace

RunResult run_main(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    auto outs = map_seeds(cfg.seeds, threads,
                          [&](std::uint64_t seed) { return run_main_seed(cfg, seed); });
    return collect(std::move(outs), /*corrected_feasible_only=*/false);
}

RunResult run_ablation(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    if (cfg.delta_inject.empty()) {
        throw std::invalid_argument("run_ablation: delta_inject must be nonempty");
    }
    auto outs = map_seeds(cfg.seeds, threads,
                          [&](std::uint64_t seed) { return run_ablation_seed(cfg, seed); });
    return collect(std::move(outs), /*corrected_feasible_only=*/false);
}

RunResult run_real(const PerturbMatrix& m, const ExperimentConfig& cfg) {
    cfg.validate();
    const int n_pert = m.n_perturbations();
    const int n_genes = m.n_genes();
    if (n_pert < 3) throw std::invalid_argument("run_real: need at least 3 perturbations");

    std::vector<int> rows(static_cast<std::size_t>(n_pert));
    std::iota(rows.begin(), rows.end(), 0);
    const SplitResult split = split_interventions(rows, cfg.split_fractions, cfg.split_seed);

    const AffectedSets proxy = proxy_affected_sets(m, cfg.top_frac);

    // map perturbation rows onto gene ids so the intersection estimator works
    // in one id space; unmatched names get out-of-range sentinels
    std::map<std::string, int> gene_index;
    for (int g = 0; g < n_genes; ++g) gene_index[m.genes[static_cast<std::size_t>(g)]] = g;
    std::vector<int> key_of(static_cast<std::size_t>(n_pert));
    std::set<int> used;
    int sentinel = n_genes;
    for (int a = 0; a < n_pert; ++a) {
        auto it = gene_index.find(m.perturbations[static_cast<std::size_t>(a)]);
        int key = it != gene_index.end() ? it->second : sentinel++;
        if (!used.insert(key).second) key = sentinel++;
        key_of[static_cast<std::size_t>(a)] = key;
    }

    std::vector<int> tc = split.train;
    tc.insert(tc.end(), split.cal.begin(), split.cal.end());
    AffectedSets deg_keyed;
    deg_keyed.q = proxy.q;
    for (int a : tc) deg_keyed.sets[key_of[static_cast<std::size_t>(a)]] = proxy.sets.at(a);
    const auto est_sets = intersect_descendants(deg_keyed);

    auto estimated_affected = [&](int a, int gene) {
        const auto& s = est_sets.at(key_of[static_cast<std::size_t>(a)]);
        return std::binary_search(s.begin(), s.end(), gene);
    };

    SeedOutput out;
    std::vector<double> pool_scores, est_scores, oracle_scores;
    for (int a_star : split.test) {
        const int star_gene =
            gene_index.count(m.perturbations[static_cast<std::size_t>(a_star)])
                ? gene_index.at(m.perturbations[static_cast<std::size_t>(a_star)])
                : -1;
        for (int gene = 0; gene < n_genes; ++gene) {
            if (gene == star_gene || proxy.contains(a_star, gene)) continue;
            ++out.pairs;
            const double test_score = std::fabs(m.lfc(a_star, gene));

            pool_scores.clear();
            est_scores.clear();
            oracle_scores.clear();
            long pool_bad = 0, est_bad = 0, est_raw_hits = 0;
            for (int a : split.cal) {
                const double sc = std::fabs(m.lfc(a, gene));
                pool_scores.push_back(sc);
                const bool proxy_affected = proxy.contains(a, gene);
                if (proxy_affected) ++pool_bad;
                if (!proxy_affected) oracle_scores.push_back(sc);
                if (!estimated_affected(a, gene)) {
                    est_scores.push_back(sc);
                    if (proxy_affected) {
                        ++est_bad;
                        ++est_raw_hits;
                    }
                }
            }
            const long n_est = static_cast<long>(est_scores.size());
            const double est_delta_true =
                n_est > 0 ? static_cast<double>(est_bad) / static_cast<double>(n_est) : 0.0;
            double delta_hat = 0.0;
            switch (cfg.delta_hat_policy) {
                case DeltaHatPolicy::Oracle: delta_hat = est_delta_true; break;
                case DeltaHatPolicy::SelfConsistency:
                    delta_hat = n_est > 0 ? static_cast<double>(est_raw_hits) / static_cast<double>(n_est)
                                          : 0.0;
                    break;
                case DeltaHatPolicy::Fixed: delta_hat = cfg.delta_hat_fixed; break;
            }

            if (method_enabled(cfg, Method::Oracle)) {
                const double q = conformal_quantile(oracle_scores, cfg.alpha);
                out.records.push_back(base_record(0, Method::Oracle, a_star, gene, q, test_score,
                                                  static_cast<long>(oracle_scores.size())));
            }
            if (method_enabled(cfg, Method::Estimated)) {
                const double q = conformal_quantile(est_scores, cfg.alpha);
                auto rec = base_record(0, Method::Estimated, a_star, gene, q, test_score, n_est);
                rec.delta_true = est_delta_true;
                rec.delta_hat = delta_hat;
                out.records.push_back(rec);
            }
            if (method_enabled(cfg, Method::Pooled)) {
                const double q = conformal_quantile(pool_scores, cfg.alpha);
                auto rec = base_record(0, Method::Pooled, a_star, gene, q, test_score,
                                       static_cast<long>(pool_scores.size()));
                rec.delta_true = pool_scores.empty()
                                     ? 0.0
                                     : static_cast<double>(pool_bad) /
                                           static_cast<double>(pool_scores.size());
                out.records.push_back(rec);
            }
            if (method_enabled(cfg, Method::Corrected)) {
                double q = kInf;
                if (n_est > 0) {
                    const CorrectedAlpha ca = corrected_alpha(cfg.alpha, delta_hat, n_est);
                    if (ca.feasible_hint) q = conformal_quantile(est_scores, ca.alpha_prime);
                }
                auto rec = base_record(0, Method::Corrected, a_star, gene, q, test_score, n_est);
                rec.delta_true = est_delta_true;
                rec.delta_hat = delta_hat;
                out.records.push_back(rec);
            }
        }
    }
    // corrected coverage is reported over feasible evaluations only
    RunResult r = collect({std::move(out)}, /*corrected_feasible_only=*/true);
    if (cfg.bootstrap_replicates > 0) {
        const auto sd = bootstrap_stability(r.records, cfg.bootstrap_replicates, cfg.bootstrap_seed,
                                            /*corrected_feasible_only=*/true);
        for (auto& row : r.report.rows) {
            auto it = sd.find(row.method);
            if (it != sd.end()) row.bootstrap_sd = it->second;
        }
        r.report.has_bootstrap = true;
    }
    return r;
}

std::vector<BoundGapRow> bound_gap(const Report& report, double alpha) {
    std::vector<BoundGapRow> rows;
    for (const auto& s : report.rows) {
        BoundGapRow g;
        g.method = s.method;
        const bool selective = s.method == Method::Estimated || s.method == Method::Corrected;
        g.delta = (selective && std::isfinite(s.delta_inject)) ? s.delta_inject : 0.0;
        g.coverage = s.coverage;
        g.n = std::max<long>(1, std::lround(s.mean_n_cal));
        g.bound = coverage_lower_bound(alpha, g.delta, g.n);
        g.gap = g.coverage - g.bound;
        rows.push_back(g);
    }
    return rows;
}

RecoverySimResult simulate_recovery(const RecoveryParams& params, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("simulate_recovery: trials must be >= 1");
    RecoverySimResult res;
    res.eps_cx_bound = 1.0 - (1.0 - params.eps_fn) * (1.0 - params.eps_fp);
    double bound_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {kTagRecovery, static_cast<std::uint64_t>(t)}));
        const int p = 4 + static_cast<int>(rng.below(7));  // 4..10
        Dag dag;
        dag.p = p;
        dag.topo_order.resize(static_cast<std::size_t>(p));
        std::iota(dag.topo_order.begin(), dag.topo_order.end(), 0);
        if (t % 2 == 0) {
            for (int v = 0; v + 1 < p; ++v) dag.edges.push_back({v, v + 1, rng.uniform(0.3, 1.0)});
        } else {
            for (int v = 1; v < p; ++v) {
                dag.edges.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(v))), v,
                                     rng.uniform(0.3, 1.0)});
            }
        }
        const DescendantSets desc = descendant_sets(dag);
        AffectedSets s;
        s.q = params.eps_fp;
        for (int a = 0; a < p; ++a) {
            std::vector<int> sa;
            for (int i = 0; i < p; ++i) {
                if (i == a) continue;
                const bool is_desc = desc.contains(a, i);
                const double keep = is_desc ? 1.0 - params.eps_fn : params.eps_fp;
                if (rng.uniform() < keep) sa.push_back(i);
            }
            s.sets[a] = std::move(sa);
        }
        const auto up = upstream_sets(s);
        const auto cand = intersect_descendants(s);
        for (int a = 0; a < p; ++a) {
            const auto& ua = up.at(a);
            const bool upstream_all_ancestors =
                std::all_of(ua.begin(), ua.end(), [&](int b) { return desc.contains(b, a); });
            if (upstream_all_ancestors) {
                ++res.superset_events;
                const auto& ca = cand.at(a);
                const auto& da = desc.desc[static_cast<std::size_t>(a)];
                const bool superset = std::includes(ca.begin(), ca.end(), da.begin(), da.end());
                if (!superset) ++res.superset_failures;
                bound_sum += std::min(1.0, static_cast<double>(da.size()) *
                                               static_cast<double>(ua.size() + 1) * params.eps_fn);
            }
            for (int i = 0; i < p; ++i) {
                if (i == a || desc.contains(a, i)) continue;
                bool diversity = false;
                for (int b = 0; b < p; ++b) {
                    if (b != a && desc.contains(b, a) && !desc.contains(b, i)) {
                        diversity = true;
                        break;
                    }
                }
                if (!diversity) continue;
                ++res.fp_events;
                const auto& ca = cand.at(a);
                if (std::binary_search(ca.begin(), ca.end(), i)) ++res.fp_count;
            }
        }
    }
    res.superset_bound_mean =
        res.superset_events > 0 ? bound_sum / static_cast<double>(res.superset_events) : 0.0;
    return res;
}

bool diversity_violation_retains_fp() {
    // b -> a, b -> i: the only ancestor of a also reaches i, so no upstream
    // set can prune a spurious i from S_a.
    AffectedSets s;
    s.q = 0.0;
    const int b = 0, a = 1, i = 2;
    s.sets[b] = {a, i};  // exact descendant set of b
    s.sets[a] = {i};     // false positive: i is not a descendant of a
    s.sets[i] = {};
    const auto cand = intersect_descendants(s);
    const auto& ca = cand.at(a);
    return std::binary_search(ca.begin(), ca.end(), i);
}

std::map<Method, double> bootstrap_stability(const std::vector<EvaluationRecord>& records, int b,
                                             std::uint64_t seed, bool corrected_feasible_only) {
    if (b < 2) throw std::invalid_argument("bootstrap_stability: need at least 2 replicates");
    std::map<Method, std::vector<const EvaluationRecord*>> by_method;
    for (const auto& r : records) by_method[r.method].push_back(&r);
    std::map<Method, double> out;
    for (const auto& [method, recs] : by_method) {
        const std::size_t n = recs.size();
        Rng rng(derive_seed(seed, {kTagBootstrap, static_cast<std::uint64_t>(method)}));
        std::vector<double> cov;
        cov.reserve(static_cast<std::size_t>(b));
        for (int rep = 0; rep < b; ++rep) {
            long covered = 0, counted = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const EvaluationRecord* r = recs[static_cast<std::size_t>(rng.below(n))];
                if (corrected_feasible_only && method == Method::Corrected && !r->feasible) continue;
                ++counted;
                covered += r->covered ? 1 : 0;
            }
            cov.push_back(counted > 0 ? static_cast<double>(covered) / static_cast<double>(counted)
                                      : 0.0);
        }
        double mean = 0.0;
        for (double c : cov) mean += c;
        mean /= static_cast<double>(cov.size());
        double ss = 0.0;
        for (double c : cov) ss += (c - mean) * (c - mean);
        out[method] = std::sqrt(ss / static_cast<double>(cov.size() - 1));
    }
    return out;
}

Report summarize(const std::vector<EvaluationRecord>& records, bool corrected_feasible_only) {
    struct Accum {
        long n = 0;
        long covered = 0;
        long coverage_counted = 0;
        long feasible = 0;
        double width_sum = 0.0;
        double n_cal_sum = 0.0;
        double dhat_sum = 0.0;
        double dtrue_sum = 0.0;
    };
    // key: (method, delta_inject as scaled long; NaN -> sentinel)
    std::map<std::pair<int, long>, Accum> acc;
    auto delta_key = [](double d) {
        return std::isfinite(d) ? std::lround(d * 1e9) : std::numeric_limits<long>::min();
    };
    for (const auto& r : records) {
        auto& a = acc[{static_cast<int>(r.method), delta_key(r.delta_inject)}];
        ++a.n;
        const bool count_for_coverage =
            !(corrected_feasible_only && r.method == Method::Corrected && !r.feasible);
        if (count_for_coverage) {
            ++a.coverage_counted;
            if (r.covered) ++a.covered;
        }
        if (r.feasible) {
            ++a.feasible;
            a.width_sum += 2.0 * r.radius;
        }
        a.n_cal_sum += static_cast<double>(r.n_cal);
        a.dhat_sum += r.delta_hat;
        a.dtrue_sum += r.delta_true;
    }
    Report rep;
    for (const auto& [key, a] : acc) {
        MethodSummary s;
        s.method = static_cast<Method>(key.first);
        s.delta_inject = key.second == std::numeric_limits<long>::min()
                             ? kNaN
                             : static_cast<double>(key.second) / 1e9;
        s.n_records = a.n;
        s.coverage = a.coverage_counted > 0
                         ? static_cast<double>(a.covered) / static_cast<double>(a.coverage_counted)
                         : 0.0;
        s.mean_width = a.feasible > 0 ? a.width_sum / static_cast<double>(a.feasible) : kNaN;
        s.mean_n_cal = a.n > 0 ? a.n_cal_sum / static_cast<double>(a.n) : 0.0;
        s.mean_delta_hat = a.n > 0 ? a.dhat_sum / static_cast<double>(a.n) : 0.0;
        s.mean_delta_true = a.n > 0 ? a.dtrue_sum / static_cast<double>(a.n) : 0.0;
        s.feasible_fraction = a.n > 0 ? static_cast<double>(a.feasible) / static_cast<double>(a.n) : 1.0;
        rep.rows.push_back(s);
    }
    std::sort(rep.rows.begin(), rep.rows.end(), [](const MethodSummary& a, const MethodSummary& b) {
        const double da = std::isfinite(a.delta_inject) ? a.delta_inject : -1.0;
        const double db = std::isfinite(b.delta_inject) ? b.delta_inject : -1.0;
        if (da != db) return da < db;
        return static_cast<int>(a.method) < static_cast<int>(b.method);
    });
    return rep;
}

namespace {

void write_double(std::ofstream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    out << buf;
}

}  // namespace

void write_records_csv(const std::string& path, const std::vector<EvaluationRecord>& records,
                       bool with_delta_inject) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_records_csv: cannot open " + path);
    out << "seed,method,test_intervention,gene,center,radius,covered,feasible,n_cal,delta_true,delta_hat";
    if (with_delta_inject) out << ",delta_inject";
    out << '\n';
    for (const auto& r : records) {
        out << r.seed << ',' << method_name(r.method) << ',' << r.test_intervention << ',' << r.gene
            << ',';
        write_double(out, r.center);
        out << ',';
        write_double(out, r.radius);
        out << ',' << (r.covered ? 1 : 0) << ',' << (r.feasible ? 1 : 0) << ',' << r.n_cal << ',';
        write_double(out, r.delta_true);
        out << ',';
        write_double(out, r.delta_hat);
        if (with_delta_inject) {
            out << ',';
            write_double(out, r.delta_inject);
        }
        out << '\n';
    }
}

void write_summary_csv(const std::string& path, const Report& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
    out << "method,delta_inject,n_records,coverage,mean_width,mean_n_cal,mean_delta_hat,"
           "mean_delta_true,feasible_fraction";
    if (report.has_bootstrap) out << ",bootstrap_sd";
    out << '\n';
    for (const auto& s : report.rows) {
        out << method_name(s.method) << ',';
        if (std::isfinite(s.delta_inject)) {
            write_double(out, s.delta_inject);
        }
        out << ',' << s.n_records << ',';
        write_double(out, s.coverage);
        out << ',';
        write_double(out, s.mean_width);
        out << ',';
        write_double(out, s.mean_n_cal);
        out << ',';
        write_double(out, s.mean_delta_hat);
        out << ',';
        write_double(out, s.mean_delta_true);
        out << ',';
        write_double(out, s.feasible_fraction);
        if (report.has_bootstrap) {
            out << ',';
            write_double(out, s.bootstrap_sd);
        }
        out << '\n';
    }
}

PerturbMatrix make_smoke_perturb_matrix(const SmokeDataConfig& cfg) {
    const Dag dag = gen_er_dag(cfg.p, cfg.d_avg, cfg.w_lo, cfg.w_hi, derive_seed(cfg.seed, {0x51}));
    Rng pick(derive_seed(cfg.seed, {0x52}));
    const std::vector<int> pert_genes = pick.sample_without_replacement(cfg.p, cfg.n_perturbations);

    const Eigen::MatrixXd obs = sample_sem(dag, cfg.n_obs, std::nullopt, derive_seed(cfg.seed, {0x53}));
    const Eigen::RowVectorXd obs_mean = obs.colwise().mean();

    PerturbMatrix m;
    m.genes.reserve(static_cast<std::size_t>(cfg.p));
    char name[32];
    for (int g = 0; g < cfg.p; ++g) {
        std::snprintf(name, sizeof(name), "g%04d", g);
        m.genes.emplace_back(name);
    }
    m.lfc.resize(cfg.n_perturbations, cfg.p);
    std::vector<int> counts;
    for (int j = 0; j < cfg.n_perturbations; ++j) {
        const int g = pert_genes[static_cast<std::size_t>(j)];
        m.perturbations.push_back(m.genes[static_cast<std::size_t>(g)]);
        const int n_a = j % 2 == 0 ? cfg.n_small : cfg.n_big;
        counts.push_back(n_a);
        const Eigen::MatrixXd xa =
            sample_sem(dag, n_a, g, derive_seed(cfg.seed, {0x54, static_cast<std::uint64_t>(j)}));
        m.lfc.row(j) = xa.colwise().mean() - obs_mean;
    }
    m.cell_counts = counts;
    return m;
}

}  // namespace covcal
