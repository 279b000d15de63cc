#include "covcal/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace covcal {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "p",          "d_avg",          "w_lo",          "w_hi",
    "n_obs",      "n_per_intervention", "n_interventions", "alpha",
    "q_fdr",      "split_fractions", "seeds",         "sigma_unaffected",
    "sigma_affected", "delta_inject", "methods",      "deg_score",
    "delta_hat_policy", "delta_hat_fixed", "top_frac", "split_seed",
    "bootstrap_replicates", "bootstrap_seed",
};

DeltaHatPolicy parse_policy(const std::string& s) {
    if (s == "oracle") return DeltaHatPolicy::Oracle;
    if (s == "self_consistency") return DeltaHatPolicy::SelfConsistency;
    if (s == "fixed") return DeltaHatPolicy::Fixed;
    throw std::invalid_argument("config: unknown delta_hat_policy '" + s + "'");
}

std::string policy_name(DeltaHatPolicy p) {
    switch (p) {
        case DeltaHatPolicy::Oracle: return "oracle";
        case DeltaHatPolicy::SelfConsistency: return "self_consistency";
        case DeltaHatPolicy::Fixed: return "fixed";
    }
    return "oracle";
}

}  // namespace

void ExperimentConfig::validate() const {
    std::ostringstream err;
    if (p < 2) err << "p must be >= 2; ";
    if (!(d_avg >= 0.0 && d_avg <= static_cast<double>(p - 1))) err << "d_avg must be in [0, p-1]; ";
    if (!(0.0 < w_lo && w_lo < w_hi)) err << "need 0 < w_lo < w_hi; ";
    if (n_obs < 2) err << "n_obs must be >= 2; ";
    if (n_per_intervention < 2) err << "n_per_intervention must be >= 2; ";
    if (n_interventions < 3 || n_interventions > p) err << "n_interventions must be in [3, p]; ";
    if (!(alpha > 0.0 && alpha < 1.0)) err << "alpha must be in (0,1); ";
    if (!(q_fdr > 0.0 && q_fdr < 1.0)) err << "q_fdr must be in (0,1); ";
    const double fsum = split_fractions[0] + split_fractions[1] + split_fractions[2];
    if (std::fabs(fsum - 1.0) > 1e-9) err << "split_fractions must sum to 1; ";
    for (double f : split_fractions) {
        if (f < 0.0) err << "split fractions must be nonnegative; ";
    }
    if (seeds.empty()) err << "seeds must be nonempty; ";
    if (!(sigma_unaffected > 0.0) || !(sigma_affected > 0.0)) err << "score sigmas must be positive; ";
    for (double d : delta_inject) {
        if (!(d >= 0.0 && d < 1.0)) err << "delta_inject values must be in [0,1); ";
    }
    if (methods.empty()) err << "methods must be nonempty; ";
    for (const auto& m : methods) {
        if (m != "oracle" && m != "estimated" && m != "pooled" && m != "corrected") {
            err << "unknown method '" << m << "'; ";
        }
    }
    if (!(delta_hat_fixed >= 0.0 && delta_hat_fixed <= 1.0)) err << "delta_hat_fixed must be in [0,1]; ";
    if (!(top_frac > 0.0 && top_frac <= 1.0)) err << "top_frac must be in (0,1]; ";
    if (bootstrap_replicates < 0) err << "bootstrap_replicates must be >= 0; ";
    const std::string msg = err.str();
    if (!msg.empty()) throw std::invalid_argument("config: " + msg);
}

ExperimentConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top-level JSON must be an object");
    for (const auto& [key, _] : j.items()) {
        if (kKnownKeys.find(key) == kKnownKeys.end()) {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("p", c.p);
    get("d_avg", c.d_avg);
    get("w_lo", c.w_lo);
    get("w_hi", c.w_hi);
    get("n_obs", c.n_obs);
    get("n_per_intervention", c.n_per_intervention);
    get("n_interventions", c.n_interventions);
    get("alpha", c.alpha);
    get("q_fdr", c.q_fdr);
    if (j.contains("split_fractions")) {
        const auto v = j.at("split_fractions").get<std::vector<double>>();
        if (v.size() != 3) throw std::invalid_argument("config: split_fractions must have 3 entries");
        c.split_fractions = {v[0], v[1], v[2]};
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    get("sigma_unaffected", c.sigma_unaffected);
    get("sigma_affected", c.sigma_affected);
    if (j.contains("delta_inject")) c.delta_inject = j.at("delta_inject").get<std::vector<double>>();
    if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("deg_score")) {
        const auto s = j.at("deg_score").get<std::string>();
        if (s == "mean_t") {
            c.deg_score = DegScore::MeanT;
        } else if (s == "abs_t") {
            c.deg_score = DegScore::AbsT;
        } else {
            throw std::invalid_argument("config: unknown deg_score '" + s + "'");
        }
    }
    if (j.contains("delta_hat_policy")) c.delta_hat_policy = parse_policy(j.at("delta_hat_policy").get<std::string>());
    get("delta_hat_fixed", c.delta_hat_fixed);
    get("top_frac", c.top_frac);
    get("split_seed", c.split_seed);
    get("bootstrap_replicates", c.bootstrap_replicates);
    get("bootstrap_seed", c.bootstrap_seed);
    c.validate();
    return c;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg, int indent) {
    json j;
    j["p"] = cfg.p;
    j["d_avg"] = cfg.d_avg;
    j["w_lo"] = cfg.w_lo;
    j["w_hi"] = cfg.w_hi;
    j["n_obs"] = cfg.n_obs;
    j["n_per_intervention"] = cfg.n_per_intervention;
    j["n_interventions"] = cfg.n_interventions;
    j["alpha"] = cfg.alpha;
    j["q_fdr"] = cfg.q_fdr;
    j["split_fractions"] = {cfg.split_fractions[0], cfg.split_fractions[1], cfg.split_fractions[2]};
    j["seeds"] = cfg.seeds;
    j["sigma_unaffected"] = cfg.sigma_unaffected;
    j["sigma_affected"] = cfg.sigma_affected;
    j["delta_inject"] = cfg.delta_inject;
    j["methods"] = cfg.methods;
    j["deg_score"] = cfg.deg_score == DegScore::AbsT ? "abs_t" : "mean_t";
    j["delta_hat_policy"] = policy_name(cfg.delta_hat_policy);
    j["delta_hat_fixed"] = cfg.delta_hat_fixed;
    j["top_frac"] = cfg.top_frac;
    j["split_seed"] = cfg.split_seed;
    j["bootstrap_replicates"] = cfg.bootstrap_replicates;
    j["bootstrap_seed"] = cfg.bootstrap_seed;
    return j.dump(indent);
}

}  // namespace covcal
