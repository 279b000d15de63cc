#include "covcal/affected.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "covcal/stats.hpp"

namespace covcal {

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, int j) {
    std::vector<double> v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<std::size_t>(r)] = m(r, j);
    return v;
}

void center_abs(std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x = std::fabs(x - mean);
}

}  // namespace

bool AffectedSets::contains(int a, int i) const {
    auto it = sets.find(a);
    if (it == sets.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), i);
}

AffectedSets compute_affected_sets(const InterventionalDataset& data, double q, DegScore score) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("compute_affected_sets: q must be in (0,1)");
    const int p = data.p();
    AffectedSets out;
    out.q = q;
    std::vector<std::vector<double>> obs_cols(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) {
        obs_cols[static_cast<std::size_t>(i)] = column(data.obs, i);
        if (score == DegScore::AbsT) center_abs(obs_cols[static_cast<std::size_t>(i)]);
    }
    for (int a : data.intervened) {
        const Eigen::MatrixXd& m = data.per_intervention.at(a);
        if (m.rows() < 2 || data.obs.rows() < 2) {
            throw std::invalid_argument("compute_affected_sets: need at least 2 samples per arm");
        }
        std::vector<double> pvals(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i) {
            std::vector<double> xi = column(m, i);
            if (score == DegScore::AbsT) center_abs(xi);
            pvals[static_cast<std::size_t>(i)] =
                welch_t_test(xi, obs_cols[static_cast<std::size_t>(i)]).p_value;
        }
        const std::vector<char> rej = bh_reject(pvals, q);
        std::vector<int> s;
        for (int i = 0; i < p; ++i) {
            if (rej[static_cast<std::size_t>(i)] && i != a) s.push_back(i);
        }
        out.sets[a] = std::move(s);
    }
    return out;
}

void save_affected_csv(const AffectedSets& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_affected_csv: cannot open " + path);
    out << "intervention,gene\n";
    for (const auto& [a, genes] : s.sets) {
        for (int g : genes) out << a << ',' << g << '\n';
    }
}

}  // namespace covcal
