#include "covcal/discovery.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace covcal {

ZMatrix ZMatrix::from_descendants(const DescendantSets& d, const std::vector<int>& interventions) {
    ZMatrix out;
    out.interventions = interventions;
    out.p = d.p;
    out.z.assign(interventions.size() * static_cast<std::size_t>(d.p), 0);
    for (std::size_t r = 0; r < interventions.size(); ++r) {
        const int a = interventions[r];
        out.row_of_[a] = r;
        for (int i : d.desc[static_cast<std::size_t>(a)]) {
            out.z[r * static_cast<std::size_t>(d.p) + static_cast<std::size_t>(i)] = 1;
        }
    }
    return out;
}

ZMatrix ZMatrix::from_sets(const std::map<int, std::vector<int>>& sets, int p) {
    ZMatrix out;
    out.p = p;
    out.z.assign(sets.size() * static_cast<std::size_t>(p), 0);
    std::size_t r = 0;
    for (const auto& [a, genes] : sets) {
        out.interventions.push_back(a);
        out.row_of_[a] = r;
        for (int i : genes) {
            if (i < 0 || i >= p) throw std::invalid_argument("ZMatrix::from_sets: gene out of range");
            out.z[r * static_cast<std::size_t>(p) + static_cast<std::size_t>(i)] = 1;
        }
        ++r;
    }
    return out;
}

std::uint8_t ZMatrix::at(int a, int i) const {
    auto it = row_of_.find(a);
    if (it == row_of_.end()) throw std::invalid_argument("ZMatrix::at: unknown intervention row");
    if (i < 0 || i >= p) throw std::invalid_argument("ZMatrix::at: gene out of range");
    return z[it->second * static_cast<std::size_t>(p) + static_cast<std::size_t>(i)];
}

std::map<int, std::vector<int>> upstream_sets(const AffectedSets& s) {
    std::map<int, std::vector<int>> up;
    for (const auto& [a, _] : s.sets) up[a] = {};
    for (const auto& [b, genes] : s.sets) {
        for (int g : genes) {
            auto it = up.find(g);
            if (it != up.end() && g != b) it->second.push_back(b);
        }
    }
    for (auto& [_, v] : up) std::sort(v.begin(), v.end());
    return up;
}

std::map<int, std::vector<int>> intersect_descendants(const AffectedSets& s) {
    const auto up = upstream_sets(s);
    std::map<int, std::vector<int>> out;
    for (const auto& [a, sa] : s.sets) {
        std::vector<int> cand = sa;  // sorted
        for (int b : up.at(a)) {
            const std::vector<int>& sb = s.sets.at(b);
            std::vector<int> tmp;
            std::set_intersection(cand.begin(), cand.end(), sb.begin(), sb.end(),
                                  std::back_inserter(tmp));
            cand.swap(tmp);
            if (cand.empty()) break;
        }
        out[a] = std::move(cand);
    }
    return out;
}

ClassificationMetrics classification_metrics(const ZMatrix& z_hat, const ZMatrix& z_true,
                                             int target, const std::vector<int>& pool) {
    if (pool.empty()) throw std::invalid_argument("classification_metrics: empty pool");
    long n_affected = 0, n_unaffected = 0;
    long fp = 0;  // affected declared unaffected
    long fn = 0;  // unaffected declared affected
    for (int a : pool) {
        if (!z_true.applicable(a, target)) continue;
        const bool truly_affected = z_true.at(a, target) != 0;
        const bool declared_affected = z_hat.at(a, target) != 0;
        if (truly_affected) {
            ++n_affected;
            if (!declared_affected) ++fp;
        } else {
            ++n_unaffected;
            if (declared_affected) ++fn;
        }
    }
    ClassificationMetrics m;
    const long total = n_affected + n_unaffected;
    m.pi0 = total > 0 ? static_cast<double>(n_unaffected) / static_cast<double>(total) : 0.0;
    if (n_affected > 0) m.fpr = static_cast<double>(fp) / static_cast<double>(n_affected);
    if (n_unaffected > 0) m.fnr = static_cast<double>(fn) / static_cast<double>(n_unaffected);
    const double fpr = m.fpr.value_or(0.0);
    const double fnr = m.fnr.value_or(0.0);
    const double num = (1.0 - m.pi0) * fpr;
    const double den = m.pi0 * (1.0 - fnr) + num;
    m.delta_plugin = den > 0.0 ? num / den : 0.0;
    return m;
}

CalibrationSelection select_calibration(const ZMatrix& z_hat, int target, int a_star,
                                        const std::vector<int>& pool, const ZMatrix* z_true) {
    CalibrationSelection sel;
    for (int a : pool) {
        if (a == a_star) throw std::invalid_argument("select_calibration: a_star must not be in the pool");
        if (z_hat.at(a, target) == 0) sel.selected.push_back(a);
    }
    sel.n = static_cast<long>(sel.selected.size());
    if (z_true != nullptr) {
        for (int a : sel.selected) {
            if (z_true->at(a, target) == 0) ++sel.m;
        }
        sel.delta = sel.n > 0 ? static_cast<double>(sel.n - sel.m) / static_cast<double>(sel.n) : 0.0;
    } else {
        sel.m = sel.n;
        sel.delta = 0.0;
    }
    return sel;
}

void save_zmatrix_csv(const ZMatrix& z, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_zmatrix_csv: cannot open " + path);
    out << "intervention,gene,zhat\n";
    for (std::size_t r = 0; r < z.interventions.size(); ++r) {
        for (int i = 0; i < z.p; ++i) {
            out << z.interventions[r] << ',' << i << ','
                << static_cast<int>(z.z[r * static_cast<std::size_t>(z.p) + static_cast<std::size_t>(i)])
                << '\n';
        }
    }
}

}  // namespace covcal
