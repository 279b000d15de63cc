#include "covcal/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace covcal {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& s, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw std::runtime_error("non-numeric cell '" + s + "' at row " + std::to_string(row) +
                                 ", column " + std::to_string(col));
    }
    return v;
}

}  // namespace

PerturbMatrix load_lfc_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_lfc_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_lfc_csv: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "gene") {
        throw std::runtime_error("load_lfc_csv: header must be 'gene,<pert...>'");
    }
    PerturbMatrix m;
    m.perturbations.assign(header.begin() + 1, header.end());
    const std::size_t n_pert = m.perturbations.size();
    std::vector<std::vector<double>> rows;
    std::set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n_pert + 1) {
            throw std::runtime_error("load_lfc_csv: row " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(n_pert + 1));
        }
        if (!seen.insert(cells[0]).second) {
            throw std::runtime_error("load_lfc_csv: duplicate gene name '" + cells[0] + "'");
        }
        m.genes.push_back(cells[0]);
        std::vector<double> vals(n_pert);
        for (std::size_t j = 0; j < n_pert; ++j) vals[j] = parse_cell(cells[j + 1], lineno, j + 2);
        rows.push_back(std::move(vals));
    }
    m.lfc.resize(static_cast<Eigen::Index>(n_pert), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t g = 0; g < rows.size(); ++g) {
        for (std::size_t a = 0; a < n_pert; ++a) {
            m.lfc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(g)) = rows[g][a];
        }
    }
    return m;
}

PerturbMatrix load_cells_csv(const std::string& path, const std::string& control_label,
                             int min_cells, double min_expr_frac) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_cells_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_cells_csv: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "cell_id" || header[1] != "perturbation") {
        throw std::runtime_error("load_cells_csv: header must be 'cell_id,perturbation,<gene...>'");
    }
    const std::size_t n_genes = header.size() - 2;
    std::map<std::string, std::vector<std::vector<double>>> groups;
    std::vector<long> nonzero(n_genes, 0);
    long n_cells = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("load_cells_csv: row " + std::to_string(lineno) +
                                     " has wrong cell count");
        }
        std::vector<double> expr(n_genes);
        for (std::size_t j = 0; j < n_genes; ++j) {
            expr[j] = parse_cell(cells[j + 2], lineno, j + 3);
            if (expr[j] != 0.0) ++nonzero[j];
        }
        ++n_cells;
        groups[cells[1]].push_back(std::move(expr));
    }
    auto control_it = groups.find(control_label);
    if (control_it == groups.end()) {
        throw std::runtime_error("load_cells_csv: control label '" + control_label + "' not found");
    }
    std::vector<std::size_t> kept_genes;
    for (std::size_t j = 0; j < n_genes; ++j) {
        if (n_cells > 0 &&
            static_cast<double>(nonzero[j]) >= min_expr_frac * static_cast<double>(n_cells)) {
            kept_genes.push_back(j);
        }
    }
    auto group_mean = [&](const std::vector<std::vector<double>>& rows, std::size_t j) {
        double s = 0.0;
        for (const auto& r : rows) s += r[j];
        return s / static_cast<double>(rows.size());
    };
    PerturbMatrix m;
    for (std::size_t j : kept_genes) m.genes.push_back(header[j + 2]);
    std::vector<int> counts;
    for (const auto& [label, rows] : groups) {
        if (label == control_label) continue;
        if (static_cast<int>(rows.size()) < min_cells) continue;
        m.perturbations.push_back(label);
        counts.push_back(static_cast<int>(rows.size()));
    }
    m.cell_counts = counts;
    m.lfc.resize(static_cast<Eigen::Index>(m.perturbations.size()),
                 static_cast<Eigen::Index>(kept_genes.size()));
    for (std::size_t a = 0; a < m.perturbations.size(); ++a) {
        const auto& rows = groups.at(m.perturbations[a]);
        for (std::size_t jj = 0; jj < kept_genes.size(); ++jj) {
            const std::size_t j = kept_genes[jj];
            m.lfc(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(jj)) =
                group_mean(rows, j) - group_mean(control_it->second, j);
        }
    }
    return m;
}

AffectedSets proxy_affected_sets(const PerturbMatrix& m, double top_frac) {
    if (!(top_frac > 0.0 && top_frac <= 1.0)) {
        throw std::invalid_argument("proxy_affected_sets: top_frac must be in (0,1]");
    }
    const int g = m.n_genes();
    const auto k = static_cast<std::size_t>(
        std::ceil(top_frac * static_cast<double>(g) - 1e-9));
    AffectedSets out;
    out.q = top_frac;
    std::vector<int> idx(static_cast<std::size_t>(g));
    for (int a = 0; a < m.n_perturbations(); ++a) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
            const double ai = std::fabs(m.lfc(a, i));
            const double aj = std::fabs(m.lfc(a, j));
            if (ai != aj) return ai > aj;
            return i < j;
        });
        std::vector<int> s(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(k, idx.size())));
        std::sort(s.begin(), s.end());
        out.sets[a] = std::move(s);
    }
    return out;
}

void save_lfc_csv(const PerturbMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_lfc_csv: cannot open " + path);
    out << "gene";
    for (const auto& p : m.perturbations) out << ',' << p;
    out << '\n';
    char buf[64];
    for (int g = 0; g < m.n_genes(); ++g) {
        out << m.genes[static_cast<std::size_t>(g)];
        for (int a = 0; a < m.n_perturbations(); ++a) {
            std::snprintf(buf, sizeof(buf), ",%.17g", m.lfc(a, g));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace covcal
