#include "covcal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace covcal {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
    if (!(hi > lo)) hi = lo + 1.0;
    const double raw = (hi - lo) / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> ticks;
    const double start = std::ceil(lo / step) * step;
    for (double t = start; t <= hi + 1e-12; t += step) ticks.push_back(t);
    return ticks;
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::vector<SvgSeries>& series,
                          const SvgChartOptions& options) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_line_chart_svg: cannot open " + path);

    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                x_lo = x_hi = x;
                y_lo = y_hi = y;
                first = false;
            }
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
        }
    }
    if (options.dashed_y) {
        y_lo = std::min(y_lo, *options.dashed_y);
        y_hi = std::max(y_hi, *options.dashed_y);
    }
    const double x_pad = (x_hi - x_lo) * 0.05 + 1e-12;
    const double y_pad = (y_hi - y_lo) * 0.08 + 1e-12;
    x_lo -= x_pad;
    x_hi += x_pad;
    y_lo -= y_pad;
    y_hi += y_pad;

    const int w = options.width, h = options.height;
    const double ml = 64, mr = 150, mt = 36, mb = 46;  // margins; legend on the right
    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - y_lo) / (y_hi - y_lo) * (h - mt - mb); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
           "font-family=\"sans-serif\">"
        << xml_escape(options.title) << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
        << h - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
        << "\" stroke=\"black\"/>\n";
    for (double t : nice_ticks(x_lo + x_pad, x_hi - x_pad, 6)) {
        out << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << h - mb << "\" x2=\"" << fmt(px(t))
            << "\" y2=\"" << h - mb + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(px(t)) << "\" y=\"" << h - mb + 18
            << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : nice_ticks(y_lo + y_pad, y_hi - y_pad, 6)) {
        out << "<line x1=\"" << ml - 4 << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << ml << "\" y2=\""
            << fmt(py(t)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(py(t) + 4)
            << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(t)
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + (w - mr)) / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
        << xml_escape(options.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + (h - mb)) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << (mt + (h - mb)) / 2 << ")\">" << xml_escape(options.y_label) << "</text>\n";

    if (options.dashed_y) {
        out << "<line x1=\"" << ml << "\" y1=\"" << fmt(py(*options.dashed_y)) << "\" x2=\""
            << w - mr << "\" y2=\"" << fmt(py(*options.dashed_y))
            << "\" stroke=\"#555555\" stroke-dasharray=\"6,4\"/>\n";
    }

    int legend_row = 0;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : s.points) out << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
        out << "\"/>\n";
        for (const auto& [x, y] : s.points) {
            out << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y)) << "\" r=\"3\" fill=\""
                << s.color << "\"/>\n";
        }
        const double ly = mt + 14 + 18 * legend_row;
        out << "<line x1=\"" << w - mr + 10 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << w - mr + 34
            << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << w - mr + 40 << "\" y=\"" << fmt(ly)
            << "\" font-size=\"12\" font-family=\"sans-serif\">" << xml_escape(s.label)
            << "</text>\n";
        ++legend_row;
    }
    out << "</svg>\n";
}

}  // namespace covcal
