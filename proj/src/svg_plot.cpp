// SPDX-License-Identifier: Apache-2.0
#include "risgnn/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "risgnn/errors.hpp"

namespace risgnn {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Round-ish tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 5) {
    if (!(hi > lo)) return {lo};
    const double span = hi - lo;
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= mult * mag) {
            step = mult * mag;
            break;
        }
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
        out.push_back(t);
    return out;
}

}  // namespace

void write_svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series,
                    const std::string& path) {
    if (series.empty()) throw std::invalid_argument("write_svg_plot: no series");
    const double width = 720, height = 480;
    const double ml = 70, mr = 160, mt = 40, mb = 55;
    const double pw = width - ml - mr, ph = height - mt - mb;

    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = std::numeric_limits<double>::infinity(), y_hi = -y_lo;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || (!s.yerr.empty() && s.yerr.size() != s.y.size()))
            throw std::invalid_argument("write_svg_plot: series length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_lo = std::min(x_lo, tx(s.x[i]));
            x_hi = std::max(x_hi, tx(s.x[i]));
            const double e = s.yerr.empty() ? 0.0 : s.yerr[i];
            y_lo = std::min(y_lo, s.y[i] - e);
            y_hi = std::max(y_hi, s.y[i] + e);
        }
    }
    if (!(x_hi > x_lo)) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (!(y_hi > y_lo)) {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    const double ypad = 0.06 * (y_hi - y_lo);
    y_lo -= ypad;
    y_hi += ypad;

    auto px = [&](double x) { return ml + (tx(x) - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("write_svg_plot: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << (ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << spec.title << "</text>\n";

    // Axes and grid.
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : ticks(y_lo, y_hi)) {
        const double y = py(t);
        out << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << (ml + pw) << "\" y2=\"" << y
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << (ml - 8) << "\" y=\"" << (y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    {
        std::vector<double> xt;
        if (spec.log_x) {
            for (double t = std::floor(x_lo); t <= std::ceil(x_hi) + 1e-9; t += 1.0)
                if (t >= x_lo - 1e-9 && t <= x_hi + 1e-9) xt.push_back(t);
            if (xt.size() < 2) xt = ticks(x_lo, x_hi);
        } else {
            xt = ticks(x_lo, x_hi);
        }
        for (double t : xt) {
            const double x = ml + (t - x_lo) / (x_hi - x_lo) * pw;
            out << "<line x1=\"" << x << "\" y1=\"" << mt << "\" x2=\"" << x << "\" y2=\""
                << (mt + ph) << "\" stroke=\"#eee\"/>\n";
            const double shown = spec.log_x ? std::pow(10.0, t) : t;
            out << "<text x=\"" << x << "\" y=\"" << (mt + ph + 18)
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt(shown) << "</text>\n";
        }
    }
    out << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << (height - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << spec.x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + ph / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (mt + ph / 2) << ")\">" << spec.y_label << "</text>\n";

    // Series.
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        const auto& sr = series[s];
        if (!sr.yerr.empty())
            for (std::size_t i = 0; i < sr.x.size(); ++i) {
                const double x = px(sr.x[i]);
                out << "<line x1=\"" << x << "\" y1=\"" << py(sr.y[i] - sr.yerr[i]) << "\" x2=\""
                    << x << "\" y2=\"" << py(sr.y[i] + sr.yerr[i]) << "\" stroke=\"" << color
                    << "\" stroke-width=\"1\" opacity=\"0.6\"/>\n";
            }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < sr.x.size(); ++i)
            out << px(sr.x[i]) << "," << py(sr.y[i]) << " ";
        out << "\"/>\n";
        for (std::size_t i = 0; i < sr.x.size(); ++i)
            out << "<circle cx=\"" << px(sr.x[i]) << "\" cy=\"" << py(sr.y[i])
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = mt + 16 + 18 * static_cast<double>(s);
        out << "<line x1=\"" << (ml + pw + 12) << "\" y1=\"" << ly << "\" x2=\"" << (ml + pw + 34)
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << (ml + pw + 40) << "\" y=\"" << (ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << sr.label << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw DataError("write_svg_plot: write failed on " + path);
}

}  // namespace risgnn
