#pragma once

// Minimal static line chart: axes with ticks, one polyline per series, legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cimsim/format.hpp"

namespace cimsim {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    bool log2_x = false;  // crossbar sizes read better on a doubling axis
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
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

inline std::string fixed(double v, int digits = 2) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Roughly five round tick values covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step)
        ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return ticks;
}

inline constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace detail

inline std::string render_svg(const LineChart& chart) {
    constexpr double width = 720, height = 440;
    constexpr double left = 70, right = 200, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;

    auto xform = [&](double x) { return chart.log2_x ? std::log2(x) : x; };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : chart.series)
        for (const auto& [x, y] : s.points) {
            x0 = std::min(x0, xform(x));
            x1 = std::max(x1, xform(x));
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) {
        const double pad = std::max(std::abs(y0) * 0.05, 0.05);
        y0 -= pad, y1 += pad;
    } else {
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad, y1 += pad;
    }
    auto px = [&](double x) { return left + (xform(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    auto f = [](double v) { return detail::fixed(v, 1); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << f(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::xml_escape(chart.title) << "</text>\n";

    for (double t : detail::nice_ticks(y0, y1)) {
        o << "<line x1=\"" << f(left) << "\" y1=\"" << f(py(t)) << "\" x2=\"" << f(left + pw) << "\" y2=\""
          << f(py(t)) << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << f(left - 6) << "\" y=\"" << f(py(t) + 4) << "\" text-anchor=\"end\">" << fmt_num(t)
          << "</text>\n";
    }
    std::vector<double> xt;
    if (chart.log2_x) {
        for (double e = std::ceil(x0); e <= x1 + 1e-9; e += 1.0) xt.push_back(std::exp2(e));
    } else {
        xt = detail::nice_ticks(x0, x1);
    }
    for (double t : xt) {
        o << "<line x1=\"" << f(px(t)) << "\" y1=\"" << f(top + ph) << "\" x2=\"" << f(px(t)) << "\" y2=\""
          << f(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << f(px(t)) << "\" y=\"" << f(top + ph + 19) << "\" text-anchor=\"middle\">"
          << fmt_num(t) << "</text>\n";
    }
    o << "<rect x=\"" << f(left) << "\" y=\"" << f(top) << "\" width=\"" << f(pw) << "\" height=\"" << f(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << f(left + pw / 2) << "\" y=\"" << f(height - 12) << "\" text-anchor=\"middle\">"
      << detail::xml_escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << f(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::xml_escape(chart.y_label) << "</text>\n";

    for (std::size_t i = 0; i < chart.series.size(); ++i) {
        const auto& s = chart.series[i];
        const char* colour = detail::palette[i % std::size(detail::palette)];
        const char* dash = i >= std::size(detail::palette) ? " stroke-dasharray=\"5,3\"" : "";
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\"" << dash << " points=\"";
        for (std::size_t k = 0; k < s.points.size(); ++k)
            o << (k ? " " : "") << f(px(s.points[k].first)) << ',' << f(py(s.points[k].second));
        o << "\"/>\n";
        for (const auto& [x, y] : s.points)
            o << "<circle cx=\"" << f(px(x)) << "\" cy=\"" << f(py(y)) << "\" r=\"2.5\" fill=\"" << colour
              << "\"/>\n";
        const double ly = top + 10 + 18.0 * static_cast<double>(i);
        o << "<line x1=\"" << f(left + pw + 15) << "\" y1=\"" << f(ly) << "\" x2=\"" << f(left + pw + 40)
          << "\" y2=\"" << f(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"" << dash << "/>\n";
        o << "<text x=\"" << f(left + pw + 46) << "\" y=\"" << f(ly + 4) << "\">" << detail::xml_escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// Builds series from table rows: x and y come from the named columns and
/// rows with equal values in `key_columns` form one series. Rows failing
/// `keep` are skipped. Series and points keep table order.
template <typename Pred>
LineChart chart_from_table(const Table& t, const std::string& x_col, const std::string& y_col,
                           const std::vector<std::string>& key_columns, Pred keep) {
    const std::size_t xi = t.column(x_col), yi = t.column(y_col);
    std::vector<std::size_t> ki;
    for (const auto& k : key_columns) ki.push_back(t.column(k));
    LineChart chart;
    for (const auto& row : t.rows) {
        if (!keep(row)) continue;
        std::string name;
        for (std::size_t i = 0; i < ki.size(); ++i) name += (i ? " " : "") + row[ki[i]];
        auto it = std::find_if(chart.series.begin(), chart.series.end(),
                               [&](const Series& s) { return s.name == name; });
        if (it == chart.series.end()) {
            chart.series.push_back({name, {}});
            it = chart.series.end() - 1;
        }
        it->points.emplace_back(std::stod(row[xi]), std::stod(row[yi]));
    }
    return chart;
}

}  // namespace cimsim
