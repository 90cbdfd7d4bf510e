#include "delaysa/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "delaysa/errors.hpp"

namespace delaysa {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string log_plot_svg(const std::vector<PlotSeries>& series, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel) {
    const double W = 820, H = 520, left = 80, right = 170, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, std::log10(s.y[i]));
            ymax = std::max(ymax, std::log10(s.y[i]));
        }
    if (!std::isfinite(xmin)) {
        xmin = 0;
        xmax = 1;
        ymin = -1;
        ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    ymin = std::floor(ymin);
    ymax = std::ceil(ymax);
    if (ymax == ymin) ymax = ymin + 1;

    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double ly) { return top + (ymax - ly) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";

    const int ystep = std::max(1, static_cast<int>(std::ceil((ymax - ymin) / 10.0)));
    for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); e += ystep) {
        const double y = py(e);
        o << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + pw) << "\" y2=\""
          << num(y) << "\" stroke=\"#e0e0e0\"/>\n";
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << e
          << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0;
        const double x = px(xv);
        char lab[32];
        std::snprintf(lab, sizeof lab, "%g", xv);
        o << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(x) << "\" y=\"" << num(top + ph + 20) << "\" text-anchor=\"middle\">" << lab
          << "</text>\n";
    }
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 15) << "\" text-anchor=\"middle\">"
      << escape(xlabel) << "</text>\n";
    o << "<text transform=\"translate(20," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i])) continue;
            o << num(px(s.x[i])) << ',' << num(py(std::log10(s.y[i]))) << ' ';
        }
        o << "\"/>\n";
        const double ly = top + 20 + 20.0 * k;
        o << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 36)
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(left + pw + 42) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_log_plot(const std::string& path, const std::vector<PlotSeries>& series, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << log_plot_svg(series, title, xlabel, ylabel);
}

}  // namespace delaysa
