#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hyperstab/io.hpp"

namespace hyperstab {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    const double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
    for (const auto& s : spec.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (spec.log_y && s.y[i] <= 0) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    for (double g : spec.guides) {
        xmin = std::min(xmin, g);
        xmax = std::max(xmax, g);
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
    if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
    auto py = [&](double y) { return H - bottom - (y - ymin) / (ymax - ymin) * (H - top - bottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(spec.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right
      << "\" height=\"" << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - bottom + 16 << "\" text-anchor=\"middle\">"
          << format_number(std::round(xv * 1000) / 1000) << "</text>\n";
        const double label = spec.log_y ? std::pow(10.0, yv) : yv;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", label);
        o << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << buf
          << "</text>\n";
    }
    o << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (top + H - bottom) / 2 << ")\">" << escape(spec.y_label) << "</text>\n";
    for (double g : spec.guides)
        o << "<line x1=\"" << px(g) << "\" x2=\"" << px(g) << "\" y1=\"" << top << "\" y2=\""
          << H - bottom << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = kPalette[si % 6];
        // a non-finite y starts a new segment
        bool open = false;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0)) {
                if (open) o << "\"/>\n";
                open = false;
                continue;
            }
            if (!open) o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            open = true;
            o << px(s.x[i]) << ',' << py(ty(s.y[i])) << ' ';
        }
        if (open) o << "\"/>\n";
        o << "<text x=\"" << W - right - 8 << "\" y=\"" << top + 16 + 16 * si
          << "\" text-anchor=\"end\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace hyperstab
