#include "cfb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace cfb {

SvgLineChart::SvgLineChart(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgLineChart::add_series(std::string name, std::vector<std::optional<double>> values) {
    series_.push_back(Series{std::move(name), std::move(values)});
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string SvgLineChart::render() const {
    constexpr double W = 800, H = 480;
    constexpr double ml = 70, mr = 160, mt = 40, mb = 50;
    const double plot_w = W - ml - mr, plot_h = H - mt - mb;

    double ymin = 0.0, ymax = 1.0;
    std::size_t nmax = 0;
    bool any = false;
    for (const auto& s : series_) {
        nmax = std::max(nmax, s.values.size());
        for (const auto& v : s.values) {
            if (!v) continue;
            if (!any) {
                ymin = ymax = *v;
                any = true;
            } else {
                ymin = std::min(ymin, *v);
                ymax = std::max(ymax, *v);
            }
        }
    }
    if (!any) {
        ymin = 0.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-9) {
        ymax += 0.5;
        ymin -= 0.5;
    }
    const double xmax = nmax > 1 ? static_cast<double>(nmax - 1) : 1.0;

    auto X = [&](double i) { return ml + plot_w * (i / xmax); };
    auto Y = [&](double v) { return mt + plot_h * (1.0 - (v - ymin) / (ymax - ymin)); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
           "font-family=\"sans-serif\">"
        << escape(title_) << "</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
        << "\" stroke=\"#333\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y(ymax) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(ymax)
        << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << Y(ymin) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(ymin)
        << "</text>\n";
    out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
        << escape(x_label_) << "</text>\n";
    out << "<text x=\"18\" y=\"" << mt + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 18 "
        << mt + plot_h / 2 << ")\">" << escape(y_label_) << "</text>\n";

    for (std::size_t si = 0; si < series_.size(); ++si) {
        const auto& s = series_[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        // gaps split the polyline
        std::vector<std::string> segments;
        std::string current;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (s.values[i]) {
                current += (current.empty() ? "" : " ") + fmt(X(static_cast<double>(i))) + "," +
                           fmt(Y(*s.values[i]));
            } else if (!current.empty()) {
                segments.push_back(std::move(current));
                current.clear();
            }
        }
        if (!current.empty()) segments.push_back(std::move(current));
        for (const auto& seg : segments) {
            if (seg.find(' ') == std::string::npos) {
                const auto comma = seg.find(',');
                out << "<circle cx=\"" << seg.substr(0, comma) << "\" cy=\""
                    << seg.substr(comma + 1) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
            } else {
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.6\" points=\"" << seg << "\"/>\n";
            }
        }
        const double ly = mt + 16.0 * static_cast<double>(si);
        out << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 34
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - mr + 40 << "\" y=\"" << ly + 4
            << "\" font-size=\"11\" font-family=\"sans-serif\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace cfb
