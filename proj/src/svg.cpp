#include "sonadv/svg.hpp"

#include <cmath>
#include <cstdio>

namespace sonadv::harness {

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Series {
    const char* label;
    const char* color;
};

constexpr Series kSeries[] = {
    {"clean", "#4878a8"},
    {"adversarial", "#c44e52"},
    {"defended", "#55a868"},
};

} // namespace

std::string render_accuracy_chart(const std::vector<ChartGroup>& groups) {
    const double width = 720.0;
    const double height = 360.0;
    const double left = 60.0, right = 20.0, top = 40.0, bottom = 60.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"360\" "
           "viewBox=\"0 0 720 360\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"720\" height=\"360\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
           "Detector accuracy before and after attack and defense</text>\n";

    // Axis and gridlines at 0, 0.25, 0.5, 0.75, 1.
    for (int i = 0; i <= 4; ++i) {
        const double frac = 0.25 * i;
        const double y = top + plot_h * (1.0 - frac);
        svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" +
               num(left + plot_w) + "\" y2=\"" + num(y) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + num(left - 8.0) + "\" y=\"" + num(y + 4.0) +
               "\" text-anchor=\"end\" font-size=\"11\">" + num(frac) + "</text>\n";
    }

    const std::size_t n = groups.size();
    for (std::size_t g = 0; g < n; ++g) {
        const ChartGroup& group = groups[g];
        const double cell = plot_w / static_cast<double>(n == 0 ? 1 : n);
        const double x0 = left + cell * static_cast<double>(g);
        const std::size_t bars = group.defended.has_value() ? 3 : 2;
        const double bar_w = cell * 0.8 / static_cast<double>(bars);
        const double pad = cell * 0.1;

        const double values[3] = {group.clean, group.adversarial,
                                  group.defended.value_or(0.0)};
        for (std::size_t b = 0; b < bars; ++b) {
            const double v = values[b];
            const double h = plot_h * v;
            const double x = x0 + pad + bar_w * static_cast<double>(b);
            const double y = top + plot_h - h;
            svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
                   num(bar_w - 4.0) + "\" height=\"" + num(h) + "\" fill=\"" +
                   kSeries[b].color + "\"/>\n";
            svg += "<text x=\"" + num(x + (bar_w - 4.0) / 2.0) + "\" y=\"" +
                   num(y - 4.0) + "\" text-anchor=\"middle\" font-size=\"10\">" +
                   pct(v) + "</text>\n";
        }
        svg += "<text x=\"" + num(x0 + cell / 2.0) + "\" y=\"" +
               num(top + plot_h + 18.0) + "\" text-anchor=\"middle\" font-size=\"12\">" +
               escape(group.label) + "</text>\n";
    }

    // Legend.
    double lx = left;
    const double ly = height - 16.0;
    for (const Series& s : kSeries) {
        svg += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly - 10.0) +
               "\" width=\"12\" height=\"12\" fill=\"" + s.color + "\"/>\n";
        svg += "<text x=\"" + num(lx + 18.0) + "\" y=\"" + num(ly) +
               "\" font-size=\"12\">" + s.label + "</text>\n";
        lx += 120.0;
    }

    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
           "\" y2=\"" + num(top + plot_h) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" +
           num(left + plot_w) + "\" y2=\"" + num(top + plot_h) +
           "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace sonadv::harness
