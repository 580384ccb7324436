#include "wug/svg_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace wug {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
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

} // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::vector<bool>& significant) {
    const int bar_w = 28, gap = 10, margin = 60, plot_h = 240;
    int width = std::max<int>(320, margin * 2 + static_cast<int>(values.size()) * (bar_w + gap));
    int height = plot_h + 120;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
           "\">\n";
    svg += "<style>.bar{fill:#888}.sig{fill:#2b6cb0}.axis{stroke:#333;stroke-width:1}"
           "text{font-family:sans-serif;font-size:11px}</style>\n";
    svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" +
           escape_xml(title) + "</text>\n";

    if (values.empty()) {
        svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height / 2) +
               "\" text-anchor=\"middle\">no languages to display</text>\n</svg>\n";
        return svg;
    }

    double vmin = *std::min_element(values.begin(), values.end());
    double vmax = *std::max_element(values.begin(), values.end());
    vmin = std::min(vmin, 0.0);
    vmax = std::max(vmax, 0.0);
    if (vmax == vmin) vmax = vmin + 1.0;
    double scale = plot_h / (vmax - vmin);
    double zero_y = 30 + vmax * scale;

    svg += "<line class=\"axis\" x1=\"" + std::to_string(margin - 10) + "\" y1=\"" + fmt(zero_y) + "\" x2=\"" +
           std::to_string(width - margin + 10) + "\" y2=\"" + fmt(zero_y) + "\"/>\n";

    for (std::size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        double x = margin + static_cast<double>(i) * (bar_w + gap);
        double y = v >= 0 ? 30 + (vmax - v) * scale : zero_y;
        double h = std::fabs(v) * scale;
        bool sig = i < significant.size() && significant[i];
        svg += "<rect class=\"" + std::string(sig ? "bar sig" : "bar") + "\" x=\"" + fmt(x) + "\" y=\"" + fmt(y) +
               "\" width=\"" + std::to_string(bar_w) + "\" height=\"" + fmt(h) + "\"><title>" +
               escape_xml(labels[i]) + ": " + fmt(v) + "</title></rect>\n";
        svg += "<text x=\"" + fmt(x + bar_w / 2.0) + "\" y=\"" + std::to_string(plot_h + 50) +
               "\" text-anchor=\"end\" transform=\"rotate(-45 " + fmt(x + bar_w / 2.0) + " " +
               std::to_string(plot_h + 50) + ")\">" + escape_xml(labels[i]) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::pair<std::string, std::string>> render_figures(const AnalysisReport& report) {
    std::vector<std::string> labels;
    std::vector<double> avg_iota;
    std::vector<double> form_r, lexeme_r;
    std::vector<bool> none, form_sig, lexeme_sig;
    for (const auto& lang : report.languages) {
        if (!lang.included) continue;
        labels.push_back(lang.name);
        avg_iota.push_back(lang.avg_iota);
        form_r.push_back(lang.form_correlation ? lang.form_correlation->r : 0.0);
        form_sig.push_back(lang.form_correlation && lang.form_correlation->p < 0.05);
        lexeme_r.push_back(lang.lexeme_correlation ? lang.lexeme_correlation->r : 0.0);
        lexeme_sig.push_back(lang.lexeme_correlation && lang.lexeme_correlation->p < 0.05);
    }
    none.assign(labels.size(), false);
    return {
        {"fig_avg_iota.svg", svg_bar_chart("Average degree of irregularity per language", labels, avg_iota, none)},
        {"fig_corr_form.svg",
         svg_bar_chart("Irregularity/frequency correlation (form level)", labels, form_r, form_sig)},
        {"fig_corr_lexeme.svg",
         svg_bar_chart("Irregularity/frequency correlation (lexeme level)", labels, lexeme_r, lexeme_sig)},
    };
}

} // namespace wug
