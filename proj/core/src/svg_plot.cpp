#include "absa/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "absa/error.hpp"

namespace absa {

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 64.0, kRight = 150.0, kTop = 40.0, kBottom = 48.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
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

std::string render_line_chart(const ChartSpec& spec) {
    if (spec.series.empty()) throw UsageError("cannot render a chart with no series");
    for (const auto& s : spec.series) {
        if (s.points.empty()) throw UsageError("series '" + s.label + "' has no points");
    }

    double x_min = spec.series[0].points[0].first, x_max = x_min;
    double y_min = spec.series[0].points[0].second, y_max = y_min;
    for (const auto& s : spec.series) {
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max == x_min) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max == y_min) {
        y_min -= 0.05;
        y_max += 0.05;
    }
    double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    double plot_w = kWidth - kLeft - kRight;
    double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double y) { return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
        << escape(spec.title) << "</text>\n";

    // Axes.
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
        << "\" y2=\"" << kTop + plot_h << "\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"#333\"/>\n";

    for (int t = 0; t <= 4; ++t) {
        double fy = y_min + (y_max - y_min) * t / 4.0;
        double py = sy(fy);
        svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fmt2(py) << "\" x2=\"" << kLeft
            << "\" y2=\"" << fmt2(py) << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt2(py + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt4(fy)
            << "</text>\n";
        double fx = x_min + (x_max - x_min) * t / 4.0;
        double px = sx(fx);
        svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << fmt2(px)
            << "\" y2=\"" << kTop + plot_h + 4 << "\" stroke=\"#333\"/>\n";
        svg << "<text x=\"" << fmt2(px) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt2(fx)
            << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(spec.x_label) << "</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2
        << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t s = 0; s < spec.series.size(); ++s) {
        const Series& series = spec.series[s];
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];

        std::ostringstream pts, data;
        for (std::size_t i = 0; i < series.points.size(); ++i) {
            if (i) {
                pts << ' ';
                data << ',';
            }
            pts << fmt2(sx(series.points[i].first)) << ',' << fmt2(sy(series.points[i].second));
            data << format_compact(series.points[i].first) << ':'
                 << format_exact(series.points[i].second);
        }
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
            << pts.str() << "\" data-label=\"" << escape(series.label) << "\" data-points=\""
            << data.str() << "\"/>\n";
        for (const auto& [x, y] : series.points) {
            svg << "<circle cx=\"" << fmt2(sx(x)) << "\" cy=\"" << fmt2(sy(y))
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        double ly = kTop + 14.0 * static_cast<double>(s);
        svg << "<line x1=\"" << kLeft + plot_w + 10 << "\" y1=\"" << fmt2(ly - 4) << "\" x2=\""
            << kLeft + plot_w + 28 << "\" y2=\"" << fmt2(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + plot_w + 32 << "\" y=\"" << fmt2(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series.label)
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::pair<std::string, std::string>> charts_from_rows(const std::vector<CsvRow>& rows) {
    if (rows.empty()) throw UsageError("no rows to plot");

    std::set<double> epsilons;
    for (const auto& row : rows) epsilons.insert(row.epsilon);
    const bool by_epsilon = epsilons.size() > 1;

    // (dataset, split, metric) -> series key -> epoch -> values over seeds.
    std::map<std::tuple<std::string, std::string, std::string>,
             std::map<double, std::map<std::size_t, std::vector<double>>>>
        charts;
    for (const auto& row : rows) {
        if (row.split == "train" || row.split == "test_best") continue;
        double key = by_epsilon ? row.epsilon : row.dropout;
        charts[{row.dataset, row.split, row.metric}][key][row.epoch].push_back(row.value);
    }
    if (charts.empty()) throw UsageError("no metric rows to plot");

    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, series_map] : charts) {
        const auto& [dataset, split, metric] = key;
        ChartSpec spec;
        spec.title = dataset + " " + split + " " + metric + " vs training epochs";
        spec.x_label = "training epochs";
        spec.y_label = metric;
        for (const auto& [series_key, by_epoch] : series_map) {
            Series s;
            s.label = (by_epsilon ? (series_key == 0.0 ? "baseline" : "eps=" + format_compact(series_key))
                                  : "dropout=" + format_compact(series_key));
            for (const auto& [epoch, values] : by_epoch) {
                double sum = 0.0;
                for (double v : values) sum += v;
                s.points.emplace_back(static_cast<double>(epoch),
                                      sum / static_cast<double>(values.size()));
            }
            spec.series.push_back(std::move(s));
        }
        std::string name = dataset + "_" + split + "_" + metric + ".svg";
        out.emplace_back(name, render_line_chart(spec));
    }
    return out;
}

}  // namespace absa
