#pragma once

#include <string>
#include <utility>
#include <vector>

#include "absa/csv.hpp"

namespace absa {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;  // sorted by x
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

// Deterministic SVG line chart: identical input yields identical bytes.
// Each polyline carries a `data-points` attribute with the raw x:y pairs at
// full precision, so emitted charts can be checked against their source CSV.
std::string render_line_chart(const ChartSpec& spec);

// One chart per (dataset, split, metric) from long-format rows: x = epochs,
// one line per epsilon value (or per dropout when only one epsilon is
// present), y = seed-averaged metric. Returns (file name, svg text) pairs.
std::vector<std::pair<std::string, std::string>> charts_from_rows(const std::vector<CsvRow>& rows);

}  // namespace absa
