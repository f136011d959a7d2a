#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absa/task.hpp"

namespace absa {

// Shortest-exact float formatting for config-axis columns ("%g") and
// round-trip-exact formatting for measured values ("%.17g").
std::string format_compact(double v);
std::string format_exact(double v);

// One row of the canonical long-format results file.
struct CsvRow {
    std::string run_id;
    Task task = Task::AspectExtraction;
    std::string dataset;
    std::size_t epoch = 0;  // "epochs" column: the epoch the value was measured at
    double dropout = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::string split;   // train | val | test | test_best
    std::string metric;  // loss_clean | loss_adv | loss_total | degenerate | f1 | precision | recall | acc | mf1
    double value = 0.0;

    static const char* header();  // run_id,task,dataset,epochs,dropout,epsilon,seed,split,metric,value
    std::string to_line() const;
    static CsvRow parse(const std::string& line);
};

std::string rows_to_csv(const std::vector<CsvRow>& rows);
std::vector<CsvRow> rows_from_csv(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace absa
