#include "absa/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "absa/error.hpp"

namespace absa {

std::string format_compact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string format_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* CsvRow::header() {
    return "run_id,task,dataset,epochs,dropout,epsilon,seed,split,metric,value";
}

std::string CsvRow::to_line() const {
    std::ostringstream os;
    os << run_id << ',' << to_string(task) << ',' << dataset << ',' << epoch << ','
       << format_compact(dropout) << ',' << format_compact(epsilon) << ',' << seed << ',' << split
       << ',' << metric << ',' << format_exact(value);
    return os.str();
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

}  // namespace

CsvRow CsvRow::parse(const std::string& line) {
    auto fields = split_fields(line);
    if (fields.size() != 10) {
        throw ParseError("expected 10 CSV fields, got " + std::to_string(fields.size()) + ": " + line);
    }
    CsvRow row;
    try {
        row.run_id = fields[0];
        row.task = task_from_string(fields[1]);
        row.dataset = fields[2];
        row.epoch = static_cast<std::size_t>(std::stoull(fields[3]));
        row.dropout = std::stod(fields[4]);
        row.epsilon = std::stod(fields[5]);
        row.seed = std::stoull(fields[6]);
        row.split = fields[7];
        row.metric = fields[8];
        row.value = std::stod(fields[9]);
    } catch (const std::exception& e) {
        throw ParseError(std::string("bad CSV row: ") + e.what() + ": " + line);
    }
    return row;
}

std::string rows_to_csv(const std::vector<CsvRow>& rows) {
    std::ostringstream os;
    os << CsvRow::header() << '\n';
    for (const auto& row : rows) os << row.to_line() << '\n';
    return os.str();
}

std::vector<CsvRow> rows_from_csv(const std::string& text) {
    std::vector<CsvRow> rows;
    std::istringstream is(text);
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == CsvRow::header()) continue;
        }
        rows.push_back(CsvRow::parse(line));
    }
    return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << content;
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace absa
