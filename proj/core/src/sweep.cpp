#include "absa/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace absa {

void SweepGrid::validate() const {
    if (epochs_min == 0 || epochs_max < epochs_min) throw ConfigError("bad sweep epoch range");
    if (dropouts.empty() || epsilons.empty()) throw ConfigError("sweep axes must be non-empty");
    if (seeds_per_cell == 0) throw ConfigError("seeds per cell must be >= 1");
    for (double p : dropouts) {
        if (p < 0.0 || p >= 1.0) throw ConfigError("sweep dropout outside [0,1)");
    }
    for (double e : epsilons) {
        if (e < 0.0) throw ConfigError("sweep epsilon must be >= 0");
    }
}

namespace {

struct RunSpec {
    double dropout;
    double epsilon;
    std::uint64_t seed;
};

std::string fmt_pct(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", rate * 100.0);
    return buf;
}

std::string fmt_delta(double delta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", delta * 100.0);
    return buf;
}

std::string row_label(double epsilon) {
    return epsilon == 0.0 ? "baseline" : "eps=" + format_compact(epsilon);
}

}  // namespace

std::string SweepResult::cells_csv() const {
    std::ostringstream os;
    os << "epochs,dropout,epsilon,metric,mean,n_seeds\n";
    for (const auto& c : cells) {
        os << c.epoch << ',' << format_compact(c.dropout) << ',' << format_compact(c.epsilon) << ','
           << c.metric << ',' << format_exact(c.mean) << ',' << c.per_seed.size() << '\n';
    }
    return os.str();
}

SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const DataBundle& data,
                  std::size_t jobs) {
    grid.validate();
    base.validate();

    std::vector<RunSpec> specs;
    for (double dropout : grid.dropouts) {
        for (double epsilon : grid.epsilons) {
            for (std::size_t s = 0; s < grid.seeds_per_cell; ++s) {
                specs.push_back(RunSpec{dropout, epsilon, grid.seed_base + s});
            }
        }
    }

    // Each run is fully isolated (own model, params, RNG streams); results
    // land in pre-sized slots so output order never depends on scheduling.
    std::vector<TrainResult> results(specs.size());
    std::vector<std::string> errors(specs.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= specs.size()) return;
            TrainConfig cfg = base;
            cfg.dropout = specs[i].dropout;
            cfg.epsilon = specs[i].epsilon;
            cfg.seed = specs[i].seed;
            cfg.epochs = grid.epochs_max;
            try {
                results[i] = train(cfg, data);
            } catch (const std::exception& e) {
                errors[i] = "run dropout=" + format_compact(specs[i].dropout) +
                            " epsilon=" + format_compact(specs[i].epsilon) +
                            " seed=" + std::to_string(specs[i].seed) + ": " + e.what();
            }
        }
    };

    std::size_t thread_count = std::max<std::size_t>(1, std::min(jobs, specs.size()));
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepResult out;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!errors[i].empty()) {
            out.errors.push_back(errors[i]);
            continue;
        }
        out.rows.insert(out.rows.end(), results[i].rows.begin(), results[i].rows.end());
    }

    // Seed-averaged cells from the evaluation split (test when present).
    const std::string table_split = data.test_size() ? "test" : "val";
    std::map<std::tuple<std::size_t, double, double, std::string>, std::vector<double>> grouped;
    for (const CsvRow& row : out.rows) {
        if (row.split != table_split) continue;
        if (row.epoch < grid.epochs_min || row.epoch > grid.epochs_max) continue;
        grouped[{row.epoch, row.dropout, row.epsilon, row.metric}].push_back(row.value);
    }
    for (const auto& [key, values] : grouped) {
        SweepCell cell;
        cell.epoch = std::get<0>(key);
        cell.dropout = std::get<1>(key);
        cell.epsilon = std::get<2>(key);
        cell.metric = std::get<3>(key);
        cell.per_seed = values;
        double sum = 0.0;
        for (double v : values) sum += v;
        cell.mean = sum / static_cast<double>(values.size());
        out.cells.push_back(std::move(cell));
    }

    // Epsilon table at the base epoch count, one row per epsilon with the
    // delta against the baseline row in parentheses.
    std::size_t table_epoch = std::clamp(base.epochs, grid.epochs_min, grid.epochs_max);
    double table_dropout = grid.dropouts.front();
    std::vector<std::string> metrics =
        base.task == Task::AspectExtraction ? std::vector<std::string>{"f1"}
                                            : std::vector<std::string>{"acc", "mf1"};

    auto cell_mean = [&](double epsilon, const std::string& metric, double* found) {
        for (const auto& c : out.cells) {
            if (c.epoch == table_epoch && c.dropout == table_dropout && c.epsilon == epsilon &&
                c.metric == metric) {
                *found = c.mean;
                return true;
            }
        }
        return false;
    };

    std::vector<double> ordered_eps = grid.epsilons;
    std::stable_sort(ordered_eps.begin(), ordered_eps.end());

    std::ostringstream csv, text;
    csv << "row,metric,value,delta\n";
    text << "Epsilon sweep: task=" << to_string(base.task) << " dataset=" << data.name
         << " epochs=" << table_epoch << " dropout=" << format_compact(table_dropout) << "\n";
    text << "method";
    for (const auto& m : metrics) text << '\t' << m;
    text << '\n';

    for (double epsilon : ordered_eps) {
        std::string label = row_label(epsilon);
        text << label;
        for (const auto& metric : metrics) {
            double value = 0.0;
            if (!cell_mean(epsilon, metric, &value)) {
                text << "\tn/a";
                continue;
            }
            double baseline = 0.0;
            bool has_baseline = cell_mean(0.0, metric, &baseline);
            double delta = value - baseline;
            csv << label << ',' << metric << ',' << format_exact(value) << ','
                << (epsilon == 0.0 || !has_baseline ? "0" : format_exact(delta)) << '\n';
            if (epsilon == 0.0 || !has_baseline) {
                text << '\t' << fmt_pct(value);
            } else {
                text << '\t' << fmt_pct(value) << " (" << fmt_delta(delta) << ")";
            }
        }
        text << '\n';
    }
    out.table_csv = csv.str();
    out.table_text = text.str();
    return out;
}

}  // namespace absa
