#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absa/trainer.hpp"

namespace absa {

// Grid axes of the sweep protocol: an epoch range (one run per
// (dropout, epsilon, seed) trains to epochs_max and reports every epoch in
// range), dropout values, perturbation sizes (0 = the baseline row), and the
// number of seeds averaged per cell.
struct SweepGrid {
    std::size_t epochs_min = 3;
    std::size_t epochs_max = 10;
    std::vector<double> dropouts = {0.1};
    std::vector<double> epsilons = {0.0, 0.01, 0.1, 1.0, 2.0, 5.0};
    std::size_t seeds_per_cell = 3;
    std::uint64_t seed_base = 1;

    void validate() const;
    std::size_t run_count() const {
        return dropouts.size() * epsilons.size() * seeds_per_cell;
    }
};

// Mean over seeds for one (epoch, dropout, epsilon, metric) cell.
struct SweepCell {
    std::size_t epoch = 0;
    double dropout = 0.0;
    double epsilon = 0.0;
    std::string metric;
    double mean = 0.0;
    std::vector<double> per_seed;
};

struct SweepResult {
    std::vector<CsvRow> rows;      // every per-seed row, in deterministic run order
    std::vector<SweepCell> cells;  // seed-averaged test metrics
    std::string table_csv;         // epsilon table, raw full-precision values
    std::string table_text;        // paper-shaped table with deltas in parentheses
    std::vector<std::string> errors;  // one entry per failed run, others unaffected

    std::string cells_csv() const;
};

// Runs the grid, averages cells, and renders the epsilon table at
// `base.epochs` (clamped into the grid's epoch range). Independent runs may
// execute concurrently (`jobs` threads); outputs are byte-deterministic
// regardless of scheduling.
SweepResult sweep(const SweepGrid& grid, const TrainConfig& base, const DataBundle& data,
                  std::size_t jobs = 1);

}  // namespace absa
