#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absa/adversarial.hpp"
#include "absa/csv.hpp"
#include "absa/dataset.hpp"
#include "absa/metrics.hpp"
#include "absa/model.hpp"

namespace absa {

// One training run's configuration. `epsilon == 0` runs the plain
// fine-tuning baseline; anything positive turns adversarial training on.
struct TrainConfig {
    Task task = Task::AspectExtraction;
    double lr = 3e-5;
    std::size_t batch_size = 16;
    std::size_t epochs = 4;
    double dropout = 0.1;
    double epsilon = 0.0;
    std::uint64_t seed = 1;
    std::string dataset_name = "synthetic";
    ModelConfig model;  // geometry; task/dropout are overridden from above

    void validate() const;

    // Canonical description of everything that shapes the trajectory except
    // the seed and the epoch count (a longer run shares its prefix with a
    // shorter one, so both report under the same identity).
    std::string fingerprint() const;
    std::string run_id() const;  // fingerprint + seed, 16 hex digits
};

// Train/validation/test examples for one task. Validation and test may be
// empty (their metric rows are simply absent).
struct DataBundle {
    Task task = Task::AspectExtraction;
    std::string name = "synthetic";
    std::vector<AeExample> train_ae, val_ae, test_ae;
    std::vector<AscExample> train_asc, val_asc, test_asc;

    std::size_t train_size() const {
        return task == Task::AspectExtraction ? train_ae.size() : train_asc.size();
    }
    std::size_t val_size() const {
        return task == Task::AspectExtraction ? val_ae.size() : val_asc.size();
    }
    std::size_t test_size() const {
        return task == Task::AspectExtraction ? test_ae.size() : test_asc.size();
    }
};

// Builds a bundle from the synthetic generator: `train_count` training
// sentences plus fixed-size validation/test slices, all self-labeling.
DataBundle synthetic_bundle(Task task, std::size_t train_count, std::uint64_t seed, const Vocab& vocab,
                            std::size_t max_len, std::size_t val_count = 8, std::size_t test_count = 8);

// Deterministic evaluation (no dropout, file order).
MetricsReport evaluate_ae(const Model& model, const ParamSet& params,
                          const std::vector<AeExample>& examples, std::size_t batch_size);
MetricsReport evaluate_asc(const Model& model, const ParamSet& params,
                           const std::vector<AscExample>& examples, std::size_t batch_size);

struct TrainResult {
    std::string run_id;
    std::vector<CsvRow> rows;  // per-epoch train losses + val/test metrics
    std::size_t best_epoch = 0;
    MetricsReport final_val;
    MetricsReport final_test;
    MetricsReport best_test;  // test metrics at the best-validation epoch
    ParamSet final_params;
    ParamSet best_params;  // values snapshot of the best-validation epoch
    ModelConfig model;     // as trained (vocab size etc. resolved)
};

// Seeded mini-batch training with per-epoch validation/test metrics, the
// best-validation checkpoint, and per-epoch clean/adversarial loss rows.
TrainResult train(const TrainConfig& cfg, const DataBundle& data);

}  // namespace absa
