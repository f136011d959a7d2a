#include "absa/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace absa {

void TrainConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (epochs == 0) throw ConfigError("epoch count must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout outside [0,1)");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (dataset_name.find(',') != std::string::npos) {
        throw ConfigError("dataset name must not contain commas");
    }
}

std::string TrainConfig::fingerprint() const {
    std::ostringstream os;
    os << to_string(task) << '|' << dataset_name << "|lr=" << format_compact(lr)
       << "|bs=" << batch_size << "|p=" << format_compact(dropout)
       << "|eps=" << format_compact(epsilon) << '|' << model.fingerprint_text();
    return os.str();
}

std::string TrainConfig::run_id() const {
    std::uint64_t h = fnv1a64(fingerprint() + "|seed=" + std::to_string(seed));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DataBundle synthetic_bundle(Task task, std::size_t train_count, std::uint64_t seed, const Vocab& vocab,
                            std::size_t max_len, std::size_t val_count, std::size_t test_count) {
    Rng rng(seed);
    auto train_raw = synthetic_sentences(train_count, rng.stream("train"));
    auto val_raw = synthetic_sentences(val_count, rng.stream("val"));
    auto test_raw = synthetic_sentences(test_count, rng.stream("test"));

    DataBundle bundle;
    bundle.task = task;
    if (task == Task::AspectExtraction) {
        bundle.train_ae = make_ae_examples(train_raw, vocab, max_len);
        bundle.val_ae = make_ae_examples(val_raw, vocab, max_len);
        bundle.test_ae = make_ae_examples(test_raw, vocab, max_len);
    } else {
        bundle.train_asc = make_asc_examples(train_raw, vocab, max_len);
        bundle.val_asc = make_asc_examples(val_raw, vocab, max_len);
        bundle.test_asc = make_asc_examples(test_raw, vocab, max_len);
    }
    return bundle;
}

namespace {

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    Rng* shuffle_rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (shuffle_rng) shuffle_rng->shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < n; at += batch_size) {
        std::size_t end = std::min(n, at + batch_size);
        batches.emplace_back(order.begin() + static_cast<long>(at),
                             order.begin() + static_cast<long>(end));
    }
    return batches;
}

int argmax3(const float* row) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (row[c] > row[best]) best = c;
    }
    return best;
}

}  // namespace

MetricsReport evaluate_ae(const Model& model, const ParamSet& params,
                          const std::vector<AeExample>& examples, std::size_t batch_size) {
    if (examples.empty()) throw UsageError("evaluate_ae: no examples");
    std::vector<SpanSet> predicted, gold;
    predicted.reserve(examples.size());
    gold.reserve(examples.size());
    std::size_t gold_spans = 0;

    for (const auto& batch_idx : batch_indices(examples.size(), batch_size, nullptr)) {
        Batch batch = make_ae_batch(examples, batch_idx);
        Tape tape;
        auto out = model.forward(tape, batch, params.view(), nullptr, false);
        const auto& logits = out.logits.values();

        for (std::size_t b = 0; b < batch.size; ++b) {
            std::vector<int> pred_words, gold_words;
            for (std::size_t i = 0; i < batch.seq_len; ++i) {
                std::size_t row = b * batch.seq_len + i;
                if (!batch.score_mask[row]) continue;
                pred_words.push_back(argmax3(logits.data() + row * kNumClasses));
                gold_words.push_back(batch.labels[row]);
            }
            predicted.push_back(decode_bio(pred_words));
            gold.push_back(decode_bio(gold_words));
            gold_spans += gold.back().size();
        }
    }

    MetricsReport report;
    report.task = Task::AspectExtraction;
    report.span = span_f1(predicted, gold);
    report.support = gold_spans;
    return report;
}

MetricsReport evaluate_asc(const Model& model, const ParamSet& params,
                           const std::vector<AscExample>& examples, std::size_t batch_size) {
    if (examples.empty()) throw UsageError("evaluate_asc: no examples");
    std::vector<int> predicted, gold;
    predicted.reserve(examples.size());
    gold.reserve(examples.size());

    for (const auto& batch_idx : batch_indices(examples.size(), batch_size, nullptr)) {
        Batch batch = make_asc_batch(examples, batch_idx);
        Tape tape;
        auto out = model.forward(tape, batch, params.view(), nullptr, false);
        const auto& logits = out.logits.values();
        for (std::size_t b = 0; b < batch.size; ++b) {
            predicted.push_back(argmax3(logits.data() + b * kNumClasses));
            gold.push_back(batch.labels[b]);
        }
    }

    MetricsReport report;
    report.task = Task::SentimentClassification;
    report.acc = accuracy(predicted, gold);
    report.mf1 = macro_f1(predicted, gold);
    report.per_class = per_class_scores(predicted, gold);
    report.support = examples.size();
    return report;
}

TrainResult train(const TrainConfig& cfg, const DataBundle& data) {
    cfg.validate();
    if (data.task != cfg.task) throw ConfigError("data bundle task does not match the train config");
    if (data.train_size() == 0) throw DataError("training set is empty");

    ModelConfig model_cfg = cfg.model;
    model_cfg.task = cfg.task;
    model_cfg.dropout = cfg.dropout;
    model_cfg.validate();

    const bool is_ae = cfg.task == Task::AspectExtraction;
    Model model(model_cfg);
    AdvConfig adv = AdvConfig::for_task(cfg.task, cfg.epsilon);

    Rng rng(cfg.seed);
    ParamSet params;
    model.init_params(params, rng.stream("init"));
    params.attach_adam({.lr = cfg.lr});
    Rng shuffle_rng = rng.stream("shuffle");
    Rng dropout_rng = rng.stream("dropout");

    TrainResult result;
    result.run_id = cfg.run_id();
    result.model = model_cfg;
    double best_primary = -1.0;

    auto push_metric_rows = [&](std::size_t epoch, const std::string& split,
                                const MetricsReport& report) {
        auto push = [&](const std::string& metric, double value) {
            result.rows.push_back(CsvRow{result.run_id, cfg.task, cfg.dataset_name, epoch,
                                         cfg.dropout, cfg.epsilon, cfg.seed, split, metric, value});
        };
        if (is_ae) {
            push("f1", report.span.f1);
            push("precision", report.span.precision);
            push("recall", report.span.recall);
        } else {
            push("acc", report.acc);
            push("mf1", report.mf1);
        }
    };

    MetricsReport best_test_cache;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double clean_sum = 0.0, adv_sum = 0.0, total_sum = 0.0;
        std::size_t degenerate = 0, steps = 0;

        for (const auto& idx : batch_indices(data.train_size(), cfg.batch_size, &shuffle_rng)) {
            Batch batch = is_ae ? make_ae_batch(data.train_ae, idx) : make_asc_batch(data.train_asc, idx);
            StepReport step = combined_step(model, batch, params, adv, dropout_rng);
            clean_sum += step.clean_loss;
            adv_sum += step.adversarial_loss;
            total_sum += step.total_loss;
            degenerate += step.degenerate_examples;
            ++steps;
        }

        auto push_loss = [&](const std::string& metric, double value) {
            result.rows.push_back(CsvRow{result.run_id, cfg.task, cfg.dataset_name, epoch,
                                         cfg.dropout, cfg.epsilon, cfg.seed, "train", metric, value});
        };
        push_loss("loss_clean", clean_sum / static_cast<double>(steps));
        push_loss("loss_adv", adv_sum / static_cast<double>(steps));
        push_loss("loss_total", total_sum / static_cast<double>(steps));
        push_loss("degenerate", static_cast<double>(degenerate));

        MetricsReport val, test;
        if (data.val_size()) {
            val = is_ae ? evaluate_ae(model, params, data.val_ae, cfg.batch_size)
                        : evaluate_asc(model, params, data.val_asc, cfg.batch_size);
            val.split = "val";
            val.seed = cfg.seed;
            val.config_fingerprint = cfg.run_id();
            push_metric_rows(epoch, "val", val);
            result.final_val = val;
        }
        if (data.test_size()) {
            test = is_ae ? evaluate_ae(model, params, data.test_ae, cfg.batch_size)
                         : evaluate_asc(model, params, data.test_asc, cfg.batch_size);
            test.split = "test";
            test.seed = cfg.seed;
            test.config_fingerprint = cfg.run_id();
            push_metric_rows(epoch, "test", test);
            result.final_test = test;
        }

        // Model selection on validation (falling back to train order when no
        // validation set was given: the last epoch wins).
        double primary = data.val_size() ? val.primary() : 0.0;
        if (result.best_epoch == 0 || primary > best_primary) {
            best_primary = primary;
            result.best_epoch = epoch;
            result.best_params = params.snapshot_values();
            best_test_cache = test;
        }
    }

    result.final_params = params.snapshot_values();
    if (data.test_size()) {
        result.best_test = best_test_cache;
        result.best_test.split = "test_best";
        push_metric_rows(result.best_epoch, "test_best", result.best_test);
    }
    return result;
}

}  // namespace absa
