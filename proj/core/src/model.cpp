#include "absa/model.hpp"

#include <json.hpp>

#include "absa/error.hpp"

namespace absa {

using nlohmann::json;

void ModelConfig::validate() const {
    if (vocab_size == 0) throw ConfigError("model vocab_size must be positive");
    if (hidden == 0 || heads == 0 || hidden % heads != 0) {
        throw ConfigError("hidden size " + std::to_string(hidden) + " must be divisible by " +
                          std::to_string(heads) + " heads");
    }
    if (layers == 0) throw ConfigError("model needs at least one layer");
    if (ff == 0) throw ConfigError("feed-forward size must be positive");
    if (max_len < 3) throw ConfigError("max_len must be >= 3");
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ConfigError("dropout " + std::to_string(dropout) + " outside [0,1)");
    }
}

std::string ModelConfig::to_json() const {
    json j{{"vocab_size", vocab_size}, {"hidden", hidden}, {"layers", layers},
           {"heads", heads},           {"ff", ff},         {"max_len", max_len},
           {"dropout", dropout},       {"task", to_string(task)}};
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad model manifest: ") + e.what());
    }
    ModelConfig cfg;
    try {
        cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
        cfg.hidden = j.at("hidden").get<std::size_t>();
        cfg.layers = j.at("layers").get<std::size_t>();
        cfg.heads = j.at("heads").get<std::size_t>();
        cfg.ff = j.at("ff").get<std::size_t>();
        cfg.max_len = j.at("max_len").get<std::size_t>();
        cfg.dropout = j.at("dropout").get<double>();
        cfg.task = task_from_string(j.at("task").get<std::string>());
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad model manifest: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string ModelConfig::fingerprint_text() const {
    return "v" + std::to_string(vocab_size) + ".d" + std::to_string(hidden) + ".l" +
           std::to_string(layers) + ".h" + std::to_string(heads) + ".f" + std::to_string(ff) +
           ".m" + std::to_string(max_len) + "." + to_string(task);
}

namespace {

// Shared layout work: trims trailing all-pad columns, flattens per-position
// arrays of the selected examples.
template <typename Example>
Batch layout_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& indices,
                   Task task) {
    if (indices.empty()) throw UsageError("cannot build an empty batch");
    std::size_t len = 0;
    for (std::size_t idx : indices) {
        if (idx >= examples.size()) throw IndexError("batch index out of range");
        len = std::max(len, examples[idx].tok.real_len);
    }

    Batch batch;
    batch.task = task;
    batch.size = indices.size();
    batch.seq_len = len;
    batch.token_ids.reserve(batch.size * len);
    for (std::size_t idx : indices) {
        const TokenizedExample& tok = examples[idx].tok;
        if (tok.ids.size() < len) throw DataError("tokenized example shorter than batch length");
        for (std::size_t i = 0; i < len; ++i) {
            batch.token_ids.push_back(tok.ids[i]);
            batch.segment_ids.push_back(tok.segments[i]);
            batch.position_ids.push_back(tok.positions[i]);
            batch.attention_mask.push_back(tok.attention_mask[i]);
            batch.special.push_back(tok.special[i]);
        }
    }
    return batch;
}

}  // namespace

Batch make_ae_batch(const std::vector<AeExample>& examples, const std::vector<std::size_t>& indices) {
    Batch batch = layout_batch(examples, indices, Task::AspectExtraction);
    for (std::size_t idx : indices) {
        const AeExample& ex = examples[idx];
        for (std::size_t i = 0; i < batch.seq_len; ++i) {
            batch.labels.push_back(ex.labels[i]);
            batch.score_mask.push_back(ex.score_mask[i]);
        }
    }
    return batch;
}

Batch make_asc_batch(const std::vector<AscExample>& examples, const std::vector<std::size_t>& indices) {
    Batch batch = layout_batch(examples, indices, Task::SentimentClassification);
    for (std::size_t idx : indices) batch.labels.push_back(examples[idx].label);
    return batch;
}

}  // namespace absa
