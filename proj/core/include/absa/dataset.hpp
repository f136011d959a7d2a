#pragma once

#include <string>
#include <utility>
#include <vector>

#include "absa/error.hpp"
#include "absa/rng.hpp"
#include "absa/semeval.hpp"
#include "absa/task.hpp"
#include "absa/tokenizer.hpp"

namespace absa {

// One AE training example: BIO labels aligned to subword positions, scored
// on first pieces only.
struct AeExample {
    TokenizedExample tok;
    std::vector<int> labels;
    std::vector<std::uint8_t> score_mask;
    std::string sentence_id;
};

// One ASC training example, duplicated per aspect of its sentence.
struct AscExample {
    TokenizedExample tok;
    std::string term;
    int label = 0;  // polarity class index
    std::string sentence_id;
};

// Word-level BIO derived from character spans: the first word overlapping a
// span takes B, the rest of the overlapped words take I.
std::vector<int> word_bio_labels(const RawSentence& sentence, const std::vector<Word>& words);

// Sentences whose gold span would be truncated away raise a DataError naming
// the sentence; aspectless sentences yield all-O examples.
std::vector<AeExample> make_ae_examples(const std::vector<RawSentence>& sentences, const Vocab& vocab,
                                        std::size_t max_len, bool lowercase = true);

// One example per aspect whose polarity is positive/negative/neutral;
// conflict and unspecified polarities are dropped.
std::vector<AscExample> make_asc_examples(const std::vector<RawSentence>& sentences, const Vocab& vocab,
                                          std::size_t max_len, bool lowercase = true);

// The last `validation_count` examples, in file order, become validation.
template <typename Example>
std::pair<std::vector<Example>, std::vector<Example>> split_train_validation(
    std::vector<Example> examples, std::size_t validation_count = 150) {
    if (examples.size() <= validation_count) {
        throw DataError("need more than " + std::to_string(validation_count) +
                        " examples to split, got " + std::to_string(examples.size()));
    }
    std::size_t cut = examples.size() - validation_count;
    std::vector<Example> validation(examples.begin() + static_cast<long>(cut), examples.end());
    examples.resize(cut);
    return {std::move(examples), std::move(validation)};
}

// Line-delimited JSON record files, one example per line; the schema is
// documented in the README so training is decoupled from XML parsing.
void write_ae_records(const std::string& path, const std::vector<AeExample>& examples);
std::vector<AeExample> read_ae_records(const std::string& path);
void write_asc_records(const std::string& path, const std::vector<AscExample>& examples);
std::vector<AscExample> read_asc_records(const std::string& path);

// Detects the record kind ("ae" or "asc") from the first line.
std::string record_file_kind(const std::string& path);

// Small self-labeling review generator used by smoke tests, the demo
// subcommands and out-of-the-box sweeps. Aspect terms come from a fixed
// lexicon (some two words long); for ASC a sentiment word adjacent to the
// aspect determines the polarity.
std::vector<RawSentence> synthetic_sentences(std::size_t count, Rng rng);

std::vector<std::string> sentence_texts(const std::vector<RawSentence>& sentences);

}  // namespace absa
