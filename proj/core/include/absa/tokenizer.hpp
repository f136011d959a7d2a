#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "absa/text.hpp"

namespace absa {

// Subword vocabulary. Ids are dense; the four reserved tokens always occupy
// ids 0..3. Continuation pieces carry the "##" marker.
class Vocab {
public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;
    static constexpr int kClsId = 2;
    static constexpr int kSepId = 3;
    static constexpr const char* kPadToken = "[PAD]";
    static constexpr const char* kUnkToken = "[UNK]";
    static constexpr const char* kClsToken = "[CLS]";
    static constexpr const char* kSepToken = "[SEP]";
    static constexpr const char* kContinuationMarker = "##";

    // Empty vocabulary holding only the reserved tokens.
    Vocab();

    // Returns the id of `token`, or -1 when absent.
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    bool contains(const std::string& token) const { return id(token) >= 0; }
    std::size_t size() const { return tokens_.size(); }

    // Appends a token with the next dense id. Duplicate insertions are errors.
    int add(const std::string& token);

    // One token per line, line number = id, UTF-8.
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Greedy frequency-based subword merges over the corpus until the vocabulary
// reaches `target_size` entries (or no adjacent pair remains). Deterministic:
// the alphabet keeps first-seen order and ties between pairs break
// lexicographically.
Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t target_size,
                  bool lowercase = true);

struct WordPieces {
    std::vector<int> ids;
    std::vector<std::uint8_t> word_start;  // 1 on the first piece of each word
    std::size_t word_count = 0;
};

// Greedy longest-prefix match of one word; the whole word falls back to a
// single [UNK] when no prefix matches.
std::vector<int> tokenize_word(const std::string& word, const Vocab& vocab);

// Tokenizes text with the shared word-boundary rule (whitespace plus
// punctuation detachment), then per-word greedy matching.
WordPieces tokenize(const std::string& text, const Vocab& vocab, bool lowercase = true);

// One encoded input sequence. All arrays share the padded length; the
// attention mask is a prefix of ones.
struct TokenizedExample {
    std::vector<int> ids;
    std::vector<int> segments;
    std::vector<int> positions;
    std::vector<std::uint8_t> attention_mask;
    std::vector<std::uint8_t> word_start;
    std::vector<std::uint8_t> special;  // [CLS], [SEP] and padding positions
    std::size_t real_len = 0;           // positions before padding
};

// "[CLS] w1 .. wn [SEP]" single-sentence layout, right-truncated to fit and
// right-padded with [PAD] to max_len.
TokenizedExample encode_sequence(const WordPieces& pieces, std::size_t max_len);

// "[CLS] sentence [SEP] aspect [SEP]" pair layout for ASC; segment 1 marks
// the aspect. The sentence truncates first, the aspect only if it must.
TokenizedExample encode_pair(const WordPieces& sentence, const WordPieces& aspect,
                             std::size_t max_len);

struct AlignedBio {
    std::vector<int> labels;               // per position, BIO class indices
    std::vector<std::uint8_t> score_mask;  // 1 only on the first piece of each word
};

// Expands word-level BIO labels to subword positions: the first piece of a
// word carries its label and is scored; continuations and specials are
// excluded from loss and evaluation.
AlignedBio align_bio(const std::vector<int>& word_labels, const TokenizedExample& example);

// Piece strings at non-special positions, in order.
std::vector<std::string> decode_tokens(const TokenizedExample& example, const Vocab& vocab);

}  // namespace absa
