#include "absa/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "absa/error.hpp"

namespace absa {

Vocab::Vocab() {
    add(kPadToken);
    add(kUnkToken);
    add(kClsToken);
    add(kSepToken);
}

int Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw IndexError("vocab id " + std::to_string(id) + " out of range [0," +
                         std::to_string(tokens_.size()) + ")");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

int Vocab::add(const std::string& token) {
    if (token.empty()) throw DataError("cannot add an empty vocab token");
    if (index_.count(token)) throw DataError("duplicate vocab token '" + token + "'");
    int new_id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, new_id);
    return new_id;
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open vocab file for writing: " + path);
    for (const auto& t : tokens_) os << t << '\n';
    if (!os) throw IoError("write failed for vocab file: " + path);
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open vocab file: " + path);
    Vocab v;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no < 4) {
            // Reserved ids are part of the format.
            static const char* expected[4] = {kPadToken, kUnkToken, kClsToken, kSepToken};
            if (line != expected[line_no]) {
                throw ParseError("vocab file " + path + ": line " + std::to_string(line_no + 1) +
                                 " must be " + expected[line_no]);
            }
        } else {
            if (line.empty()) throw ParseError("vocab file " + path + ": empty token at line " +
                                               std::to_string(line_no + 1));
            v.add(line);
        }
        ++line_no;
    }
    if (line_no < 4) throw ParseError("vocab file " + path + ": missing reserved tokens");
    return v;
}

namespace {

constexpr const char* kMarker = Vocab::kContinuationMarker;

bool has_marker(const std::string& s) { return s.rfind(kMarker, 0) == 0; }

std::string strip_marker(const std::string& s) { return has_marker(s) ? s.substr(2) : s; }

// Whitespace-plus-punctuation word list for every text in the corpus, with
// frequencies, preserving first-seen order.
struct WordFreqs {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> count;
};

WordFreqs collect_words(const std::vector<std::string>& corpus, bool lowercase) {
    WordFreqs wf;
    for (const auto& text : corpus) {
        for (const Word& w : segment_words(text)) {
            std::string key = lowercase ? to_lower_ascii(w.text) : w.text;
            auto [it, inserted] = wf.count.emplace(key, 0);
            if (inserted) wf.order.push_back(key);
            ++it->second;
        }
    }
    return wf;
}

}  // namespace

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t target_size, bool lowercase) {
    Vocab vocab;
    if (target_size <= vocab.size()) {
        throw ConfigError("vocab target size " + std::to_string(target_size) +
                          " does not exceed the " + std::to_string(vocab.size()) +
                          " reserved tokens");
    }

    WordFreqs words = collect_words(corpus, lowercase);
    if (words.order.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

    // Each distinct word becomes a symbol sequence: first code point bare,
    // the rest with the continuation marker.
    std::vector<std::vector<std::string>> symbols(words.order.size());
    std::vector<std::size_t> freqs(words.order.size());
    for (std::size_t w = 0; w < words.order.size(); ++w) {
        freqs[w] = words.count.at(words.order[w]);
        for (auto& cp : utf8_codepoints(words.order[w])) {
            symbols[w].push_back(symbols[w].empty() ? cp : std::string(kMarker) + cp);
        }
    }

    // Alphabet in first-seen order.
    for (const auto& seq : symbols) {
        for (const auto& s : seq) {
            if (!vocab.contains(s)) vocab.add(s);
        }
    }
    if (vocab.size() > target_size) {
        throw ConfigError("vocab target size " + std::to_string(target_size) +
                          " is below the alphabet size " + std::to_string(vocab.size()));
    }

    while (vocab.size() < target_size) {
        // Count adjacent pairs; ordered map gives the lexicographic tie-break.
        std::map<std::pair<std::string, std::string>, std::size_t> pair_count;
        for (std::size_t w = 0; w < symbols.size(); ++w) {
            for (std::size_t i = 0; i + 1 < symbols[w].size(); ++i) {
                pair_count[{symbols[w][i], symbols[w][i + 1]}] += freqs[w];
            }
        }
        if (pair_count.empty()) break;

        auto best = pair_count.begin();
        for (auto it = pair_count.begin(); it != pair_count.end(); ++it) {
            if (it->second > best->second) best = it;
        }
        const auto& [left, right] = best->first;
        std::string merged = left + strip_marker(right);

        for (auto& seq : symbols) {
            for (std::size_t i = 0; i + 1 < seq.size();) {
                if (seq[i] == left && seq[i + 1] == right) {
                    seq[i] = merged;
                    seq.erase(seq.begin() + static_cast<long>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
        if (!vocab.contains(merged)) vocab.add(merged);
    }
    return vocab;
}

std::vector<int> tokenize_word(const std::string& word, const Vocab& vocab) {
    std::vector<std::string> cps = utf8_codepoints(word);
    if (cps.empty()) return {};

    std::vector<int> ids;
    std::size_t start = 0;
    while (start < cps.size()) {
        int match = -1;
        std::size_t match_len = 0;
        std::string candidate = start == 0 ? "" : std::string(kMarker);
        for (std::size_t end = start; end < cps.size(); ++end) {
            candidate += cps[end];
            int id = vocab.id(candidate);
            if (id >= 0) {
                match = id;
                match_len = end - start + 1;
            }
        }
        if (match < 0) return {Vocab::kUnkId};  // no prefix known: whole word is [UNK]
        ids.push_back(match);
        start += match_len;
    }
    return ids;
}

WordPieces tokenize(const std::string& text, const Vocab& vocab, bool lowercase) {
    WordPieces out;
    for (const Word& w : segment_words(text)) {
        std::string key = lowercase ? to_lower_ascii(w.text) : w.text;
        std::vector<int> ids = tokenize_word(key, vocab);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            out.ids.push_back(ids[i]);
            out.word_start.push_back(i == 0 ? 1 : 0);
        }
        ++out.word_count;
    }
    return out;
}

namespace {

TokenizedExample blank_example(std::size_t max_len) {
    TokenizedExample ex;
    ex.ids.assign(max_len, Vocab::kPadId);
    ex.segments.assign(max_len, 0);
    ex.positions.resize(max_len);
    for (std::size_t i = 0; i < max_len; ++i) ex.positions[i] = static_cast<int>(i);
    ex.attention_mask.assign(max_len, 0);
    ex.word_start.assign(max_len, 0);
    ex.special.assign(max_len, 1);  // padding counts as special
    return ex;
}

void place(TokenizedExample& ex, std::size_t pos, int id, int segment, std::uint8_t word_start,
           std::uint8_t special) {
    ex.ids[pos] = id;
    ex.segments[pos] = segment;
    ex.attention_mask[pos] = 1;
    ex.word_start[pos] = word_start;
    ex.special[pos] = special;
}

}  // namespace

TokenizedExample encode_sequence(const WordPieces& pieces, std::size_t max_len) {
    if (max_len < 3) throw ConfigError("max_len must be >= 3, got " + std::to_string(max_len));
    if (pieces.ids.empty()) throw UsageError("encode_sequence: empty token sequence");

    std::size_t keep = std::min(pieces.ids.size(), max_len - 2);
    TokenizedExample ex = blank_example(max_len);
    std::size_t pos = 0;
    place(ex, pos++, Vocab::kClsId, 0, 0, 1);
    for (std::size_t i = 0; i < keep; ++i) {
        place(ex, pos, pieces.ids[i], 0, pieces.word_start[i], 0);
        ++pos;
    }
    place(ex, pos++, Vocab::kSepId, 0, 0, 1);
    ex.real_len = pos;
    return ex;
}

TokenizedExample encode_pair(const WordPieces& sentence, const WordPieces& aspect,
                             std::size_t max_len) {
    if (max_len < 5) throw ConfigError("pair encoding needs max_len >= 5, got " + std::to_string(max_len));
    if (sentence.ids.empty()) throw UsageError("encode_pair: empty sentence");
    if (aspect.ids.empty()) throw UsageError("encode_pair: empty aspect term");

    std::size_t budget = max_len - 3;  // [CLS] and two [SEP]
    std::size_t aspect_len = std::min(aspect.ids.size(), budget - 1);
    std::size_t sent_len = std::min(sentence.ids.size(), budget - aspect_len);

    TokenizedExample ex = blank_example(max_len);
    std::size_t pos = 0;
    place(ex, pos++, Vocab::kClsId, 0, 0, 1);
    for (std::size_t i = 0; i < sent_len; ++i) {
        place(ex, pos, sentence.ids[i], 0, sentence.word_start[i], 0);
        ++pos;
    }
    place(ex, pos++, Vocab::kSepId, 0, 0, 1);
    for (std::size_t i = 0; i < aspect_len; ++i) {
        place(ex, pos, aspect.ids[i], 1, aspect.word_start[i], 0);
        ++pos;
    }
    place(ex, pos++, Vocab::kSepId, 1, 0, 1);
    ex.real_len = pos;
    return ex;
}

AlignedBio align_bio(const std::vector<int>& word_labels, const TokenizedExample& example) {
    std::size_t starts = 0;
    for (std::size_t i = 0; i < example.ids.size(); ++i) {
        if (example.word_start[i] && !example.special[i]) ++starts;
    }
    if (starts != word_labels.size()) {
        throw DataError("align_bio: " + std::to_string(word_labels.size()) + " word labels for " +
                        std::to_string(starts) + " word starts");
    }

    AlignedBio out;
    out.labels.assign(example.ids.size(), 0);
    out.score_mask.assign(example.ids.size(), 0);
    std::size_t w = 0;
    int current = 0;
    for (std::size_t i = 0; i < example.ids.size(); ++i) {
        if (example.special[i]) continue;  // [CLS]/[SEP]/[PAD] stay unscored
        if (example.word_start[i]) {
            current = word_labels[w++];
            out.labels[i] = current;
            out.score_mask[i] = 1;
        } else {
            out.labels[i] = current;  // continuation piece, excluded from scoring
        }
    }
    return out;
}

std::vector<std::string> decode_tokens(const TokenizedExample& example, const Vocab& vocab) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < example.ids.size(); ++i) {
        if (!example.special[i] && example.attention_mask[i]) out.push_back(vocab.token(example.ids[i]));
    }
    return out;
}

}  // namespace absa
