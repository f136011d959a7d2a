#include "absa/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

namespace absa {

using nlohmann::json;

std::vector<int> word_bio_labels(const RawSentence& sentence, const std::vector<Word>& words) {
    std::vector<int> labels(words.size(), kBioOutside);
    for (const AspectSpan& span : sentence.aspects) {
        bool first = true;
        for (std::size_t w = 0; w < words.size(); ++w) {
            bool overlap = words[w].cp_from < span.char_to && span.char_from < words[w].cp_to;
            if (!overlap) continue;
            labels[w] = first ? kBioBegin : kBioInside;
            first = false;
        }
        if (first) {
            throw DataError("sentence '" + sentence.id + "': aspect '" + span.term +
                            "' overlaps no word");
        }
    }
    return labels;
}

std::vector<AeExample> make_ae_examples(const std::vector<RawSentence>& sentences, const Vocab& vocab,
                                        std::size_t max_len, bool lowercase) {
    std::vector<AeExample> out;
    out.reserve(sentences.size());
    for (const RawSentence& sentence : sentences) {
        std::vector<Word> words = segment_words(sentence.text);
        if (words.empty()) {
            throw DataError("sentence '" + sentence.id + "' has no tokens");
        }
        std::vector<int> labels = word_bio_labels(sentence, words);

        WordPieces pieces;
        std::vector<std::size_t> first_piece(words.size());
        for (std::size_t w = 0; w < words.size(); ++w) {
            first_piece[w] = pieces.ids.size();
            std::string key = lowercase ? to_lower_ascii(words[w].text) : words[w].text;
            std::vector<int> ids = tokenize_word(key, vocab);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                pieces.ids.push_back(ids[i]);
                pieces.word_start.push_back(i == 0 ? 1 : 0);
            }
            ++pieces.word_count;
        }

        // Right truncation keeps a word iff its first piece fits. Losing an
        // O word merely shortens the example; losing gold B/I is an error.
        std::size_t budget = max_len - 2;
        std::size_t surviving = words.size();
        while (surviving > 0 && first_piece[surviving - 1] >= budget) --surviving;
        for (std::size_t w = surviving; w < words.size(); ++w) {
            if (labels[w] != kBioOutside) {
                throw DataError("sentence '" + sentence.id +
                                "': aspect span truncated away at max_len " + std::to_string(max_len));
            }
        }
        labels.resize(surviving);

        AeExample ex;
        ex.sentence_id = sentence.id;
        ex.tok = encode_sequence(pieces, max_len);
        AlignedBio aligned = align_bio(labels, ex.tok);
        ex.labels = std::move(aligned.labels);
        ex.score_mask = std::move(aligned.score_mask);
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<AscExample> make_asc_examples(const std::vector<RawSentence>& sentences, const Vocab& vocab,
                                          std::size_t max_len, bool lowercase) {
    std::vector<AscExample> out;
    for (const RawSentence& sentence : sentences) {
        WordPieces sent_pieces;
        bool tokenized = false;
        for (const AspectSpan& span : sentence.aspects) {
            int label;
            switch (span.polarity) {
                case Polarity::Positive: label = kPolarityPositive; break;
                case Polarity::Negative: label = kPolarityNegative; break;
                case Polarity::Neutral: label = kPolarityNeutral; break;
                default: continue;  // conflict and unspecified are dropped
            }
            if (!tokenized) {
                sent_pieces = tokenize(sentence.text, vocab, lowercase);
                tokenized = true;
            }
            WordPieces aspect_pieces = tokenize(span.term, vocab, lowercase);
            if (sent_pieces.ids.empty() || aspect_pieces.ids.empty()) {
                throw DataError("sentence '" + sentence.id + "' produced an empty encoding");
            }
            AscExample ex;
            ex.sentence_id = sentence.id;
            ex.term = span.term;
            ex.label = label;
            ex.tok = encode_pair(sent_pieces, aspect_pieces, max_len);
            out.push_back(std::move(ex));
        }
    }
    return out;
}

namespace {

json tok_to_json(const TokenizedExample& tok) {
    return json{{"ids", tok.ids},
                {"segments", tok.segments},
                {"mask", tok.attention_mask},
                {"word_start", tok.word_start},
                {"special", tok.special}};
}

TokenizedExample tok_from_json(const json& j, const std::string& path, std::size_t line_no) {
    TokenizedExample tok;
    try {
        tok.ids = j.at("ids").get<std::vector<int>>();
        tok.segments = j.at("segments").get<std::vector<int>>();
        tok.attention_mask = j.at("mask").get<std::vector<std::uint8_t>>();
        tok.word_start = j.at("word_start").get<std::vector<std::uint8_t>>();
        tok.special = j.at("special").get<std::vector<std::uint8_t>>();
    } catch (const json::exception& e) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
    }
    std::size_t n = tok.ids.size();
    if (tok.segments.size() != n || tok.attention_mask.size() != n || tok.word_start.size() != n ||
        tok.special.size() != n) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": field lengths disagree");
    }
    tok.positions.resize(n);
    for (std::size_t i = 0; i < n; ++i) tok.positions[i] = static_cast<int>(i);
    tok.real_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (tok.attention_mask[i]) tok.real_len = i + 1;
    }
    return tok;
}

std::vector<json> read_record_lines(const std::string& path, const char* expected_kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open record file: " + path);
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (j.value("kind", "") != expected_kind) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected kind '" +
                             expected_kind + "'");
        }
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

void write_ae_records(const std::string& path, const std::vector<AeExample>& examples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open record file for writing: " + path);
    for (const auto& ex : examples) {
        json j = tok_to_json(ex.tok);
        j["kind"] = "ae";
        j["id"] = ex.sentence_id;
        j["labels"] = ex.labels;
        j["score_mask"] = ex.score_mask;
        os << j.dump() << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<AeExample> read_ae_records(const std::string& path) {
    std::vector<AeExample> out;
    std::size_t line_no = 0;
    for (const json& j : read_record_lines(path, "ae")) {
        ++line_no;
        AeExample ex;
        ex.tok = tok_from_json(j, path, line_no);
        ex.sentence_id = j.value("id", "");
        try {
            ex.labels = j.at("labels").get<std::vector<int>>();
            ex.score_mask = j.at("score_mask").get<std::vector<std::uint8_t>>();
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
        }
        if (ex.labels.size() != ex.tok.ids.size() || ex.score_mask.size() != ex.tok.ids.size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": label lengths disagree");
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void write_asc_records(const std::string& path, const std::vector<AscExample>& examples) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open record file for writing: " + path);
    for (const auto& ex : examples) {
        json j = tok_to_json(ex.tok);
        j["kind"] = "asc";
        j["id"] = ex.sentence_id;
        j["term"] = ex.term;
        j["label"] = ex.label;
        os << j.dump() << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

std::vector<AscExample> read_asc_records(const std::string& path) {
    std::vector<AscExample> out;
    std::size_t line_no = 0;
    for (const json& j : read_record_lines(path, "asc")) {
        ++line_no;
        AscExample ex;
        ex.tok = tok_from_json(j, path, line_no);
        ex.sentence_id = j.value("id", "");
        ex.term = j.value("term", "");
        int label = j.value("label", -1);
        if (label < 0 || label >= kNumClasses) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": label out of range");
        }
        ex.label = label;
        out.push_back(std::move(ex));
    }
    return out;
}

std::string record_file_kind(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open record file: " + path);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            return json::parse(line).value("kind", "");
        } catch (const json::exception& e) {
            throw ParseError(path + ":1: " + e.what());
        }
    }
    throw ParseError(path + ": empty record file");
}

namespace {

const std::vector<std::string> kFillers = {"the", "we", "it",  "was", "is",    "very", "and",
                                           "had", "so", "but", "a",   "really", "this", "there"};
const std::vector<std::string> kSingleAspects = {"screen",  "battery", "keyboard", "pizza",
                                                 "service", "wine",    "menu",     "sushi"};
const std::vector<std::string> kPairAspects = {"hard disk", "battery life", "wine list",
                                               "operating system"};
// Index matches the polarity class it teaches.
const std::vector<std::string> kSentimentWords = {"good", "awful", "plain"};

}  // namespace

std::vector<RawSentence> synthetic_sentences(std::size_t count, Rng rng) {
    std::vector<RawSentence> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        RawSentence sentence;
        sentence.id = "syn-" + std::to_string(n);

        std::string text;
        auto append_word = [&](const std::string& w) {
            if (!text.empty()) text += ' ';
            text += w;
        };

        std::size_t lead = 1 + rng.next_below(3);
        for (std::size_t i = 0; i < lead; ++i) append_word(kFillers[rng.next_below(kFillers.size())]);

        int polarity_class = static_cast<int>(rng.next_below(3));
        append_word(kSentimentWords[static_cast<std::size_t>(polarity_class)]);

        bool two_words = rng.next_uniform() < 0.25;
        std::string term = two_words ? kPairAspects[rng.next_below(kPairAspects.size())]
                                     : kSingleAspects[rng.next_below(kSingleAspects.size())];
        std::size_t term_from = text.empty() ? 0 : text.size() + 1;
        append_word(term);
        std::size_t term_to = text.size();

        std::size_t tail = 1 + rng.next_below(3);
        for (std::size_t i = 0; i < tail; ++i) append_word(kFillers[rng.next_below(kFillers.size())]);

        AspectSpan span;
        span.term = term;
        span.char_from = term_from;  // ASCII text: code points == bytes
        span.char_to = term_to;
        span.polarity = polarity_class == kPolarityPositive   ? Polarity::Positive
                        : polarity_class == kPolarityNegative ? Polarity::Negative
                                                              : Polarity::Neutral;
        sentence.text = std::move(text);
        sentence.aspects.push_back(std::move(span));
        out.push_back(std::move(sentence));
    }
    return out;
}

std::vector<std::string> sentence_texts(const std::vector<RawSentence>& sentences) {
    std::vector<std::string> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(s.text);
    return out;
}

}  // namespace absa
