#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace absa {

enum class Polarity { Positive, Negative, Neutral, Conflict, Unspecified };

std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s, const std::string& sentence_id);

// An aspect term with its code-point span in the sentence text.
struct AspectSpan {
    std::string term;
    std::size_t char_from = 0;
    std::size_t char_to = 0;
    Polarity polarity = Polarity::Unspecified;
};

struct RawSentence {
    std::string id;
    std::string text;
    std::vector<AspectSpan> aspects;
};

struct ParseStats {
    std::size_t sentences = 0;
    std::size_t aspects = 0;           // spans kept
    std::size_t dropped_overlaps = 0;  // overlapping or duplicate spans rejected
    std::size_t null_targets = 0;      // 2016 opinions with target "NULL"
    // Histogram over kept aspects, indexed by Polarity.
    std::array<std::size_t, 5> polarity_counts{};
};

// SemEval-2014 task-4 layout: sentences/sentence/text + aspectTerms/aspectTerm
// with term, polarity, from, to. Every sentence is returned, aspectless ones
// included; spans are validated against the text and overlapping spans are
// rejected (first kept).
std::vector<RawSentence> parse_semeval2014(const std::string& xml, ParseStats* stats = nullptr);

// SemEval-2016 task-5 layout: Reviews/Review/sentences/sentence with
// Opinions/Opinion carrying target, polarity, from, to. Opinions whose target
// is "NULL" are skipped; the rest behaves like the 2014 parser.
std::vector<RawSentence> parse_semeval2016(const std::string& xml, ParseStats* stats = nullptr);

std::vector<RawSentence> parse_semeval2014_file(const std::string& path, ParseStats* stats = nullptr);
std::vector<RawSentence> parse_semeval2016_file(const std::string& path, ParseStats* stats = nullptr);

std::string read_text_file(const std::string& path);

}  // namespace absa
