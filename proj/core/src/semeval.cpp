#include "absa/semeval.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fstream>
#include <sstream>

#include "absa/error.hpp"
#include "absa/text.hpp"

namespace absa {

namespace pt = boost::property_tree;

std::string to_string(Polarity p) {
    switch (p) {
        case Polarity::Positive: return "positive";
        case Polarity::Negative: return "negative";
        case Polarity::Neutral: return "neutral";
        case Polarity::Conflict: return "conflict";
        case Polarity::Unspecified: return "unspecified";
    }
    return "unspecified";
}

Polarity polarity_from_string(const std::string& s, const std::string& sentence_id) {
    if (s == "positive") return Polarity::Positive;
    if (s == "negative") return Polarity::Negative;
    if (s == "neutral") return Polarity::Neutral;
    if (s == "conflict") return Polarity::Conflict;
    if (s.empty()) return Polarity::Unspecified;
    throw DataError("sentence '" + sentence_id + "': unknown polarity '" + s + "'");
}

namespace {

pt::ptree parse_xml(const std::string& xml) {
    pt::ptree tree;
    std::istringstream is(xml);
    try {
        pt::read_xml(is, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("XML parse error at line " + std::to_string(e.line()) + ": " + e.message());
    }
    return tree;
}

std::string attr(const pt::ptree& node, const char* name, const std::string& sentence_id) {
    auto value = node.get_optional<std::string>(std::string("<xmlattr>.") + name);
    if (!value) {
        throw DataError("sentence '" + sentence_id + "': missing attribute '" + name + "'");
    }
    return *value;
}

std::size_t attr_offset(const pt::ptree& node, const char* name, const std::string& sentence_id) {
    std::string raw = attr(node, name, sentence_id);
    try {
        return static_cast<std::size_t>(std::stoull(raw));
    } catch (const std::exception&) {
        throw DataError("sentence '" + sentence_id + "': bad offset '" + raw + "'");
    }
}

bool overlaps(const AspectSpan& a, const AspectSpan& b) {
    return a.char_from < b.char_to && b.char_from < a.char_to;
}

// Validates one span against the sentence and appends it unless it overlaps
// a span that is already kept.
void add_span(RawSentence& sentence, AspectSpan span, ParseStats& stats) {
    std::size_t text_len = utf8_length(sentence.text);
    if (span.char_from >= span.char_to || span.char_to > text_len) {
        throw DataError("sentence '" + sentence.id + "': span [" + std::to_string(span.char_from) +
                        "," + std::to_string(span.char_to) + ") out of bounds for length " +
                        std::to_string(text_len));
    }
    std::string sliced = utf8_substr(sentence.text, span.char_from, span.char_to);
    if (sliced != span.term) {
        throw DataError("sentence '" + sentence.id + "': text at [" + std::to_string(span.char_from) +
                        "," + std::to_string(span.char_to) + ") is '" + sliced +
                        "' but the aspect term is '" + span.term + "'");
    }
    for (const AspectSpan& kept : sentence.aspects) {
        if (overlaps(kept, span)) {
            ++stats.dropped_overlaps;
            return;
        }
    }
    ++stats.aspects;
    ++stats.polarity_counts[static_cast<std::size_t>(span.polarity)];
    sentence.aspects.push_back(std::move(span));
}

void parse_sentence_2014(const pt::ptree& node, std::vector<RawSentence>& out, ParseStats& stats) {
    RawSentence sentence;
    sentence.id = node.get<std::string>("<xmlattr>.id", "");
    auto text = node.get_optional<std::string>("text");
    if (!text) throw DataError("sentence '" + sentence.id + "': missing <text>");
    sentence.text = *text;

    if (auto terms = node.get_child_optional("aspectTerms")) {
        for (const auto& [key, term_node] : *terms) {
            if (key != "aspectTerm") continue;
            AspectSpan span;
            span.term = attr(term_node, "term", sentence.id);
            span.polarity = polarity_from_string(
                term_node.get<std::string>("<xmlattr>.polarity", ""), sentence.id);
            span.char_from = attr_offset(term_node, "from", sentence.id);
            span.char_to = attr_offset(term_node, "to", sentence.id);
            add_span(sentence, std::move(span), stats);
        }
    }
    ++stats.sentences;
    out.push_back(std::move(sentence));
}

void parse_sentence_2016(const pt::ptree& node, std::vector<RawSentence>& out, ParseStats& stats) {
    RawSentence sentence;
    sentence.id = node.get<std::string>("<xmlattr>.id", "");
    auto text = node.get_optional<std::string>("text");
    if (!text) throw DataError("sentence '" + sentence.id + "': missing <text>");
    sentence.text = *text;

    if (auto opinions = node.get_child_optional("Opinions")) {
        for (const auto& [key, opinion] : *opinions) {
            if (key != "Opinion") continue;
            std::string target = attr(opinion, "target", sentence.id);
            if (target == "NULL") {
                ++stats.null_targets;
                continue;
            }
            AspectSpan span;
            span.term = std::move(target);
            span.polarity = polarity_from_string(
                opinion.get<std::string>("<xmlattr>.polarity", ""), sentence.id);
            span.char_from = attr_offset(opinion, "from", sentence.id);
            span.char_to = attr_offset(opinion, "to", sentence.id);
            add_span(sentence, std::move(span), stats);
        }
    }
    ++stats.sentences;
    out.push_back(std::move(sentence));
}

}  // namespace

std::vector<RawSentence> parse_semeval2014(const std::string& xml, ParseStats* stats) {
    pt::ptree tree = parse_xml(xml);
    auto sentences = tree.get_child_optional("sentences");
    if (!sentences) throw DataError("2014 document has no <sentences> root");

    ParseStats local;
    std::vector<RawSentence> out;
    for (const auto& [key, node] : *sentences) {
        if (key == "sentence") parse_sentence_2014(node, out, local);
    }
    if (stats) *stats = local;
    return out;
}

std::vector<RawSentence> parse_semeval2016(const std::string& xml, ParseStats* stats) {
    pt::ptree tree = parse_xml(xml);
    auto reviews = tree.get_child_optional("Reviews");
    if (!reviews) throw DataError("2016 document has no <Reviews> root");

    ParseStats local;
    std::vector<RawSentence> out;
    for (const auto& [review_key, review] : *reviews) {
        if (review_key != "Review") continue;
        auto sentences = review.get_child_optional("sentences");
        if (!sentences) continue;
        for (const auto& [key, node] : *sentences) {
            if (key == "sentence") parse_sentence_2016(node, out, local);
        }
    }
    if (stats) *stats = local;
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<RawSentence> parse_semeval2014_file(const std::string& path, ParseStats* stats) {
    return parse_semeval2014(read_text_file(path), stats);
}

std::vector<RawSentence> parse_semeval2016_file(const std::string& path, ParseStats* stats) {
    return parse_semeval2016(read_text_file(path), stats);
}

}  // namespace absa
