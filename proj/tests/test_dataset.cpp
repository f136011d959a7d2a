#include <doctest.h>

#include <filesystem>
#include <set>

#include "absa/dataset.hpp"
#include "absa/semeval.hpp"
#include "test_support.hpp"

using namespace absa;

namespace {

std::string fixture(const std::string& name) { return absa::test::fixture_dir() + "/" + name; }

Vocab fixture_vocab(const std::vector<RawSentence>& sentences) {
    return build_vocab(sentence_texts(sentences), 160);
}

}  // namespace

TEST_CASE("2014 parser: counts, offsets, ordering") {
    ParseStats stats;
    auto sentences = parse_semeval2014_file(fixture("laptop_2014_mini.xml"), &stats);
    REQUIRE(sentences.size() == 3);
    CHECK(stats.sentences == 3);
    CHECK(stats.aspects == 2);
    CHECK(sentences[0].id == "11");
    CHECK(sentences[1].aspects.empty());
    CHECK(sentences[0].aspects[0].term == "battery life");
    CHECK(sentences[2].aspects[0].polarity == Polarity::Negative);

    // Parsing twice gives identical results (order-preserving, deterministic).
    auto again = parse_semeval2014_file(fixture("laptop_2014_mini.xml"));
    REQUIRE(again.size() == sentences.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].id == sentences[i].id);
        CHECK(again[i].text == sentences[i].text);
        CHECK(again[i].aspects.size() == sentences[i].aspects.size());
    }
}

TEST_CASE("2014 parser: malformed XML and bad spans are loud") {
    CHECK_THROWS_AS(parse_semeval2014("<sentences><sentence></sentences>"), ParseError);

    // Offset slice disagrees with the term: a data error naming the sentence.
    const char* bad =
        "<sentences><sentence id=\"s9\"><text>nice screen</text><aspectTerms>"
        "<aspectTerm term=\"screen\" polarity=\"positive\" from=\"0\" to=\"6\"/>"
        "</aspectTerms></sentence></sentences>";
    try {
        parse_semeval2014(bad);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("s9") != std::string::npos);
    }

    const char* out_of_bounds =
        "<sentences><sentence id=\"s10\"><text>hi</text><aspectTerms>"
        "<aspectTerm term=\"hi\" polarity=\"neutral\" from=\"1\" to=\"9\"/>"
        "</aspectTerms></sentence></sentences>";
    CHECK_THROWS_AS(parse_semeval2014(out_of_bounds), DataError);

    const char* bad_polarity =
        "<sentences><sentence id=\"s11\"><text>hi</text><aspectTerms>"
        "<aspectTerm term=\"hi\" polarity=\"upbeat\" from=\"0\" to=\"2\"/>"
        "</aspectTerms></sentence></sentences>";
    CHECK_THROWS_AS(parse_semeval2014(bad_polarity), DataError);
}

TEST_CASE("2016 parser: NULL targets skipped, duplicates rejected, UTF-8 offsets") {
    ParseStats stats;
    auto sentences = parse_semeval2016_file(fixture("rest_2016_mini.xml"), &stats);
    REQUIRE(sentences.size() == 4);
    CHECK(stats.null_targets == 1);
    CHECK(stats.dropped_overlaps == 1);
    CHECK(stats.aspects == 2);

    CHECK(sentences[0].aspects.empty());  // only a NULL target
    REQUIRE(sentences[1].aspects.size() == 1);
    CHECK(sentences[1].aspects[0].term == "crème brûlée");
    REQUIRE(sentences[2].aspects.size() == 1);  // duplicate span kept once
    CHECK(sentences[2].text == "Service was quick & friendly.");
}

TEST_CASE("word-level BIO from character spans") {
    RawSentence s;
    s.id = "demo";
    s.text = "The spaghetti was great";
    s.aspects.push_back({"spaghetti", 4, 13, Polarity::Positive});
    auto words = segment_words(s.text);
    CHECK(word_bio_labels(s, words) ==
          std::vector<int>{kBioOutside, kBioBegin, kBioOutside, kBioOutside});

    RawSentence two;
    two.id = "demo2";
    two.text = "the hard disk died";
    two.aspects.push_back({"hard disk", 4, 13, Polarity::Negative});
    auto words2 = segment_words(two.text);
    CHECK(word_bio_labels(two, words2) ==
          std::vector<int>{kBioOutside, kBioBegin, kBioInside, kBioOutside});

    RawSentence none;
    none.id = "demo3";
    none.text = "went there twice";
    CHECK(word_bio_labels(none, segment_words(none.text)) ==
          std::vector<int>{kBioOutside, kBioOutside, kBioOutside});
}

TEST_CASE("make_ae_examples aligns labels and guards truncation") {
    auto sentences = parse_semeval2014_file(fixture("laptop_2014_mini.xml"));
    Vocab vocab = fixture_vocab(sentences);

    auto examples = make_ae_examples(sentences, vocab, 32);
    REQUIRE(examples.size() == 3);

    // Every B/I word-level label maps back to a span that reproduces the
    // aspect term (round-trip on untruncated examples).
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        auto words = segment_words(sentences[i].text);
        auto labels = word_bio_labels(sentences[i], words);
        for (const AspectSpan& span : sentences[i].aspects) {
            std::size_t first = words.size(), last = 0;
            for (std::size_t w = 0; w < words.size(); ++w) {
                bool overlap = words[w].cp_from < span.char_to && span.char_from < words[w].cp_to;
                if (!overlap) continue;
                first = std::min(first, w);
                last = std::max(last, w);
            }
            REQUIRE(first < words.size());
            CHECK(labels[first] == kBioBegin);
            CHECK(utf8_substr(sentences[i].text, words[first].cp_from, words[last].cp_to) ==
                  span.term);
        }
    }

    // Gold span truncated away: loud failure naming the sentence.
    CHECK_THROWS_AS(make_ae_examples({sentences[0]}, vocab, 3), DataError);

    // Trailing O words may silently truncate.
    auto shortened = make_ae_examples({sentences[0]}, vocab, 8);
    CHECK(shortened[0].tok.real_len == 8);
}

TEST_CASE("make_asc_examples duplicates per aspect and drops conflict") {
    ParseStats stats;
    auto sentences = parse_semeval2014_file(fixture("asc_2014_mini.xml"), &stats);
    Vocab vocab = fixture_vocab(sentences);

    CHECK(stats.polarity_counts[static_cast<std::size_t>(Polarity::Positive)] == 2);
    CHECK(stats.polarity_counts[static_cast<std::size_t>(Polarity::Negative)] == 1);
    CHECK(stats.polarity_counts[static_cast<std::size_t>(Polarity::Neutral)] == 1);
    CHECK(stats.polarity_counts[static_cast<std::size_t>(Polarity::Conflict)] == 1);

    auto examples = make_asc_examples(sentences, vocab, 48);
    REQUIRE(examples.size() == 4);  // 2 pos + 1 neg + 1 neu; conflict dropped
    CHECK(examples[0].term == "pizza");
    CHECK(examples[0].label == kPolarityPositive);
    CHECK(examples[2].label == kPolarityNegative);
    CHECK(examples[3].label == kPolarityNeutral);

    // A sentence with only a conflict aspect produces nothing.
    auto conflict_only = make_asc_examples({sentences[2]}, vocab, 48);
    CHECK(conflict_only.empty());
}

TEST_CASE("ASC example count equals eligible aspect count on random corpora") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        auto sentences = synthetic_sentences(20, rng.stream("case", trial));
        Vocab vocab = build_vocab(sentence_texts(sentences), 200);
        std::size_t eligible = 0;
        for (const auto& s : sentences) {
            for (const auto& a : s.aspects) {
                if (a.polarity == Polarity::Positive || a.polarity == Polarity::Negative ||
                    a.polarity == Polarity::Neutral) {
                    ++eligible;
                }
            }
        }
        CHECK(make_asc_examples(sentences, vocab, 64).size() == eligible);
    }
}

TEST_CASE("split keeps the last 150 in file order for validation") {
    auto make = [](std::size_t n) {
        std::vector<AscExample> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i].sentence_id = std::to_string(i);
        return v;
    };

    auto [train, val] = split_train_validation(make(500));
    CHECK(train.size() == 350);
    CHECK(val.size() == 150);
    CHECK(train.front().sentence_id == "0");
    CHECK(train.back().sentence_id == "349");
    CHECK(val.front().sentence_id == "350");
    CHECK(val.back().sentence_id == "499");

    auto [t1, v1] = split_train_validation(make(151));
    CHECK(t1.size() == 1);
    CHECK(v1.size() == 150);

    CHECK_THROWS_AS(split_train_validation(make(150)), DataError);
}

TEST_CASE("record files round-trip through JSON lines") {
    auto dir = std::filesystem::temp_directory_path();
    auto sentences = parse_semeval2014_file(fixture("asc_2014_mini.xml"));
    Vocab vocab = fixture_vocab(sentences);

    std::string ae_path = (dir / "absa_ae_records.jsonl").string();
    auto ae = make_ae_examples(sentences, vocab, 24);
    write_ae_records(ae_path, ae);
    CHECK(record_file_kind(ae_path) == "ae");
    auto ae_back = read_ae_records(ae_path);
    REQUIRE(ae_back.size() == ae.size());
    for (std::size_t i = 0; i < ae.size(); ++i) {
        CHECK(ae_back[i].tok.ids == ae[i].tok.ids);
        CHECK(ae_back[i].tok.attention_mask == ae[i].tok.attention_mask);
        CHECK(ae_back[i].labels == ae[i].labels);
        CHECK(ae_back[i].score_mask == ae[i].score_mask);
        CHECK(ae_back[i].tok.real_len == ae[i].tok.real_len);
    }

    std::string asc_path = (dir / "absa_asc_records.jsonl").string();
    auto asc = make_asc_examples(sentences, vocab, 24);
    write_asc_records(asc_path, asc);
    CHECK(record_file_kind(asc_path) == "asc");
    auto asc_back = read_asc_records(asc_path);
    REQUIRE(asc_back.size() == asc.size());
    for (std::size_t i = 0; i < asc.size(); ++i) {
        CHECK(asc_back[i].tok.ids == asc[i].tok.ids);
        CHECK(asc_back[i].tok.segments == asc[i].tok.segments);
        CHECK(asc_back[i].label == asc[i].label);
        CHECK(asc_back[i].term == asc[i].term);
    }

    CHECK_THROWS_AS(read_ae_records(asc_path), ParseError);  // wrong kind
    std::filesystem::remove(ae_path);
    std::filesystem::remove(asc_path);
}

TEST_CASE("synthetic sentences satisfy parser invariants") {
    Rng rng(5);
    auto sentences = synthetic_sentences(32, rng);
    CHECK(sentences.size() == 32);
    std::set<std::string> ids;
    for (const auto& s : sentences) {
        ids.insert(s.id);
        for (const auto& a : s.aspects) {
            CHECK(utf8_substr(s.text, a.char_from, a.char_to) == a.term);
        }
        REQUIRE(s.aspects.size() == 1);
    }
    CHECK(ids.size() == 32);

    // Determinism: the same seed reproduces the same corpus.
    auto again = synthetic_sentences(32, Rng(5));
    for (std::size_t i = 0; i < sentences.size(); ++i) CHECK(again[i].text == sentences[i].text);
}
