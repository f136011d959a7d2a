#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "absa/task.hpp"

namespace absa {

// Inclusive word-index spans of one sentence. std::set both orders output and
// deduplicates repeated predictions before counting.
using SpanSet = std::set<std::pair<int, int>>;

// Maximal B..I runs become spans; an I with no live span opens one (lenient
// decoding), a B always starts a fresh span.
SpanSet decode_bio(const std::vector<int>& labels);

// Canonical BIO sequence for a span set over `length` words.
std::vector<int> encode_bio(const SpanSet& spans, std::size_t length);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Micro-averaged exact-match span scores over aligned sentence lists. A
// predicted span counts only when both endpoints match a gold span. With no
// spans on either side the scores are defined as 1.
PrecisionRecallF1 span_f1(const std::vector<SpanSet>& predicted, const std::vector<SpanSet>& gold);

// Fraction of exactly equal labels; empty input is a usage error.
double accuracy(const std::vector<int>& predicted, const std::vector<int>& gold);

// Unweighted mean of per-class F1. Classes absent from both gold and
// predictions are excluded from the mean.
double macro_f1(const std::vector<int>& predicted, const std::vector<int>& gold,
                int num_classes = kNumClasses);

struct ClassScore {
    PrecisionRecallF1 prf;
    std::size_t support = 0;  // gold occurrences
};

// Per-class tabulation backing macro_f1 (exposed for reports).
std::vector<ClassScore> per_class_scores(const std::vector<int>& predicted,
                                         const std::vector<int>& gold, int num_classes = kNumClasses);

// One evaluation result. Serializes to a stable CSV row (see kCsvHeader) and
// a human-readable block.
struct MetricsReport {
    Task task = Task::AspectExtraction;
    std::string split;

    // AE: micro span scores. ASC: accuracy + macro-F1 with per-class detail.
    PrecisionRecallF1 span;
    double acc = 0.0;
    double mf1 = 0.0;
    std::vector<ClassScore> per_class;

    std::size_t support = 0;  // examples (ASC) or gold spans (AE)
    std::uint64_t seed = 0;
    std::string config_fingerprint;

    // Primary model-selection metric: span F1 for AE, accuracy for ASC.
    double primary() const { return task == Task::AspectExtraction ? span.f1 : acc; }

    static const char* csv_header();
    std::string to_csv_row() const;
    std::string to_text() const;
};

}  // namespace absa
