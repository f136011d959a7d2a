#include "absa/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "absa/error.hpp"

namespace absa {

SpanSet decode_bio(const std::vector<int>& labels) {
    SpanSet spans;
    int start = -1;
    auto close = [&](int end) {
        if (start >= 0) spans.emplace(start, end);
        start = -1;
    };
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int pos = static_cast<int>(i);
        switch (labels[i]) {
            case kBioBegin:
                close(pos - 1);
                start = pos;
                break;
            case kBioInside:
                if (start < 0) start = pos;  // orphan I opens a span
                break;
            case kBioOutside:
                close(pos - 1);
                break;
            default:
                throw IndexError("decode_bio: label " + std::to_string(labels[i]) + " out of range");
        }
    }
    close(static_cast<int>(labels.size()) - 1);
    return spans;
}

std::vector<int> encode_bio(const SpanSet& spans, std::size_t length) {
    std::vector<int> labels(length, kBioOutside);
    for (const auto& [from, to] : spans) {
        if (from < 0 || to < from || static_cast<std::size_t>(to) >= length) {
            throw UsageError("encode_bio: span out of range");
        }
        labels[static_cast<std::size_t>(from)] = kBioBegin;
        for (int i = from + 1; i <= to; ++i) labels[static_cast<std::size_t>(i)] = kBioInside;
    }
    return labels;
}

namespace {

PrecisionRecallF1 from_counts(std::size_t tp, std::size_t pred_total, std::size_t gold_total) {
    if (pred_total == 0 && gold_total == 0) return {1.0, 1.0, 1.0};
    PrecisionRecallF1 out;
    out.precision = pred_total ? static_cast<double>(tp) / static_cast<double>(pred_total) : 0.0;
    out.recall = gold_total ? static_cast<double>(tp) / static_cast<double>(gold_total) : 0.0;
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

}  // namespace

PrecisionRecallF1 span_f1(const std::vector<SpanSet>& predicted, const std::vector<SpanSet>& gold) {
    if (predicted.size() != gold.size()) {
        throw UsageError("span_f1: " + std::to_string(predicted.size()) + " predictions vs " +
                         std::to_string(gold.size()) + " gold sentences");
    }
    std::size_t tp = 0, pred_total = 0, gold_total = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        pred_total += predicted[i].size();
        gold_total += gold[i].size();
        for (const auto& span : predicted[i]) tp += gold[i].count(span);
    }
    return from_counts(tp, pred_total, gold_total);
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& gold) {
    if (predicted.empty()) throw UsageError("accuracy: empty input");
    if (predicted.size() != gold.size()) throw UsageError("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] == gold[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<ClassScore> per_class_scores(const std::vector<int>& predicted,
                                         const std::vector<int>& gold, int num_classes) {
    if (predicted.empty()) throw UsageError("per_class_scores: empty input");
    if (predicted.size() != gold.size()) throw UsageError("per_class_scores: length mismatch");

    std::vector<ClassScore> out(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        std::size_t tp = 0, pred_total = 0, gold_total = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            if (predicted[i] < 0 || predicted[i] >= num_classes || gold[i] < 0 ||
                gold[i] >= num_classes) {
                throw IndexError("label out of class range at row " + std::to_string(i));
            }
            bool p = predicted[i] == c, g = gold[i] == c;
            pred_total += p;
            gold_total += g;
            tp += p && g;
        }
        out[static_cast<std::size_t>(c)].support = gold_total;
        if (pred_total == 0 && gold_total == 0) {
            out[static_cast<std::size_t>(c)].prf = {0.0, 0.0, 0.0};  // excluded from the mean
        } else {
            out[static_cast<std::size_t>(c)].prf = from_counts(tp, pred_total, gold_total);
        }
    }
    return out;
}

double macro_f1(const std::vector<int>& predicted, const std::vector<int>& gold, int num_classes) {
    auto scores = per_class_scores(predicted, gold, num_classes);
    double sum = 0.0;
    std::size_t included = 0;
    for (int c = 0; c < num_classes; ++c) {
        bool present_gold = scores[static_cast<std::size_t>(c)].support > 0;
        bool present_pred = false;
        for (int p : predicted) {
            if (p == c) {
                present_pred = true;
                break;
            }
        }
        if (!present_gold && !present_pred) continue;  // absent from both sides
        sum += scores[static_cast<std::size_t>(c)].prf.f1;
        ++included;
    }
    return included ? sum / static_cast<double>(included) : 0.0;
}

const char* MetricsReport::csv_header() {
    return "task,split,precision,recall,f1,acc,mf1,support,seed,config";
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os << to_string(task) << ',' << split << ',' << fmt(span.precision) << ',' << fmt(span.recall)
       << ',' << fmt(span.f1) << ',' << fmt(acc) << ',' << fmt(mf1) << ',' << support << ',' << seed
       << ',' << config_fingerprint;
    return os.str();
}

std::string MetricsReport::to_text() const {
    std::ostringstream os;
    os << "== " << (task == Task::AspectExtraction ? "aspect extraction" : "sentiment classification")
       << " [" << split << "] ==\n";
    if (task == Task::AspectExtraction) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "span P %.4f  R %.4f  F1 %.4f  (gold spans: %zu)\n",
                      span.precision, span.recall, span.f1, support);
        os << buf;
    } else {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "accuracy %.4f  macro-F1 %.4f  (examples: %zu)\n", acc, mf1,
                      support);
        os << buf;
        static const char* names[] = {"positive", "negative", "neutral"};
        for (std::size_t c = 0; c < per_class.size() && c < 3; ++c) {
            std::snprintf(buf, sizeof(buf), "  %-8s P %.4f  R %.4f  F1 %.4f  support %zu\n", names[c],
                          per_class[c].prf.precision, per_class[c].prf.recall, per_class[c].prf.f1,
                          per_class[c].support);
            os << buf;
        }
    }
    os << "seed " << seed << "  config " << config_fingerprint << "\n";
    return os.str();
}

}  // namespace absa
