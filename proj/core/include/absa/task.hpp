#pragma once

#include <string>

#include "absa/error.hpp"

namespace absa {

// The two ABSA sub-tasks: token-level span labeling and [CLS]-level
// sentiment classification.
enum class Task { AspectExtraction, SentimentClassification };

// BIO tags for aspect extraction. Values are the class indices fed to the
// 3-way token head.
inline constexpr int kBioOutside = 0;
inline constexpr int kBioBegin = 1;
inline constexpr int kBioInside = 2;

// Sentiment polarity class indices for ASC (3-way [CLS] head).
inline constexpr int kPolarityPositive = 0;
inline constexpr int kPolarityNegative = 1;
inline constexpr int kPolarityNeutral = 2;

inline constexpr int kNumClasses = 3;

inline std::string to_string(Task task) {
    return task == Task::AspectExtraction ? "ae" : "asc";
}

inline Task task_from_string(const std::string& s) {
    if (s == "ae") return Task::AspectExtraction;
    if (s == "asc") return Task::SentimentClassification;
    throw ConfigError("unknown task '" + s + "' (expected 'ae' or 'asc')");
}

inline char bio_to_char(int label) {
    switch (label) {
        case kBioOutside: return 'O';
        case kBioBegin: return 'B';
        case kBioInside: return 'I';
        default: throw IndexError("BIO label out of range: " + std::to_string(label));
    }
}

inline int bio_from_char(char c) {
    switch (c) {
        case 'O': return kBioOutside;
        case 'B': return kBioBegin;
        case 'I': return kBioInside;
        default: throw DataError(std::string("unknown BIO tag '") + c + "'");
    }
}

}  // namespace absa
