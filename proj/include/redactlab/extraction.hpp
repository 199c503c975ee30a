// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <cstddef>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace redactlab::extraction {

class ExtractionError : public std::runtime_error {
public:
    explicit ExtractionError(const std::string& what) : std::runtime_error(what) {}
};

/// No occurrence of the requested label pattern.
class ParseMiss : public ExtractionError {
public:
    explicit ParseMiss(const std::string& label)
        : ExtractionError("no rating found for label \"" + label + "\""), label_(label) {}
    const std::string& label() const { return label_; }

private:
    std::string label_;
};

/// A rating was found but is not an integer in 1..9.
class RangeError : public ExtractionError {
public:
    RangeError(const std::string& label, const std::string& found)
        : ExtractionError("rating for \"" + label + "\" out of range 1..9: " + found),
          found_(found) {}
    const std::string& found() const { return found_; }

private:
    std::string found_;
};

/// The same label appears more than once with different values.
class AmbiguityError : public ExtractionError {
public:
    AmbiguityError(const std::string& label, std::vector<int> values)
        : ExtractionError(describe(label, values)), values_(std::move(values)) {}
    const std::vector<int>& values() const { return values_; }

private:
    static std::string describe(const std::string& label, const std::vector<int>& vs) {
        std::string s = "conflicting ratings for \"" + label + "\":";
        for (int v : vs) s += " " + std::to_string(v);
        return s;
    }
    std::vector<int> values_;
};

/// Half-open [begin, end) character offsets into the raw model output.
struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const SourceSpan&) const = default;
    bool overlaps(const SourceSpan& o) const { return begin < o.end && o.begin < end; }
};

struct RedactionRating {
    int value = 0;  // 1..9
    SourceSpan source_span;
};

struct AlignmentScores {
    int empirical = 0;    // 1..9
    int theoretical = 0;  // 1..9
    SourceSpan empirical_span;
    SourceSpan theoretical_span;
};

inline constexpr const char* kSingleLabel = "Quantitative Rating";
inline constexpr const char* kEmpiricalLabel = "Quantitative Rating, Empirical Alignment";
inline constexpr const char* kTheoreticalLabel = "Quantitative Rating, Theoretical Alignment";

namespace detail {

struct LabelMatch {
    std::string number;  // digits, possibly with a fractional part
    SourceSpan span;     // whole label..value region
};

// Tolerated drift around the mandated format: case-insensitive label,
// markdown emphasis around it, ':' or '-' separators, optional brackets
// around the value. The value itself must be a bare number; fractional
// values are surfaced as RangeError, not truncated.
inline std::regex label_regex(const std::string& label_pattern) {
    return std::regex("[*_#`]*" + label_pattern + R"([*_#`]*\s*[:\-]\s*\[?\s*(\d+(?:\.\d+)?)\s*\]?)",
                      std::regex::icase);
}

inline std::vector<LabelMatch> find_all(const std::string& text,
                                        const std::string& label_pattern) {
    std::vector<LabelMatch> out;
    std::regex re = label_regex(label_pattern);
    auto begin = std::sregex_iterator(text.begin(), text.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        out.push_back({m.str(1),
                       {static_cast<std::size_t>(m.position(0)),
                        static_cast<std::size_t>(m.position(0) + m.length(0))}});
    }
    return out;
}

inline int value_in_range(const std::string& label, const std::string& number) {
    if (number.find('.') != std::string::npos) throw RangeError(label, number);
    if (number.size() > 9) throw RangeError(label, number);
    int v = std::stoi(number);
    if (v < 1 || v > 9) throw RangeError(label, number);
    return v;
}

inline const char* kSinglePattern =
    R"(quantitative\s+rating)";
inline const char* kEmpiricalPattern =
    R"(quantitative\s+rating\s*,\s*empirical\s+alignment)";
inline const char* kTheoreticalPattern =
    R"(quantitative\s+rating\s*,\s*theoretical\s+alignment)";

// The bare label is a prefix of the two alignment labels; drop matches whose
// separator is the alignment comma.
inline std::vector<LabelMatch> find_single(const std::string& text) {
    auto all = find_all(text, std::string(kSinglePattern) +
                                  R"((?!\s*,\s*(?:empirical|theoretical)))");
    return all;
}

}  // namespace detail

/// Step-2 output parser. The last occurrence of the label wins (models
/// sometimes restate a revised rating further down), so reading order is the
/// tie-break; the span always addresses the occurrence that produced the value.
inline RedactionRating parse_single_rating(const std::string& text) {
    auto matches = detail::find_single(text);
    if (matches.empty()) throw ParseMiss(kSingleLabel);
    const auto& last = matches.back();
    int v = detail::value_in_range(kSingleLabel, last.number);
    return {v, last.span};
}

/// Step-5 output parser: both labeled lines, in either order. A label
/// repeated with a different value is ambiguous and refused.
inline AlignmentScores parse_alignment_ratings(const std::string& text) {
    auto pick = [&](const char* label, const char* pattern) {
        auto matches = detail::find_all(text, pattern);
        if (matches.empty()) throw ParseMiss(label);
        std::vector<int> values;
        for (const auto& m : matches) values.push_back(detail::value_in_range(label, m.number));
        for (int v : values)
            if (v != values.front()) throw AmbiguityError(label, values);
        return std::pair<int, SourceSpan>(values.back(), matches.back().span);
    };
    auto [emp, emp_span] = pick(kEmpiricalLabel, detail::kEmpiricalPattern);
    auto [theo, theo_span] = pick(kTheoreticalLabel, detail::kTheoreticalPattern);
    AlignmentScores scores{emp, theo, emp_span, theo_span};
    if (scores.empirical_span.overlaps(scores.theoretical_span))
        throw AmbiguityError(kSingleLabel, {emp, theo});
    return scores;
}

/// Canonical Step-2 label line for `value`.
inline std::string format_rating(int value) {
    if (value < 1 || value > 9) throw RangeError(kSingleLabel, std::to_string(value));
    return std::string(kSingleLabel) + ": " + std::to_string(value);
}

/// Canonical Step-5 label lines for an (empirical, theoretical) pair.
inline std::string format_rating(int empirical, int theoretical) {
    if (empirical < 1 || empirical > 9)
        throw RangeError(kEmpiricalLabel, std::to_string(empirical));
    if (theoretical < 1 || theoretical > 9)
        throw RangeError(kTheoreticalLabel, std::to_string(theoretical));
    return std::string(kEmpiricalLabel) + ": " + std::to_string(empirical) + "\n" +
           kTheoreticalLabel + ": " + std::to_string(theoretical);
}

}  // namespace redactlab::extraction
