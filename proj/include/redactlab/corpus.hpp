// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace redactlab::corpus {

class CorpusError : public std::runtime_error {
public:
    explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

enum class Journal {
    cognitive_psychology,
    jepg,
    jpsp,
    psychological_science,
    other,
};

inline std::string to_string(Journal j) {
    switch (j) {
        case Journal::cognitive_psychology: return "Cognitive Psychology";
        case Journal::jepg: return "Journal of Experimental Psychology: General";
        case Journal::jpsp: return "Journal of Personality and Social Psychology";
        case Journal::psychological_science: return "Psychological Science";
        case Journal::other: return "other";
    }
    return "other";
}

inline std::string short_label(Journal j) {
    switch (j) {
        case Journal::cognitive_psychology: return "CP";
        case Journal::jepg: return "JEP:G";
        case Journal::jpsp: return "JPSP";
        case Journal::psychological_science: return "PS";
        case Journal::other: return "other";
    }
    return "other";
}

/// Accepts full journal names and the usual short forms; anything else maps
/// to Journal::other (the raw string is kept on the record).
inline Journal journal_from_string(std::string_view s) {
    if (s == "Cognitive Psychology" || s == "CP") return Journal::cognitive_psychology;
    if (s == "Journal of Experimental Psychology: General" || s == "JEP:G" || s == "JEPG")
        return Journal::jepg;
    if (s == "Journal of Personality and Social Psychology" || s == "JPSP")
        return Journal::jpsp;
    if (s == "Psychological Science" || s == "PS") return Journal::psychological_science;
    return Journal::other;
}

struct Date {
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;

    bool operator==(const Date&) const = default;
    auto operator<=>(const Date&) const = default;

    bool valid() const {
        return std::chrono::year_month_day{std::chrono::year{year},
                                           std::chrono::month{month},
                                           std::chrono::day{day}}
            .ok();
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
        return buf;
    }
};

/// Strict ISO-8601 calendar date (YYYY-MM-DD), validated against the
/// proleptic Gregorian calendar.
inline std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t n) {
        int v = 0;
        for (std::size_t i = 0; i < n; ++i) v = v * 10 + (s[pos + i] - '0');
        return v;
    };
    Date d{num(0, 4), static_cast<unsigned>(num(5, 2)), static_cast<unsigned>(num(8, 2))};
    if (!d.valid()) return std::nullopt;
    return d;
}

struct ArticleRecord {
    std::string article_id;
    Journal journal = Journal::other;
    std::string journal_raw;  // as given in the source file
    std::string title;
    std::string abstract_text;
    Date publication_date;
    std::vector<std::string> authors;
    std::vector<std::string> author_keywords;
    std::vector<std::string> indexed_keywords;

    std::string journal_label() const {
        return journal == Journal::other && !journal_raw.empty() ? journal_raw
                                                                 : to_string(journal);
    }
};

inline std::string trim(std::string_view s) {
    const char* ws = " \t\n\r\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

inline std::string collapse_crlf(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') continue;
        out.push_back(s[i]);
    }
    return out;
}

/// Unicode code points in a UTF-8 string (continuation bytes don't count).
inline std::size_t codepoint_count(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++n;
    return n;
}

/// Character count used everywhere lengths are reported: trim outer
/// whitespace, collapse CRLF to LF, count code points. No other
/// normalization.
inline std::size_t abstract_char_count(std::string_view abstract_text) {
    return codepoint_count(trim(collapse_crlf(abstract_text)));
}

// --- loading ---------------------------------------------------------------

enum class CorpusFormat { jsonl, csv };

namespace detail {

inline const char* kRequiredFields[] = {
    "article_id", "journal",          "title",           "abstract",
    "publication_date", "authors",    "author_keywords", "indexed_keywords"};

inline ArticleRecord record_from_json(const nlohmann::json& row, std::size_t line_no) {
    for (const char* f : kRequiredFields) {
        if (!row.contains(f))
            throw CorpusError("line " + std::to_string(line_no) + ": missing field \"" +
                              f + "\"");
    }
    auto str_field = [&](const char* f) {
        if (!row[f].is_string())
            throw CorpusError("line " + std::to_string(line_no) + ": field \"" +
                              std::string(f) + "\" must be a string");
        return row[f].get<std::string>();
    };
    auto list_field = [&](const char* f) {
        if (!row[f].is_array())
            throw CorpusError("line " + std::to_string(line_no) + ": field \"" +
                              std::string(f) + "\" must be an array");
        std::vector<std::string> out;
        for (const auto& v : row[f]) out.push_back(v.get<std::string>());
        return out;
    };
    ArticleRecord rec;
    rec.article_id = str_field("article_id");
    rec.journal_raw = str_field("journal");
    rec.journal = journal_from_string(rec.journal_raw);
    rec.title = str_field("title");
    rec.abstract_text = collapse_crlf(str_field("abstract"));
    auto date = parse_date(str_field("publication_date"));
    if (!date)
        throw CorpusError("line " + std::to_string(line_no) +
                          ": field \"publication_date\" is not a valid ISO-8601 date");
    rec.publication_date = *date;
    rec.authors = list_field("authors");
    rec.author_keywords = list_field("author_keywords");
    rec.indexed_keywords = list_field("indexed_keywords");
    if (trim(rec.abstract_text).empty())
        throw CorpusError("line " + std::to_string(line_no) +
                          ": field \"abstract\" is empty after trimming");
    if (rec.article_id.empty())
        throw CorpusError("line " + std::to_string(line_no) +
                          ": field \"article_id\" is empty");
    return rec;
}

/// RFC 4180 CSV reader: quoted fields, doubled quotes, embedded newlines.
/// Returns rows of cells; `line_no` of each row is where the row started.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    std::istream& in) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::string cell;
    std::vector<std::string> row;
    bool quoted = false;
    bool at_row_start = true;
    std::size_t line_no = 1, row_line = 1;
    char c;
    while (in.get(c)) {
        if (at_row_start) {
            row_line = line_no;
            at_row_start = false;
        }
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    cell.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_no;
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && in.peek() == '\n') in.get();
            ++line_no;
            row.push_back(std::move(cell));
            cell.clear();
            if (!(row.size() == 1 && row[0].empty())) rows.emplace_back(row_line, row);
            row.clear();
            at_row_start = true;
        } else {
            cell.push_back(c);
        }
    }
    if (quoted) throw CorpusError("unterminated quoted CSV field");
    if (!cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.emplace_back(row_line, row);
    }
    return rows;
}

inline std::vector<std::string> split_list_cell(const std::string& cell) {
    std::vector<std::string> out;
    if (trim(cell).empty()) return out;
    std::size_t start = 0;
    while (true) {
        auto pos = cell.find(';', start);
        out.push_back(trim(cell.substr(start, pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

/// Loads a corpus file. JSONL: one article object per line. CSV: same column
/// names, list-valued columns joined with ';'. Records come back in file
/// order with abstract text unchanged apart from CRLF -> LF.
inline std::vector<ArticleRecord> load_corpus(const std::string& path,
                                              CorpusFormat format = CorpusFormat::jsonl) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open corpus file: " + path);

    std::vector<ArticleRecord> records;
    if (format == CorpusFormat::jsonl) {
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty()) continue;
            nlohmann::json row;
            try {
                row = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw CorpusError("line " + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
            }
            records.push_back(detail::record_from_json(row, line_no));
        }
    } else {
        auto rows = detail::read_csv(in);
        if (rows.empty()) throw CorpusError("empty CSV corpus: " + path);
        const auto& header = rows.front().second;
        std::map<std::string, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
        for (const char* f : detail::kRequiredFields)
            if (!col.count(f)) throw CorpusError(std::string("CSV header missing column \"") + f + "\"");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            auto [line_no, cells] = rows[r];
            auto cell = [&](const char* f) -> std::string {
                std::size_t i = col[f];
                if (i >= cells.size())
                    throw CorpusError("line " + std::to_string(line_no) +
                                      ": missing field \"" + f + "\"");
                return cells[i];
            };
            nlohmann::json row = {
                {"article_id", cell("article_id")},
                {"journal", cell("journal")},
                {"title", cell("title")},
                {"abstract", cell("abstract")},
                {"publication_date", cell("publication_date")},
                {"authors", detail::split_list_cell(cell("authors"))},
                {"author_keywords", detail::split_list_cell(cell("author_keywords"))},
                {"indexed_keywords", detail::split_list_cell(cell("indexed_keywords"))},
            };
            records.push_back(detail::record_from_json(row, line_no));
        }
    }

    std::set<std::string> seen;
    for (const auto& rec : records) {
        if (!seen.insert(rec.article_id).second)
            throw CorpusError("duplicate article_id \"" + rec.article_id + "\"");
    }
    return records;
}

/// Re-serializes records as JSONL with the documented field schema.
inline void save_corpus(const std::vector<ArticleRecord>& records, std::ostream& out) {
    for (const auto& rec : records) {
        nlohmann::ordered_json row = {
            {"article_id", rec.article_id},
            {"journal", rec.journal_raw},
            {"title", rec.title},
            {"abstract", rec.abstract_text},
            {"publication_date", rec.publication_date.to_string()},
            {"authors", rec.authors},
            {"author_keywords", rec.author_keywords},
            {"indexed_keywords", rec.indexed_keywords},
        };
        out << row.dump() << '\n';
    }
}

inline void save_corpus(const std::vector<ArticleRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("cannot write corpus file: " + path);
    save_corpus(records, out);
}

// --- validation ------------------------------------------------------------

struct LengthBand {
    std::size_t min_chars = 630;
    std::size_t max_chars = 2364;
};

struct ValidationReport {
    std::string article_id;
    std::vector<std::string> flags;  // e.g. "pre-cutoff", "length-out-of-band"

    bool clean() const { return flags.empty(); }
};

/// Pure report; never rejects. Articles dated on/before the model-training
/// cutoff are flagged, as are abstracts outside the plausible length band.
inline ValidationReport validate_article(const ArticleRecord& record, const Date& cutoff,
                                         const LengthBand& band = {}) {
    ValidationReport report;
    report.article_id = record.article_id;
    if (record.publication_date <= cutoff) report.flags.push_back("pre-cutoff");
    std::size_t n = abstract_char_count(record.abstract_text);
    if (n < band.min_chars || n > band.max_chars)
        report.flags.push_back("length-out-of-band");
    return report;
}

// --- summary statistics ------------------------------------------------------

struct CorpusSummary {
    std::size_t total = 0;
    std::map<std::string, std::size_t> journal_counts;  // keyed by journal label
    std::size_t length_min = 0;
    double length_median = 0;
    double length_mean = 0;
    double length_sd = 0;  // sample sd; 0 with degenerate=true when n == 1
    std::size_t length_max = 0;
    bool length_sd_degenerate = false;
    std::size_t unique_authors = 0;
    std::map<std::string, std::size_t> author_keyword_counts;
    std::map<std::string, std::size_t> indexed_keyword_counts;
};

inline CorpusSummary corpus_stats(const std::vector<ArticleRecord>& records) {
    if (records.empty()) throw CorpusError("corpus_stats: empty corpus");
    CorpusSummary s;
    s.total = records.size();
    std::vector<std::size_t> lengths;
    lengths.reserve(records.size());
    std::set<std::string> authors;
    for (const auto& rec : records) {
        ++s.journal_counts[rec.journal_label()];
        lengths.push_back(abstract_char_count(rec.abstract_text));
        for (const auto& a : rec.authors) authors.insert(a);
        for (const auto& k : rec.author_keywords) ++s.author_keyword_counts[k];
        for (const auto& k : rec.indexed_keywords) ++s.indexed_keyword_counts[k];
    }
    s.unique_authors = authors.size();
    std::sort(lengths.begin(), lengths.end());
    s.length_min = lengths.front();
    s.length_max = lengths.back();
    std::size_t n = lengths.size();
    s.length_median = (n % 2 == 1)
                          ? static_cast<double>(lengths[n / 2])
                          : (static_cast<double>(lengths[n / 2 - 1]) + lengths[n / 2]) / 2.0;
    double sum = 0;
    for (auto v : lengths) sum += static_cast<double>(v);
    s.length_mean = sum / static_cast<double>(n);
    if (n == 1) {
        s.length_sd = 0;
        s.length_sd_degenerate = true;
    } else {
        double ss = 0;
        for (auto v : lengths) {
            double d = static_cast<double>(v) - s.length_mean;
            ss += d * d;
        }
        s.length_sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return s;
}

}  // namespace redactlab::corpus
