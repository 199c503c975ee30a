// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "redactlab/stats.hpp"
#include "redactlab/version.hpp"

namespace redactlab::stats {

enum class ReportFormat { csv, markdown };

struct JournalAlignmentRow {
    std::string journal;
    MeanSe empirical;
    MeanSe theoretical;
};

struct ReportTables {
    std::vector<DistributionRow> distribution;
    std::optional<PairwiseMatrix> pairwise;
    std::vector<JournalAlignmentRow> journal_alignment;
    std::vector<KeywordFacet> keyword_facets;

    bool empty() const {
        return distribution.empty() && !pairwise && journal_alignment.empty() &&
               keyword_facets.empty();
    }
};

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string fmt(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw StatsError("cannot write report file: " + p.string());
    return out;
}

inline std::string variant_header(const TestConfig& c) {
    return std::string("# redactlab ") + kVersion + "\n# mean_test=" +
           to_string(c.mean_variant) + "\n# levene_center=" + to_string(c.centering) + "\n";
}

}  // namespace detail

/// Writes the computed tables under `out_dir`. CSV: dot decimal, comma
/// separator, one header row; variant choices and artifact version ride in
/// leading `#` comment lines. Output bytes are a pure function of the input.
inline std::vector<std::filesystem::path> emit_report(const ReportTables& tables,
                                                      ReportFormat format,
                                                      const std::filesystem::path& out_dir) {
    if (tables.empty()) throw StatsError("emit_report: no tables to write");
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    if (format == ReportFormat::csv) {
        if (!tables.distribution.empty()) {
            auto p = out_dir / "distribution.csv";
            auto out = detail::open_out(p);
            out << "label,rating,count,percentage\n";
            for (const auto& r : tables.distribution)
                out << detail::csv_escape(r.label) << ',' << r.rating << ',' << r.count
                    << ',' << detail::fmt(r.percentage, 1) << '\n';
            written.push_back(p);
        }
        if (tables.pairwise) {
            auto p = out_dir / "pairwise.csv";
            auto out = detail::open_out(p);
            out << detail::variant_header(tables.pairwise->config);
            out << "group_a,group_b,mean_p,variance_p\n";
            for (const auto& c : tables.pairwise->cells) {
                out << detail::csv_escape(c.label_a) << ',' << detail::csv_escape(c.label_b)
                    << ',';
                if (c.error.empty())
                    out << detail::fmt(c.mean_p, 6) << ',' << detail::fmt(c.variance_p, 6);
                else
                    out << ",";
                out << '\n';
            }
            written.push_back(p);
        }
        if (!tables.journal_alignment.empty()) {
            auto p = out_dir / "journal_alignment.csv";
            auto out = detail::open_out(p);
            out << "journal,n,empirical_mean,empirical_se,theoretical_mean,theoretical_se\n";
            for (const auto& r : tables.journal_alignment)
                out << detail::csv_escape(r.journal) << ',' << r.empirical.n << ','
                    << detail::fmt(r.empirical.mean, 6) << ',' << detail::fmt(r.empirical.se, 6)
                    << ',' << detail::fmt(r.theoretical.mean, 6) << ','
                    << detail::fmt(r.theoretical.se, 6) << '\n';
            written.push_back(p);
        }
        if (!tables.keyword_facets.empty()) {
            auto p = out_dir / "keyword_facets.csv";
            auto out = detail::open_out(p);
            out << "keyword,n,empirical_mean,empirical_sd,theoretical_mean,theoretical_sd\n";
            for (const auto& f : tables.keyword_facets) {
                out << detail::csv_escape(f.keyword) << ',' << f.n << ',';
                if (f.empty)
                    out << ",,,";
                else
                    out << detail::fmt(f.empirical_mean, 6) << ','
                        << detail::fmt(f.empirical_sd, 6) << ','
                        << detail::fmt(f.theoretical_mean, 6) << ','
                        << detail::fmt(f.theoretical_sd, 6);
                out << '\n';
            }
            written.push_back(p);
        }
        return written;
    }

    // markdown: one consolidated report
    auto p = out_dir / "report.md";
    auto out = detail::open_out(p);
    out << "# Rating statistics\n\n";
    out << "Generated by redactlab " << kVersion;
    if (tables.pairwise)
        out << " (mean test: " << to_string(tables.pairwise->config.mean_variant)
            << ", Levene centering: " << to_string(tables.pairwise->config.centering) << ")";
    out << "\n";
    if (!tables.distribution.empty()) {
        out << "\n## Rating distribution\n\n| Group | Rating | Count | % |\n|---|---|---|---|\n";
        for (const auto& r : tables.distribution)
            out << "| " << r.label << " | " << r.rating << " | " << r.count << " | "
                << detail::fmt(r.percentage, 1) << " |\n";
    }
    if (tables.pairwise) {
        out << "\n## Pairwise p-values\n\n| Pair | Mean diff p | Variance diff p |\n|---|---|---|\n";
        for (const auto& c : tables.pairwise->cells) {
            out << "| " << c.label_a << " vs " << c.label_b << " | ";
            if (c.error.empty())
                out << detail::fmt(c.mean_p, 2) << " | " << detail::fmt(c.variance_p, 2);
            else
                out << "(" << c.error << ") | ";
            out << " |\n";
        }
    }
    if (!tables.journal_alignment.empty()) {
        out << "\n## Alignment by journal\n\n| Journal | n | Empirical mean (s.e.) | "
               "Theoretical mean (s.e.) |\n|---|---|---|---|\n";
        for (const auto& r : tables.journal_alignment)
            out << "| " << r.journal << " | " << r.empirical.n << " | "
                << detail::fmt(r.empirical.mean, 2) << " (" << detail::fmt(r.empirical.se, 2)
                << ") | " << detail::fmt(r.theoretical.mean, 2) << " ("
                << detail::fmt(r.theoretical.se, 2) << ") |\n";
    }
    if (!tables.keyword_facets.empty()) {
        out << "\n## Alignment by keyword\n\n| Keyword | n | Empirical mean (sd) | "
               "Theoretical mean (sd) |\n|---|---|---|---|\n";
        for (const auto& f : tables.keyword_facets) {
            out << "| " << f.keyword << " | " << f.n << " | ";
            if (f.empty)
                out << "- | -";
            else
                out << detail::fmt(f.empirical_mean, 2) << " (" << detail::fmt(f.empirical_sd, 2)
                    << ") | " << detail::fmt(f.theoretical_mean, 2) << " ("
                    << detail::fmt(f.theoretical_sd, 2) << ")";
            out << " |\n";
        }
    }
    written.push_back(p);
    return written;
}

}  // namespace redactlab::stats
