// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "redactlab/corpus.hpp"
#include "redactlab/orchestrator.hpp"
#include "redactlab/report.hpp"
#include "redactlab/stats.hpp"

namespace redactlab::stats {

namespace detail {

/// Journal display order: the four known journals first (paper order), then
/// any other labels alphabetically.
inline std::vector<std::string> journal_order(const std::map<std::string, int>& seen) {
    std::vector<std::string> known = {
        corpus::to_string(corpus::Journal::cognitive_psychology),
        corpus::to_string(corpus::Journal::jepg),
        corpus::to_string(corpus::Journal::jpsp),
        corpus::to_string(corpus::Journal::psychological_science),
    };
    std::vector<std::string> out;
    for (const auto& k : known)
        if (seen.count(k)) out.push_back(k);
    for (const auto& [label, _] : seen)
        if (std::find(known.begin(), known.end(), label) == known.end()) out.push_back(label);
    return out;
}

inline std::map<std::string, const corpus::ArticleRecord*> by_id(
    const std::vector<corpus::ArticleRecord>& articles) {
    std::map<std::string, const corpus::ArticleRecord*> m;
    for (const auto& a : articles) m[a.article_id] = &a;
    return m;
}

}  // namespace detail

/// Step-2 redaction ratings grouped by journal. Only parse-successful
/// completed entries contribute; unparsed outputs stay out of the stats.
inline std::vector<RatingGroup> redaction_rating_groups(
    const std::vector<orchestrator::LedgerEntry>& entries,
    const std::vector<corpus::ArticleRecord>& articles) {
    auto ids = detail::by_id(articles);
    orchestrator::LedgerIndex index(entries);
    std::map<std::string, std::vector<int>> buckets;
    std::map<std::string, int> seen;
    for (const auto& [key, e] : index.last_entries()) {
        if (e.step != protocol::StepId::assess_redaction ||
            e.status != orchestrator::Status::completed || !e.parsed.contains("rating"))
            continue;
        auto it = ids.find(key.article_id);
        if (it == ids.end()) continue;
        std::string label = it->second->journal_label();
        buckets[label].push_back(e.parsed["rating"].get<int>());
        seen[label] = 1;
    }
    std::vector<RatingGroup> out;
    for (const auto& label : detail::journal_order(seen))
        out.push_back({label, buckets[label]});
    return out;
}

struct AlignmentGroups {
    std::vector<RatingGroup> empirical;
    std::vector<RatingGroup> theoretical;
};

inline AlignmentGroups alignment_rating_groups(
    const std::vector<orchestrator::LedgerEntry>& entries,
    const std::vector<corpus::ArticleRecord>& articles) {
    auto ids = detail::by_id(articles);
    orchestrator::LedgerIndex index(entries);
    std::map<std::string, std::vector<int>> emp, theo;
    std::map<std::string, int> seen;
    for (const auto& [key, e] : index.last_entries()) {
        if (e.step != protocol::StepId::score ||
            e.status != orchestrator::Status::completed || !e.parsed.contains("empirical"))
            continue;
        auto it = ids.find(key.article_id);
        if (it == ids.end()) continue;
        std::string label = it->second->journal_label();
        emp[label].push_back(e.parsed["empirical"].get<int>());
        theo[label].push_back(e.parsed["theoretical"].get<int>());
        seen[label] = 1;
    }
    AlignmentGroups out;
    for (const auto& label : detail::journal_order(seen)) {
        out.empirical.push_back({label, emp[label]});
        out.theoretical.push_back({label, theo[label]});
    }
    return out;
}

inline std::vector<JournalAlignmentRow> journal_alignment_rows(
    const std::vector<orchestrator::LedgerEntry>& entries,
    const std::vector<corpus::ArticleRecord>& articles) {
    auto groups = alignment_rating_groups(entries, articles);
    std::vector<JournalAlignmentRow> rows;
    for (std::size_t i = 0; i < groups.empirical.size(); ++i) {
        JournalAlignmentRow row;
        row.journal = groups.empirical[i].label;
        row.empirical = mean_se(groups.empirical[i].values);
        row.theoretical = mean_se(groups.theoretical[i].values);
        rows.push_back(row);
    }
    return rows;
}

/// Alignment observations tagged with each article's keywords (author and
/// indexed lists merged), ready for keyword_facets().
inline std::vector<AlignmentObservation> alignment_observations(
    const std::vector<orchestrator::LedgerEntry>& entries,
    const std::vector<corpus::ArticleRecord>& articles) {
    auto ids = detail::by_id(articles);
    orchestrator::LedgerIndex index(entries);
    std::vector<AlignmentObservation> out;
    for (const auto& [key, e] : index.last_entries()) {
        if (e.step != protocol::StepId::score ||
            e.status != orchestrator::Status::completed || !e.parsed.contains("empirical"))
            continue;
        auto it = ids.find(key.article_id);
        if (it == ids.end()) continue;
        AlignmentObservation obs;
        obs.keywords = it->second->author_keywords;
        obs.keywords.insert(obs.keywords.end(), it->second->indexed_keywords.begin(),
                            it->second->indexed_keywords.end());
        obs.empirical = e.parsed["empirical"].get<int>();
        obs.theoretical = e.parsed["theoretical"].get<int>();
        out.push_back(std::move(obs));
    }
    return out;
}

/// The paper's six most prevalent keywords, the default facet set.
inline std::vector<std::string> default_facet_keywords() {
    return {"learning", "cognition", "motivation", "attitude", "attention", "emotion"};
}

}  // namespace redactlab::stats
