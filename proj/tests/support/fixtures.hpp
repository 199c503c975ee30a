// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redactlab/corpus.hpp"
#include "redactlab/orchestrator.hpp"
#include "redactlab/protocol.hpp"
#include "redactlab/provider.hpp"
#include "support/wellbeing_fixture.hpp"

namespace redactlab::testsupport {

namespace fs = std::filesystem;

inline fs::path prompts_dir() { return fs::path(REDACTLAB_PROMPTS_DIR); }

inline fs::path make_temp_dir(const std::string& prefix) {
    static std::atomic<unsigned> counter{0};
    auto p = fs::temp_directory_path() /
             (prefix + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline corpus::ArticleRecord wellbeing_article() {
    corpus::ArticleRecord a;
    a.article_id = "wellbeing-resilience";
    a.journal = corpus::Journal::psychological_science;
    a.journal_raw = "Psychological Science";
    a.title = "Well-being and cognitive resilience in older adults";
    a.abstract_text = kWellbeingOriginal;
    a.publication_date = {2023, 4, 15};
    a.authors = {"A. Researcher", "B. Collaborator"};
    a.author_keywords = {"well-being", "cognitive resilience"};
    a.indexed_keywords = {"cognition", "learning"};
    return a;
}

/// Small deterministic value in 0..2 derived from an id (keeps canned
/// ratings stable across platforms, unlike std::hash).
inline int id_salt(const std::string& id) {
    unsigned s = 0;
    for (unsigned char c : id) s = s * 31 + c;
    return static_cast<int>(s % 3);
}

inline std::vector<corpus::ArticleRecord> synthetic_corpus(std::size_t n) {
    static const char* journals[] = {
        "Cognitive Psychology",
        "Journal of Experimental Psychology: General",
        "Journal of Personality and Social Psychology",
        "Psychological Science",
    };
    static const char* keyword_pool[] = {"learning", "cognition", "motivation",
                                         "attention", "emotion", "attitude"};
    std::vector<corpus::ArticleRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        corpus::ArticleRecord a;
        char id[32];
        std::snprintf(id, sizeof(id), "art-%03zu", i + 1);
        a.article_id = id;
        a.journal_raw = journals[i % 4];
        a.journal = corpus::journal_from_string(a.journal_raw);
        a.title = "Synthetic study " + std::to_string(i + 1);
        std::string core = "This synthetic study " + a.article_id +
                           " examines how a manipulated condition shapes a measured "
                           "outcome in a sample of adult participants. ";
        a.abstract_text = core;
        while (a.abstract_text.size() < 700)
            a.abstract_text += "The design balances the counterbalanced conditions and "
                               "records the outcome measure for every participant. ";
        a.abstract_text += "Results and their implications are reported.";
        a.publication_date = {2022, static_cast<unsigned>(1 + i % 12), 10};
        a.authors = {"Author " + std::to_string(i + 1)};
        a.author_keywords = {keyword_pool[i % 6]};
        a.indexed_keywords = {keyword_pool[(i + 1) % 6]};
        out.push_back(std::move(a));
    }
    return out;
}

/// What the model "says" at each step for a given article; the single source
/// of truth for stub servers and directly built cassettes.
inline std::string canned_output(protocol::StepId step, const corpus::ArticleRecord& a) {
    bool wellbeing = a.article_id == "wellbeing-resilience";
    int salt = id_salt(a.article_id);
    switch (step) {
        case protocol::StepId::redact:
            if (wellbeing) return kWellbeingRedacted;
            return "Redacted variant of " + a.article_id +
                   ": the study investigates the stated research question in the same "
                   "sample and design, with empirical findings withheld.";
        case protocol::StepId::assess_redaction:
            return "The redacted abstract conceals the outcomes while preserving the "
                   "research context and questions.\nQuantitative Rating: " +
                   std::to_string(7 + salt);
        case protocol::StepId::predict:
            if (wellbeing) return kWellbeingPrediction;
            return "Prediction for " + a.article_id +
                   ": the manipulated condition will measurably outperform the control "
                   "condition, with a positive and statistically reliable effect.";
        case protocol::StepId::assess_prediction:
            if (wellbeing) return kWellbeingAssessment;
            return "The predictions for " + a.article_id +
                   " align closely with the findings reported in the original abstract, "
                   "with minor gaps in specificity.";
        case protocol::StepId::score:
            return "Quantitative Rating, Empirical Alignment: " + std::to_string(7 + salt) +
                   "\nQuantitative Rating, Theoretical Alignment: " +
                   std::to_string(7 + (salt + 1) % 3);
        case protocol::StepId::summarize:
            return "Across the sampled assessments, predictions aligned closely with "
                   "reported findings and flagged plausible limitations.";
    }
    return "";
}

inline provider::CompletionResult canned_result(const std::string& text) {
    provider::CompletionResult r;
    r.output_text = text;
    r.finish_reason = provider::FinishReason::stop;
    r.prompt_tokens = 120;
    r.completion_tokens = 240;
    r.latency_ms = 5;
    r.timestamp_ms = 1700000000000;
    r.provider_request_id = "fixture";
    return r;
}

/// Customizes one article/step of a fixture cassette: return the output text
/// to use, or nullopt to omit that step's entry entirely (a cassette hole).
using OutputOverride = std::function<std::optional<std::string>(
    protocol::StepId, const corpus::ArticleRecord&)>;

/// Builds a complete replay cassette for `articles` straight through the
/// request builder — no sockets involved — mirroring what a record-mode run
/// against the canned outputs would produce.
inline void build_fixture_cassette(const std::vector<corpus::ArticleRecord>& articles,
                                   const protocol::Protocol& protocol,
                                   const orchestrator::RunConfig& cfg,
                                   const fs::path& cassette_path,
                                   const OutputOverride& override_fn = {}) {
    provider::Cassette cassette(cassette_path);
    for (const auto& article : articles) {
        orchestrator::PipelineArtifacts artifacts;
        artifacts.article_id = article.article_id;
        for (protocol::StepId step : protocol::kPipelineSteps) {
            auto req = orchestrator::build_step_request(protocol, step, article,
                                                        artifacts, cfg);
            std::string text = canned_output(step, article);
            bool include = true;
            if (override_fn) {
                auto customized = override_fn(step, article);
                if (customized) text = *customized;
                else include = false;
            }
            if (include)
                cassette.append(provider::request_hash(req), req, canned_result(text));
            // downstream requests still assume the canned upstream text
            switch (step) {
                case protocol::StepId::redact: artifacts.redacted_text = text; break;
                case protocol::StepId::predict: artifacts.prediction = text; break;
                case protocol::StepId::assess_prediction:
                    artifacts.holistic_assessment = text;
                    break;
                default: break;
            }
        }
    }
}

inline fs::path write_corpus_file(const std::vector<corpus::ArticleRecord>& articles,
                                  const fs::path& path) {
    corpus::save_corpus(articles, path.string());
    return path;
}

inline void write_config_file(const fs::path& path, nlohmann::json overrides) {
    nlohmann::json j = {
        {"mode", "replay"},
        {"prompts_dir", prompts_dir().string()},
        {"max_rps", 0},
        {"max_retries", 1},
        {"initial_backoff_ms", 1},
    };
    j.update(overrides);
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

}  // namespace redactlab::testsupport
