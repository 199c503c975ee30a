// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "redactlab/corpus.hpp"
#include "redactlab/extraction.hpp"
#include "redactlab/protocol.hpp"
#include "redactlab/provider.hpp"
#include "redactlab/sha256.hpp"

namespace redactlab::orchestrator {

namespace fs = std::filesystem;
using protocol::StepId;

class OrchestratorError : public std::runtime_error {
public:
    explicit OrchestratorError(const std::string& what) : std::runtime_error(what) {}
};

enum class Status { pending, completed, failed, skipped };

inline std::string to_string(Status s) {
    switch (s) {
        case Status::pending: return "pending";
        case Status::completed: return "completed";
        case Status::failed: return "failed";
        case Status::skipped: return "skipped";
    }
    return "pending";
}

inline Status status_from_string(std::string_view s) {
    if (s == "pending") return Status::pending;
    if (s == "completed") return Status::completed;
    if (s == "failed") return Status::failed;
    if (s == "skipped") return Status::skipped;
    throw OrchestratorError("unknown status \"" + std::string(s) + "\"");
}

/// One provider interaction (or skip decision), as written to the ledger.
/// The ledger is append-only; for a given (article, step) the last entry wins.
struct LedgerEntry {
    std::string run_id;
    std::string article_id;  // empty for the auxiliary summarize entry
    StepId step = StepId::redact;
    Status status = Status::pending;
    std::string prompt_template_hash;
    std::string request_hash;
    std::optional<provider::CompletionRequest> request;
    std::optional<provider::CompletionResult> response;
    nlohmann::ordered_json parsed;  // null unless a rating was extracted
    std::string parse_error;
    std::string error;
    std::vector<std::string> sampled_article_ids;  // summarize entry only
    std::int64_t started_us = 0;
    std::int64_t finished_us = 0;
};

inline nlohmann::ordered_json entry_to_json(const LedgerEntry& e) {
    nlohmann::ordered_json j = {
        {"run_id", e.run_id},
        {"article_id", e.article_id},
        {"step", protocol::to_string(e.step)},
        {"status", to_string(e.status)},
        {"prompt_template_hash", e.prompt_template_hash},
        {"request_hash", e.request_hash},
    };
    if (e.request) j["request"] = provider::request_to_json(*e.request);
    if (e.response) j["response"] = provider::result_to_json(*e.response);
    if (!e.parsed.is_null()) j["parsed"] = e.parsed;
    if (!e.parse_error.empty()) j["parse_error"] = e.parse_error;
    if (!e.error.empty()) j["error"] = e.error;
    if (!e.sampled_article_ids.empty()) j["sampled_article_ids"] = e.sampled_article_ids;
    j["started_us"] = e.started_us;
    j["finished_us"] = e.finished_us;
    return j;
}

inline LedgerEntry entry_from_json(const nlohmann::json& j) {
    LedgerEntry e;
    e.run_id = j.at("run_id").get<std::string>();
    e.article_id = j.at("article_id").get<std::string>();
    e.step = protocol::step_from_string(j.at("step").get<std::string>());
    e.status = status_from_string(j.at("status").get<std::string>());
    e.prompt_template_hash = j.value("prompt_template_hash", std::string{});
    e.request_hash = j.value("request_hash", std::string{});
    if (j.contains("request")) e.request = provider::request_from_json(j["request"]);
    if (j.contains("response")) e.response = provider::result_from_json(j["response"]);
    if (j.contains("parsed")) e.parsed = j["parsed"];
    e.parse_error = j.value("parse_error", std::string{});
    e.error = j.value("error", std::string{});
    if (j.contains("sampled_article_ids"))
        e.sampled_article_ids = j["sampled_article_ids"].get<std::vector<std::string>>();
    e.started_us = j.value("started_us", std::int64_t{0});
    e.finished_us = j.value("finished_us", std::int64_t{0});
    return e;
}

// --- ledger I/O -----------------------------------------------------------------

/// Append-only JSONL writer, flushed after every entry. A write failure
/// aborts the run: audit integrity outranks progress.
class LedgerWriter {
public:
    explicit LedgerWriter(const fs::path& path) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::app);
        if (!out_) throw OrchestratorError("cannot open ledger for append: " + path.string());
    }

    void append(const LedgerEntry& e) {
        std::lock_guard lock(mutex_);
        out_ << entry_to_json(e).dump() << '\n';
        out_.flush();
        if (!out_) throw OrchestratorError("ledger write failed: " + path_.string());
    }

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

struct SalvageInfo {
    std::size_t entries = 0;
    std::size_t truncated_bytes = 0;  // trailing bytes dropped from a corrupt tail
};

/// Reads a ledger, salvaging up to the last fully valid line. With `repair`
/// set (resume path), a corrupt tail — a write cut short by a kill — is
/// truncated back to the last valid record so appends stay line-aligned;
/// plain reads never modify the file.
inline std::vector<LedgerEntry> read_ledger(const fs::path& path,
                                            SalvageInfo* salvage = nullptr,
                                            bool repair = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OrchestratorError("cannot open ledger: " + path.string());
    std::vector<LedgerEntry> entries;
    std::string line;
    std::uintmax_t valid_end = 0;
    std::uintmax_t consumed = 0;
    bool corrupt = false;
    while (std::getline(in, line)) {
        consumed += line.size() + 1;
        bool complete_line = !in.eof();  // a line without trailing '\n' is a torn write
        if (line.empty()) {
            if (complete_line) valid_end = consumed;
            continue;
        }
        try {
            entries.push_back(entry_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception&) {
            corrupt = true;
            break;
        }
        if (!complete_line) {
            corrupt = true;
            entries.pop_back();
            break;
        }
        valid_end = consumed;
    }
    in.close();
    std::uintmax_t file_size = fs::file_size(path);
    if (salvage) {
        salvage->entries = entries.size();
        salvage->truncated_bytes = corrupt ? file_size - valid_end : 0;
    }
    if (repair && corrupt && file_size > valid_end) fs::resize_file(path, valid_end);
    return entries;
}

// --- indexing / artifacts --------------------------------------------------------

struct StepKey {
    std::string article_id;
    StepId step;
    auto operator<=>(const StepKey&) const = default;
};

/// Last-wins view over the raw entry stream, with the structural invariants
/// checked: one completed entry per key, upstream completion before step k.
class LedgerIndex {
public:
    explicit LedgerIndex(const std::vector<LedgerEntry>& entries) {
        std::set<StepKey> completed_seen;
        for (const auto& e : entries) {
            StepKey key{e.article_id, e.step};
            if (e.status == Status::completed && !completed_seen.insert(key).second)
                throw OrchestratorError("ledger has two completed entries for article \"" +
                                        e.article_id + "\" step " +
                                        protocol::to_string(e.step));
            last_[key] = e;
        }
        for (const auto& [key, e] : last_) {
            if (e.status != Status::completed || e.step == StepId::summarize) continue;
            for (StepId up : protocol::kPipelineSteps) {
                if (up == e.step) break;
                auto it = last_.find({key.article_id, up});
                if (it == last_.end() || it->second.status != Status::completed)
                    throw OrchestratorError(
                        "ledger violates step ordering: article \"" + key.article_id +
                        "\" step " + protocol::to_string(e.step) +
                        " completed before step " + protocol::to_string(up));
            }
        }
    }

    const LedgerEntry* find(const std::string& article_id, StepId step) const {
        auto it = last_.find({article_id, step});
        return it == last_.end() ? nullptr : &it->second;
    }

    bool completed(const std::string& article_id, StepId step) const {
        const auto* e = find(article_id, step);
        return e && e->status == Status::completed;
    }

    const std::map<StepKey, LedgerEntry>& last_entries() const { return last_; }

private:
    std::map<StepKey, LedgerEntry> last_;
};

/// Everything the pipeline produced for one article, derived purely from
/// completed ledger entries (so a replayed ledger re-derives it byte-for-byte).
struct PipelineArtifacts {
    std::string article_id;
    std::optional<std::string> redacted_text;
    std::optional<std::string> redaction_assessment;
    std::optional<int> redaction_rating;
    std::optional<std::string> prediction;
    std::optional<std::string> holistic_assessment;
    std::optional<int> empirical_alignment;
    std::optional<int> theoretical_alignment;
    std::map<std::string, std::string> step_status;  // step name -> status
};

inline nlohmann::ordered_json artifacts_to_json(const PipelineArtifacts& a) {
    nlohmann::ordered_json j;
    j["article_id"] = a.article_id;
    if (a.redacted_text) j["redacted_text"] = *a.redacted_text;
    if (a.redaction_assessment) j["redaction_assessment"] = *a.redaction_assessment;
    if (a.redaction_rating) j["redaction_rating"] = *a.redaction_rating;
    if (a.prediction) j["prediction"] = *a.prediction;
    if (a.holistic_assessment) j["holistic_assessment"] = *a.holistic_assessment;
    if (a.empirical_alignment) j["empirical_alignment"] = *a.empirical_alignment;
    if (a.theoretical_alignment) j["theoretical_alignment"] = *a.theoretical_alignment;
    j["steps"] = a.step_status;
    return j;
}

inline std::map<std::string, PipelineArtifacts> derive_artifacts(
    const std::vector<LedgerEntry>& entries) {
    LedgerIndex index(entries);
    std::map<std::string, PipelineArtifacts> out;
    for (const auto& [key, e] : index.last_entries()) {
        if (e.step == StepId::summarize) continue;
        auto& a = out[key.article_id];
        a.article_id = key.article_id;
        a.step_status[protocol::to_string(e.step)] = to_string(e.status);
        if (e.status != Status::completed || !e.response) continue;
        const std::string& text = e.response->output_text;
        switch (e.step) {
            case StepId::redact: a.redacted_text = text; break;
            case StepId::assess_redaction:
                a.redaction_assessment = text;
                if (e.parsed.contains("rating")) a.redaction_rating = e.parsed["rating"].get<int>();
                break;
            case StepId::predict: a.prediction = text; break;
            case StepId::assess_prediction: a.holistic_assessment = text; break;
            case StepId::score:
                if (e.parsed.contains("empirical")) {
                    a.empirical_alignment = e.parsed["empirical"].get<int>();
                    a.theoretical_alignment = e.parsed["theoretical"].get<int>();
                }
                break;
            default: break;
        }
    }
    return out;
}

inline std::string safe_file_stem(const std::string& article_id) {
    std::string out;
    for (char c : article_id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                  (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out.empty() ? "_" : out;
}

inline std::vector<fs::path> write_artifact_files(
    const std::map<std::string, PipelineArtifacts>& artifacts, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (const auto& [id, a] : artifacts) {
        fs::path p = dir / (safe_file_stem(id) + ".json");
        std::ofstream out(p, std::ios::binary);
        if (!out) throw OrchestratorError("cannot write artifact file: " + p.string());
        out << artifacts_to_json(a).dump(2) << '\n';
        written.push_back(p);
    }
    return written;
}

// --- run configuration / manifest -------------------------------------------------

struct RunConfig {
    std::string run_id;
    fs::path out_dir;
    std::string model_id = "gpt-4-0613";
    std::string summary_model_id = "claude-2.1";
    double temperature = 0.0;
    std::optional<int> max_output_tokens;
    bool deterministic = false;       // zero all ledger timestamps
    bool parallel_articles = false;   // article-level parallelism, steps stay ordered
    int worker_threads = 4;
    bool retry_failed_on_resume = true;
    std::optional<int> min_redaction_rating;  // gate steps 3-5 when set
};

inline fs::path run_dir(const RunConfig& cfg) { return cfg.out_dir / "runs" / cfg.run_id; }
inline fs::path ledger_path(const RunConfig& cfg) { return run_dir(cfg) / "ledger.jsonl"; }
inline fs::path manifest_path(const RunConfig& cfg) { return run_dir(cfg) / "manifest.json"; }
inline fs::path artifacts_dir(const RunConfig& cfg) { return run_dir(cfg) / "artifacts"; }

inline std::string file_sha256(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw OrchestratorError("cannot hash file: " + p.string());
    Sha256 h;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    return h.hex_digest();
}

inline void write_run_manifest(const RunConfig& cfg, const protocol::Protocol& protocol,
                               const fs::path& corpus_path, const std::string& corpus_hash,
                               const std::string& mode) {
    nlohmann::ordered_json j = {
        {"run_id", cfg.run_id},
        {"created_at_ms",
         cfg.deterministic
             ? std::int64_t{0}
             : std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count()},
        {"corpus_path", corpus_path.string()},
        {"corpus_sha256", corpus_hash},
        {"config",
         {{"model_id", cfg.model_id},
          {"summary_model_id", cfg.summary_model_id},
          {"temperature", cfg.temperature},
          {"mode", mode},
          {"deterministic", cfg.deterministic},
          {"parallel_articles", cfg.parallel_articles}}},
        {"prompt_template_hashes", protocol.template_hashes()},
    };
    fs::create_directories(run_dir(cfg));
    std::ofstream out(manifest_path(cfg), std::ios::binary);
    if (!out) throw OrchestratorError("cannot write run manifest");
    out << j.dump(2) << '\n';
}

// --- pipeline execution ------------------------------------------------------------

/// Builds the slot map for a step strictly from its permitted inputs. The
/// original abstract comes from the corpus record; everything else comes from
/// upstream artifacts of the same article.
inline std::map<std::string, std::string> build_step_inputs(
    StepId step, const corpus::ArticleRecord& article, const PipelineArtifacts& artifacts) {
    auto need = [&](const std::optional<std::string>& v, const char* what) {
        if (!v || v->empty())
            throw OrchestratorError(std::string("missing upstream artifact \"") + what +
                                    "\" for step " + protocol::to_string(step));
        return *v;
    };
    std::map<std::string, std::string> inputs;
    for (protocol::ArtifactKind kind : protocol::permitted_inputs(step)) {
        switch (kind) {
            case protocol::ArtifactKind::original_abstract:
                inputs["original_abstract"] = article.abstract_text;
                break;
            case protocol::ArtifactKind::redacted_abstract:
                inputs["redacted_abstract"] = need(artifacts.redacted_text, "redacted_abstract");
                break;
            case protocol::ArtifactKind::prediction:
                inputs["prediction"] = need(artifacts.prediction, "prediction");
                break;
            case protocol::ArtifactKind::holistic_assessment:
                inputs["assessment"] = need(artifacts.holistic_assessment, "assessment");
                break;
            case protocol::ArtifactKind::sampled_assessments:
                throw OrchestratorError("sampled assessments are not a per-article input");
        }
    }
    return inputs;
}

inline provider::CompletionRequest build_step_request(const protocol::Protocol& protocol,
                                                      StepId step,
                                                      const corpus::ArticleRecord& article,
                                                      const PipelineArtifacts& artifacts,
                                                      const RunConfig& cfg) {
    provider::CompletionRequest req;
    req.model_id = cfg.model_id;
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    req.messages = protocol::render_prompt(protocol.spec(step),
                                           build_step_inputs(step, article, artifacts));
    return req;
}

struct RunResult {
    std::size_t articles_total = 0;
    std::size_t articles_completed = 0;
    std::size_t articles_failed = 0;
    std::size_t provider_calls = 0;
    std::vector<LedgerEntry> entries;  // full entry stream (existing + new)
    fs::path ledger_file;
};

namespace detail {

/// Wall-clock µs that strictly increase across calls (ties bumped by 1µs),
/// shared by all workers so per-article ordering survives parallel runs.
class MonotonicStamp {
public:
    explicit MonotonicStamp(bool zeroed) : zeroed_(zeroed) {}

    std::int64_t next() {
        if (zeroed_) return 0;
        std::lock_guard lock(mutex_);
        std::int64_t now = std::chrono::duration_cast<std::chrono::microseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
        last_ = std::max(now, last_ + 1);
        return last_;
    }

private:
    bool zeroed_;
    std::int64_t last_ = 0;
    std::mutex mutex_;
};

struct ArticleOutcome {
    bool completed = false;
    std::size_t calls = 0;
};

inline nlohmann::ordered_json parse_step_output(StepId step, const std::string& text,
                                                std::string& parse_error) {
    try {
        if (step == StepId::assess_redaction) {
            auto r = extraction::parse_single_rating(text);
            return {{"rating", r.value},
                    {"span", {r.source_span.begin, r.source_span.end}}};
        }
        if (step == StepId::score) {
            auto s = extraction::parse_alignment_ratings(text);
            return {{"empirical", s.empirical},
                    {"theoretical", s.theoretical},
                    {"empirical_span", {s.empirical_span.begin, s.empirical_span.end}},
                    {"theoretical_span", {s.theoretical_span.begin, s.theoretical_span.end}}};
        }
    } catch (const extraction::ExtractionError& e) {
        parse_error = e.what();
    }
    return nlohmann::ordered_json(nullptr);
}

/// Runs (or re-runs) one article's steps 1..5. Already-completed steps are
/// reused without provider calls; a failure marks the step and skips the rest.
inline ArticleOutcome run_article(const corpus::ArticleRecord& article,
                                  const protocol::Protocol& protocol,
                                  provider::Client& client, const RunConfig& cfg,
                                  const LedgerIndex* existing, LedgerWriter& writer,
                                  MonotonicStamp& stamp) {
    ArticleOutcome outcome;
    PipelineArtifacts artifacts;
    artifacts.article_id = article.article_id;
    std::string skip_reason;

    // Feed a completed step's output into the artifact set and evaluate the
    // optional rating gate.
    auto absorb = [&](StepId step, const LedgerEntry& e) {
        if (!e.response) return;
        const std::string& text = e.response->output_text;
        switch (step) {
            case StepId::redact: artifacts.redacted_text = text; break;
            case StepId::assess_redaction:
                artifacts.redaction_assessment = text;
                if (e.parsed.contains("rating"))
                    artifacts.redaction_rating = e.parsed["rating"].get<int>();
                break;
            case StepId::predict: artifacts.prediction = text; break;
            case StepId::assess_prediction: artifacts.holistic_assessment = text; break;
            default: break;
        }
        if (step == StepId::assess_redaction && cfg.min_redaction_rating &&
            (!artifacts.redaction_rating ||
             *artifacts.redaction_rating < *cfg.min_redaction_rating)) {
            skip_reason = "redaction rating below configured floor";
        }
    };

    for (StepId step : protocol::kPipelineSteps) {
        if (existing && existing->completed(article.article_id, step)) {
            absorb(step, *existing->find(article.article_id, step));
        } else if (!skip_reason.empty()) {
            LedgerEntry e;
            e.run_id = cfg.run_id;
            e.article_id = article.article_id;
            e.step = step;
            e.status = Status::skipped;
            e.error = skip_reason;
            e.prompt_template_hash = protocol.spec(step).template_hash;
            e.started_us = stamp.next();
            e.finished_us = e.started_us;
            writer.append(e);
        } else {
            LedgerEntry e;
            e.run_id = cfg.run_id;
            e.article_id = article.article_id;
            e.step = step;
            e.prompt_template_hash = protocol.spec(step).template_hash;
            provider::CompletionRequest req;
            try {
                req = build_step_request(protocol, step, article, artifacts, cfg);
            } catch (const std::exception& ex) {
                e.status = Status::failed;
                e.error = ex.what();
                e.started_us = stamp.next();
                e.finished_us = e.started_us;
                writer.append(e);
                skip_reason = "upstream step " + protocol::to_string(step) + " failed";
                continue;
            }
            e.request = req;
            e.request_hash = provider::request_hash(req);
            e.status = Status::pending;
            e.started_us = stamp.next();
            e.finished_us = 0;
            writer.append(e);

            try {
                ++outcome.calls;
                provider::CompletionResult result = client.complete(req);
                e.response = result;
                e.finished_us = stamp.next();
                if (result.refused()) {
                    e.status = Status::failed;
                    e.error = "content-policy refusal";
                } else if (result.finish_reason == provider::FinishReason::length) {
                    e.status = Status::failed;
                    e.error = "output truncated (finish_reason=length)";
                } else {
                    e.status = Status::completed;
                    e.parsed = parse_step_output(step, result.output_text, e.parse_error);
                }
            } catch (const provider::AuthError&) {
                e.status = Status::failed;
                e.error = "authentication failure";
                e.finished_us = stamp.next();
                writer.append(e);
                throw;  // credentials will not heal mid-run
            } catch (const provider::CassetteMissError&) {
                e.status = Status::failed;
                e.error = "cassette miss at step " + protocol::to_string(step) +
                          " for article \"" + article.article_id + "\"";
                e.finished_us = stamp.next();
            } catch (const provider::ProviderError& ex) {
                e.status = Status::failed;
                e.error = ex.what();
                e.finished_us = stamp.next();
            }
            writer.append(e);

            if (e.status != Status::completed) {
                skip_reason = "upstream step " + protocol::to_string(step) + " failed";
                continue;
            }
            absorb(step, e);
        }
    }
    outcome.completed = skip_reason.empty();
    return outcome;
}

}  // namespace detail

/// Executes steps 1..5 for every article, sequentially by default. Failures
/// mark the article failed-at-step and the run moves on; only ledger write
/// failures (and dead credentials) abort.
inline RunResult run_pipeline(const std::vector<corpus::ArticleRecord>& articles,
                              const protocol::Protocol& protocol, provider::Client& client,
                              const RunConfig& cfg, const LedgerIndex* existing = nullptr,
                              const std::function<void(std::size_t, const std::string&, bool)>&
                                  progress = {}) {
    fs::create_directories(run_dir(cfg));
    LedgerWriter writer(ledger_path(cfg));
    detail::MonotonicStamp stamp(cfg.deterministic);

    RunResult result;
    result.articles_total = articles.size();
    result.ledger_file = ledger_path(cfg);

    auto process = [&](std::size_t idx) {
        const auto& article = articles[idx];
        bool needs_work = true;
        if (existing) {
            needs_work = false;
            for (StepId step : protocol::kPipelineSteps) {
                const auto* e = existing->find(article.article_id, step);
                bool done = e && e->status == Status::completed;
                bool retryable = !e || e->status == Status::pending ||
                                 (cfg.retry_failed_on_resume &&
                                  (e->status == Status::failed || e->status == Status::skipped));
                if (!done && retryable) {
                    needs_work = true;
                    break;
                }
                if (!done && !retryable) break;  // leave the article as-is
            }
        }
        detail::ArticleOutcome out;
        if (needs_work) {
            out = detail::run_article(article, protocol, client, cfg, existing, writer, stamp);
        } else {
            // fully completed (or frozen failed): nothing to do
            out.completed = true;
            if (existing) {
                for (StepId step : protocol::kPipelineSteps) {
                    const auto* e = existing->find(article.article_id, step);
                    if (!e || e->status != Status::completed) {
                        out.completed = false;
                        break;
                    }
                }
            }
        }
        return out;
    };

    if (cfg.parallel_articles && articles.size() > 1) {
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> completed{0}, failed{0}, calls{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            while (true) {
                std::size_t idx = next.fetch_add(1);
                if (idx >= articles.size()) return;
                try {
                    auto out = process(idx);
                    calls += out.calls;
                    if (out.completed) ++completed; else ++failed;
                    if (progress) progress(idx, articles[idx].article_id, out.completed);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::size_t n_workers = std::min<std::size_t>(
            std::max(1, cfg.worker_threads), articles.size());
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
        result.articles_completed = completed;
        result.articles_failed = failed;
        result.provider_calls = calls;
    } else {
        for (std::size_t i = 0; i < articles.size(); ++i) {
            auto out = process(i);
            result.provider_calls += out.calls;
            if (out.completed) ++result.articles_completed;
            else ++result.articles_failed;
            if (progress) progress(i, articles[i].article_id, out.completed);
        }
    }

    result.entries = read_ledger(ledger_path(cfg));
    return result;
}

// --- summary sampling ---------------------------------------------------------------

namespace detail {

/// Uniform draw in [0, bound) from a seeded mt19937_64; rejection keeps it
/// unbiased and the result identical on every platform.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

}  // namespace detail

struct SampledAssessment {
    std::string article_id;
    std::string text;
};

/// Uniform sample without replacement over completed step-4 assessments,
/// deterministic under `seed`. n equal to the population returns the whole
/// set in canonical (article_id) order.
inline std::vector<SampledAssessment> sample_for_summary(
    const std::vector<LedgerEntry>& entries, std::size_t n, std::uint64_t seed) {
    LedgerIndex index(entries);
    std::vector<SampledAssessment> pool;
    for (const auto& [key, e] : index.last_entries()) {
        if (e.step == StepId::assess_prediction && e.status == Status::completed && e.response)
            pool.push_back({key.article_id, e.response->output_text});
    }
    // canonical order before any draws
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.article_id < b.article_id; });
    if (pool.size() < n)
        throw OrchestratorError("sample_for_summary: need " + std::to_string(n) +
                                " completed assessments, only " +
                                std::to_string(pool.size()) + " available");
    if (pool.size() == n) return pool;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = i + static_cast<std::size_t>(
                                detail::bounded_draw(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    return pool;
}

/// Issues the auxiliary summary request over a seeded sample and records it
/// (sampled ids included) in the ledger.
inline LedgerEntry run_summarize(const std::vector<LedgerEntry>& entries,
                                 const protocol::Protocol& protocol,
                                 provider::Client& client, const RunConfig& cfg,
                                 std::size_t n, std::uint64_t seed) {
    auto sample = sample_for_summary(entries, n, seed);
    std::vector<std::string> texts;
    std::vector<std::string> ids;
    for (const auto& s : sample) {
        texts.push_back(s.text);
        ids.push_back(s.article_id);
    }
    provider::CompletionRequest req;
    req.model_id = cfg.summary_model_id;
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    req.messages = protocol::summarize_prompt(protocol, texts, n);

    LedgerWriter writer(ledger_path(cfg));
    detail::MonotonicStamp stamp(cfg.deterministic);
    LedgerEntry e;
    e.run_id = cfg.run_id;
    e.step = StepId::summarize;
    e.prompt_template_hash = protocol.spec(StepId::summarize).template_hash;
    e.request = req;
    e.request_hash = provider::request_hash(req);
    e.sampled_article_ids = ids;
    e.status = Status::pending;
    e.started_us = stamp.next();
    writer.append(e);
    try {
        e.response = client.complete(req);
        e.status = e.response->refused() ? Status::failed : Status::completed;
        if (e.response->refused()) e.error = "content-policy refusal";
    } catch (const provider::ProviderError& ex) {
        e.status = Status::failed;
        e.error = ex.what();
    }
    e.finished_us = stamp.next();
    writer.append(e);
    return e;
}

}  // namespace redactlab::orchestrator
