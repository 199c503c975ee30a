// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "redactlab/http.hpp"
#include "redactlab/protocol.hpp"
#include "redactlab/sha256.hpp"

namespace redactlab::provider {

using protocol::Message;

class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-retryable credential failure (401/403).
class AuthError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Replay-mode lookup failure; the orchestrator adds step/article context.
class CassetteMissError : public ProviderError {
public:
    explicit CassetteMissError(const std::string& request_hash)
        : ProviderError("cassette miss for request_hash " + request_hash),
          request_hash_(request_hash) {}
    const std::string& request_hash() const { return request_hash_; }

private:
    std::string request_hash_;
};

struct Attempt {
    std::int64_t start_steady_us = 0;  // steady clock, for rate-limit audits
    std::int64_t wall_ms = 0;
    std::string request_hash;
    int http_status = 0;       // 0 = no HTTP response (connect/timeout)
    std::string outcome;       // "ok", "retryable", "auth", "fatal"
};

/// Retries exhausted; carries the attempt history for the audit trail.
class TransportError : public ProviderError {
public:
    TransportError(const std::string& what, std::vector<Attempt> attempts)
        : ProviderError(what), attempts_(std::move(attempts)) {}
    const std::vector<Attempt>& attempts() const { return attempts_; }

private:
    std::vector<Attempt> attempts_;
};

// --- request / result ----------------------------------------------------------

struct CompletionRequest {
    std::string model_id = "gpt-4-0613";
    double temperature = 0.0;
    std::vector<Message> messages;
    std::optional<int> max_output_tokens;
};

/// Canonical serialization hashed into the cassette key: sorted keys, UTF-8,
/// no whitespace. Exactly (model_id, temperature, messages) — token limits
/// and transport settings do not change identity.
inline std::string canonical_request_json(const CompletionRequest& req) {
    nlohmann::json j;
    j["model"] = req.model_id;
    j["temperature"] = req.temperature;
    auto msgs = nlohmann::json::array();
    for (const auto& m : req.messages) msgs.push_back({{"content", m.content}, {"role", m.role}});
    j["messages"] = msgs;
    return j.dump();
}

inline std::string request_hash(const CompletionRequest& req) {
    return sha256_hex(canonical_request_json(req));
}

enum class FinishReason { stop, length, content_filter, error, unknown };

inline std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::content_filter: return "content_filter";
        case FinishReason::error: return "error";
        case FinishReason::unknown: return "unknown";
    }
    return "unknown";
}

inline FinishReason finish_reason_from_string(std::string_view s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    if (s == "content_filter") return FinishReason::content_filter;
    if (s == "error") return FinishReason::error;
    return FinishReason::unknown;
}

struct CompletionResult {
    std::string output_text;
    FinishReason finish_reason = FinishReason::unknown;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
    std::int64_t timestamp_ms = 0;  // wall clock at completion
    std::string provider_request_id;

    /// Content-policy refusals are flagged results, not exceptions.
    bool refused() const { return finish_reason == FinishReason::content_filter; }
};

inline nlohmann::ordered_json result_to_json(const CompletionResult& r) {
    nlohmann::ordered_json j = {
        {"output_text", r.output_text},
        {"finish_reason", to_string(r.finish_reason)},
        {"prompt_tokens", r.prompt_tokens},
        {"completion_tokens", r.completion_tokens},
        {"latency_ms", r.latency_ms},
        {"timestamp_ms", r.timestamp_ms},
    };
    if (!r.provider_request_id.empty()) j["provider_request_id"] = r.provider_request_id;
    return j;
}

inline CompletionResult result_from_json(const nlohmann::json& j) {
    CompletionResult r;
    r.output_text = j.at("output_text").get<std::string>();
    r.finish_reason = finish_reason_from_string(j.at("finish_reason").get<std::string>());
    r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    r.provider_request_id = j.value("provider_request_id", std::string{});
    return r;
}

inline nlohmann::ordered_json request_to_json(const CompletionRequest& req) {
    auto msgs = nlohmann::ordered_json::array();
    for (const auto& m : req.messages)
        msgs.push_back(nlohmann::ordered_json{{"role", m.role}, {"content", m.content}});
    nlohmann::ordered_json j = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"messages", msgs},
    };
    if (req.max_output_tokens) j["max_tokens"] = *req.max_output_tokens;
    return j;
}

inline CompletionRequest request_from_json(const nlohmann::json& j) {
    CompletionRequest req;
    req.model_id = j.at("model").get<std::string>();
    req.temperature = j.at("temperature").get<double>();
    for (const auto& m : j.at("messages"))
        req.messages.push_back(
            {m.at("role").get<std::string>(), m.at("content").get<std::string>()});
    if (j.contains("max_tokens")) req.max_output_tokens = j["max_tokens"].get<int>();
    return req;
}

// --- cassette -------------------------------------------------------------------

enum class Mode { record, replay, passthrough };

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::record: return "record";
        case Mode::replay: return "replay";
        case Mode::passthrough: return "passthrough";
    }
    return "record";
}

inline Mode mode_from_string(std::string_view s) {
    if (s == "record") return Mode::record;
    if (s == "replay") return Mode::replay;
    if (s == "passthrough") return Mode::passthrough;
    throw ProviderError("unknown provider mode \"" + std::string(s) + "\"");
}

/// JSONL store of {request_hash, request, result}. Single-writer append,
/// many concurrent readers. Later entries for the same hash win on load.
class Cassette {
public:
    Cassette() = default;
    Cassette(const Cassette&) = delete;
    Cassette& operator=(const Cassette&) = delete;

    /// Opens (and reads, if present) the JSONL store at `path`; appends go
    /// back to the same file.
    explicit Cassette(const std::filesystem::path& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) return;  // absent file = empty cassette
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                nlohmann::json j = nlohmann::json::parse(line);
                entries_[j.at("request_hash").get<std::string>()] =
                    result_from_json(j.at("result"));
            } catch (const nlohmann::json::exception& e) {
                throw ProviderError("cassette " + path.string() + " line " +
                                    std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    std::optional<CompletionResult> lookup(const std::string& hash) const {
        std::lock_guard lock(mutex_);
        auto it = entries_.find(hash);
        if (it == entries_.end()) return std::nullopt;
        ++hits_[hash];
        return it->second;
    }

    void append(const std::string& hash, const CompletionRequest& req,
                const CompletionResult& result) {
        std::lock_guard lock(mutex_);
        entries_[hash] = result;
        if (path_.empty()) return;
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw ProviderError("cannot append to cassette: " + path_.string());
        nlohmann::ordered_json line = {
            {"request_hash", hash},
            {"request", request_to_json(req)},
            {"result", result_to_json(result)},
        };
        out << line.dump() << '\n';
        out.flush();
        if (!out) throw ProviderError("cassette write failed: " + path_.string());
    }

    std::map<std::string, std::size_t> hit_counts() const {
        std::lock_guard lock(mutex_);
        return hits_;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return entries_.size();
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, CompletionResult> entries_;
    mutable std::map<std::string, std::size_t> hits_;
    mutable std::mutex mutex_;
};

// --- client ---------------------------------------------------------------------

struct RetryPolicy {
    int max_retries = 3;              // additional attempts after the first
    int initial_backoff_ms = 500;
    double backoff_multiplier = 2.0;
    int max_rps = 2;                  // request starts per sliding second; 0 = unlimited
    int request_timeout_s = 120;
};

struct ClientConfig {
    std::string base_url = "https://api.openai.com";
    std::string api_key;              // resolved from the environment by the caller
    Mode mode = Mode::replay;
    RetryPolicy policy;
};

/// Single point of contact with the chat-completion endpoint. Thread-safe;
/// replay mode never touches the network.
class Client {
public:
    Client(ClientConfig config, Cassette* cassette)
        : config_(std::move(config)), cassette_(cassette) {
        if ((config_.mode == Mode::record || config_.mode == Mode::replay) && !cassette_)
            throw ProviderError("record/replay mode requires a cassette");
    }

    const ClientConfig& config() const { return config_; }

    CompletionResult complete(const CompletionRequest& request) {
        return complete(request, config_.policy);
    }

    CompletionResult complete(const CompletionRequest& request, const RetryPolicy& policy) {
        if (request.messages.empty())
            throw ProviderError("completion request has no messages");
        std::string hash = request_hash(request);

        if (config_.mode == Mode::replay) {
            auto hit = cassette_->lookup(hash);
            if (!hit) throw CassetteMissError(hash);
            return *hit;
        }

        CompletionResult result = network_complete(request, hash, policy);
        if (config_.mode == Mode::record) cassette_->append(hash, request, result);
        return result;
    }

    std::vector<Attempt> attempt_log() const {
        std::lock_guard lock(mutex_);
        return attempts_;
    }

private:
    CompletionResult network_complete(const CompletionRequest& request,
                                      const std::string& hash, const RetryPolicy& policy) {
        std::string body = request_to_json(request).dump();
        std::vector<Attempt> local_attempts;
        int backoff_ms = policy.initial_backoff_ms;

        for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms = static_cast<int>(backoff_ms * policy.backoff_multiplier);
            }
            wait_for_rate_slot(policy.max_rps);

            Attempt a;
            a.request_hash = hash;
            a.start_steady_us = steady_now_us();
            a.wall_ms = wall_now_ms();
            auto t0 = std::chrono::steady_clock::now();
            detail::HttpResponse resp = detail::post_json(
                config_.base_url, "/v1/chat/completions", config_.api_key, body,
                policy.request_timeout_s);
            auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
            a.http_status = resp.status;

            if (resp.status == 200) {
                a.outcome = "ok";
                log_attempt(a, local_attempts);
                CompletionResult result = parse_completion(resp.body);
                result.latency_ms = latency;
                result.timestamp_ms = wall_now_ms();
                return result;
            }
            if (resp.status == 401 || resp.status == 403) {
                a.outcome = "auth";
                log_attempt(a, local_attempts);
                throw AuthError("authentication failed (HTTP " +
                                std::to_string(resp.status) + ")");
            }
            bool retryable = resp.status == 0 || resp.status == 408 || resp.status == 429 ||
                             resp.status >= 500;
            a.outcome = retryable ? "retryable" : "fatal";
            log_attempt(a, local_attempts);
            if (!retryable)
                throw TransportError("provider returned HTTP " + std::to_string(resp.status) +
                                         ": " + resp.body.substr(0, 200),
                                     local_attempts);
        }
        throw TransportError("retries exhausted after " +
                                 std::to_string(policy.max_retries + 1) + " attempts",
                             local_attempts);
    }

    static CompletionResult parse_completion(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
            CompletionResult r;
            const auto& choice = j.at("choices").at(0);
            r.finish_reason =
                finish_reason_from_string(choice.value("finish_reason", "unknown"));
            // Refusals may come back with null content.
            const auto& msg = choice.at("message");
            if (msg.contains("content") && msg["content"].is_string())
                r.output_text = msg["content"].get<std::string>();
            if (j.contains("usage")) {
                r.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                r.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
            }
            r.provider_request_id = j.value("id", std::string{});
            return r;
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(std::string("malformed provider response: ") + e.what());
        }
    }

    void wait_for_rate_slot(int max_rps) {
        if (max_rps <= 0) return;
        using namespace std::chrono;
        while (true) {
            std::int64_t now = steady_now_us();
            std::int64_t window_start = now - 1'000'000;
            std::int64_t oldest_in_window = 0;
            std::size_t in_window = 0;
            {
                std::lock_guard lock(mutex_);
                for (auto it = starts_.rbegin(); it != starts_.rend(); ++it) {
                    if (*it <= window_start) break;
                    ++in_window;
                    oldest_in_window = *it;
                }
                if (in_window < static_cast<std::size_t>(max_rps)) {
                    starts_.push_back(now);
                    return;
                }
            }
            std::int64_t wait_us = oldest_in_window + 1'000'000 - now + 1000;
            std::this_thread::sleep_for(microseconds(std::max<std::int64_t>(wait_us, 1000)));
        }
    }

    void log_attempt(const Attempt& a, std::vector<Attempt>& local) {
        local.push_back(a);
        std::lock_guard lock(mutex_);
        attempts_.push_back(a);
    }

    static std::int64_t steady_now_us() {
        return std::chrono::duration_cast<std::chrono::microseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }

    static std::int64_t wall_now_ms() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    }

    ClientConfig config_;
    Cassette* cassette_;
    mutable std::mutex mutex_;
    std::vector<Attempt> attempts_;
    std::vector<std::int64_t> starts_;  // rate-limit window, steady µs
};

}  // namespace redactlab::provider
