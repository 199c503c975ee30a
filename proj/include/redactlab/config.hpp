// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "redactlab/provider.hpp"

namespace redactlab::config {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Operator-facing configuration file (JSON). Everything has a default; the
/// file only needs the keys it wants to override.
struct AppConfig {
    std::string base_url = "https://api.openai.com";
    std::string model_id = "gpt-4-0613";
    std::string summary_model_id = "claude-2.1";
    double temperature = 0.0;
    int max_rps = 2;
    int max_retries = 3;
    int initial_backoff_ms = 500;
    double backoff_multiplier = 2.0;
    int request_timeout_s = 120;
    std::string cassette_path = "cassette.jsonl";
    provider::Mode mode = provider::Mode::replay;
    std::string prompts_dir = "prompts";
    std::string api_key_env = "REDACTLAB_API_KEY";
    std::optional<int> max_output_tokens;
    bool parallel_articles = false;
    int worker_threads = 4;
    bool retry_failed_on_resume = true;
    std::optional<int> min_redaction_rating;
    bool fail_on_article_error = true;
};

inline AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        std::ostringstream ss;
        ss << in.rdbuf();
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config JSON: " + std::string(e.what()));
    }
    AppConfig c;
    try {
        c.base_url = j.value("base_url", c.base_url);
        c.model_id = j.value("model_id", c.model_id);
        c.summary_model_id = j.value("summary_model_id", c.summary_model_id);
        c.temperature = j.value("temperature", c.temperature);
        c.max_rps = j.value("max_rps", c.max_rps);
        c.max_retries = j.value("max_retries", c.max_retries);
        c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
        c.backoff_multiplier = j.value("backoff_multiplier", c.backoff_multiplier);
        c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
        c.cassette_path = j.value("cassette_path", c.cassette_path);
        if (j.contains("mode"))
            c.mode = provider::mode_from_string(j["mode"].get<std::string>());
        c.prompts_dir = j.value("prompts_dir", c.prompts_dir);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        if (j.contains("max_output_tokens"))
            c.max_output_tokens = j["max_output_tokens"].get<int>();
        c.parallel_articles = j.value("parallel_articles", c.parallel_articles);
        c.worker_threads = j.value("worker_threads", c.worker_threads);
        c.retry_failed_on_resume = j.value("retry_failed_on_resume", c.retry_failed_on_resume);
        if (j.contains("min_redaction_rating"))
            c.min_redaction_rating = j["min_redaction_rating"].get<int>();
        c.fail_on_article_error = j.value("fail_on_article_error", c.fail_on_article_error);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config value: " + std::string(e.what()));
    }
    return c;
}

inline std::string resolve_api_key(const AppConfig& c) {
    const char* v = std::getenv(c.api_key_env.c_str());
    return v ? v : "";
}

inline provider::ClientConfig client_config(const AppConfig& c) {
    provider::ClientConfig cc;
    cc.base_url = c.base_url;
    cc.api_key = resolve_api_key(c);
    cc.mode = c.mode;
    cc.policy.max_retries = c.max_retries;
    cc.policy.initial_backoff_ms = c.initial_backoff_ms;
    cc.policy.backoff_multiplier = c.backoff_multiplier;
    cc.policy.max_rps = c.max_rps;
    cc.policy.request_timeout_s = c.request_timeout_s;
    return cc;
}

}  // namespace redactlab::config
