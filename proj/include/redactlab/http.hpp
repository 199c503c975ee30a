// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 redactlab contributors

#pragma once

#include <string>

#include <httplib.h>

namespace redactlab::provider::detail {

struct HttpResponse {
    int status = 0;     // 0 = transport failure (connect/timeout)
    std::string body;
    std::string error;  // transport failure description
};

/// POSTs a JSON body to base_url + path. `base_url` may carry a path prefix
/// ("http://host:8080/mock"); it is spliced in front of `path`.
inline HttpResponse post_json(const std::string& base_url, const std::string& path,
                              const std::string& api_key, const std::string& body,
                              int timeout_s) {
    std::string origin = base_url;
    std::string prefix;
    auto scheme_end = base_url.find("://");
    if (scheme_end != std::string::npos) {
        auto slash = base_url.find('/', scheme_end + 3);
        if (slash != std::string::npos) {
            origin = base_url.substr(0, slash);
            prefix = base_url.substr(slash);
        }
    }
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client cli(origin);
    cli.set_connection_timeout(timeout_s, 0);
    cli.set_read_timeout(timeout_s, 0);
    cli.set_write_timeout(timeout_s, 0);

    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    auto res = cli.Post(prefix + path, headers, body, "application/json");
    if (!res) return {0, "", httplib::to_string(res.error())};
    return {res->status, res->body, ""};
}

}  // namespace redactlab::provider::detail
