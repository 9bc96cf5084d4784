#pragma once

// JSON-over-HTTP completion client:
//   POST <url>  {"prompt": str, "max_new_tokens": int}  ->  200 {"completion": str}

#include <chrono>
#include <regex>
#include <string>
#include <thread>

#include "httplib.h"

#include "completest/backend/types.hpp"

namespace completest::backend {

struct HttpOptions {
  std::string url;
  std::string bearer_token;
  std::chrono::milliseconds timeout{60000};
  int retries = 2;
  std::chrono::milliseconds backoff{250};
};

class HttpConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

[[nodiscard]] inline ParsedUrl parse_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/?#]+)([^#]*)$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw HttpConfigError("not an http(s) URL: " + url);
  ParsedUrl out{m[1].str(), m[2].str()};
  if (out.path.empty()) out.path = "/";
  return out;
}

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpOptions options) : options_(std::move(options)), url_(parse_url(options_.url)) {
    if (options_.retries < 0) throw HttpConfigError("retries must be non-negative");
  }

  [[nodiscard]] std::string id() const override { return "http:" + options_.url; }

  [[nodiscard]] CompletionOutcome complete(const CompletionRequest& request) override {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                   start)
          .count();
    };
    const std::string body =
        nlohmann::json{{"prompt", request.prompt}, {"max_new_tokens", request.max_new_tokens}}.dump();
    httplib::Headers headers;
    if (!options_.bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.bearer_token);
    }

    CompletionOutcome last = CompletionOutcome::failure(request.case_ref, NoResultReason::HttpError);
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
      httplib::Client client(url_.origin);
      client.set_connection_timeout(options_.timeout);
      client.set_read_timeout(options_.timeout);
      client.set_write_timeout(options_.timeout);
      const auto res = client.Post(url_.path, headers, body, "application/json");

      if (!res) {
        const auto err = res.error();
        const bool timed_out = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout;
        last = CompletionOutcome::failure(
            request.case_ref, timed_out ? NoResultReason::Timeout : NoResultReason::HttpError, 0,
            elapsed());
        continue;
      }
      if (res->status != 200) {
        last = CompletionOutcome::failure(request.case_ref, NoResultReason::HttpError, res->status,
                                          elapsed());
        if (res->status >= 500 || res->status == 429) continue;
        return last;
      }
      const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("completion") ||
          !parsed["completion"].is_string()) {
        return CompletionOutcome::failure(request.case_ref, NoResultReason::Malformed, 0, elapsed());
      }
      return CompletionOutcome::success(request.case_ref, parsed["completion"].get<std::string>(),
                                        elapsed());
    }
    return last;
  }

 private:
  HttpOptions options_;
  ParsedUrl url_;
};

}  // namespace completest::backend
