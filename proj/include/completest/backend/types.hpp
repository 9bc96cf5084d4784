#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "json.hpp"

#include "completest/mutate.hpp"

namespace completest::backend {

/// Lowercase hex SHA-256 of `data`.
[[nodiscard]] inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

/// First 8 bytes of the SHA-256 digest as an integer.
[[nodiscard]] inline std::uint64_t sha256_u64(std::string_view data) {
  return std::stoull(sha256_hex(data).substr(0, 16), nullptr, 16);
}

struct CaseRef {
  std::string seed_id;
  SchemeId scheme = SchemeId::Original;
  bool operator==(const CaseRef&) const = default;
};

struct CompletionRequest {
  std::string prompt;
  int max_new_tokens = 128;
  CaseRef case_ref;
};

enum class NoResultReason : std::uint8_t { Timeout, Empty, HttpError, Malformed };

[[nodiscard]] constexpr std::string_view to_string(NoResultReason r) {
  switch (r) {
    case NoResultReason::Timeout: return "timeout";
    case NoResultReason::Empty: return "empty";
    case NoResultReason::HttpError: return "http_error";
    case NoResultReason::Malformed: return "malformed";
  }
  return "?";
}

[[nodiscard]] inline std::optional<NoResultReason> parse_reason(std::string_view s) {
  for (auto r : {NoResultReason::Timeout, NoResultReason::Empty, NoResultReason::HttpError,
                 NoResultReason::Malformed}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

struct CompletionOutcome {
  CaseRef case_ref;
  /// Set iff the request completed with non-empty text.
  std::optional<std::string> text;
  NoResultReason reason = NoResultReason::Empty;
  /// HTTP status for HttpError; 0 when the connection itself failed.
  int http_code = 0;
  std::int64_t latency_ms = 0;

  [[nodiscard]] bool completed() const { return text.has_value(); }

  static CompletionOutcome success(CaseRef ref, std::string completion, std::int64_t latency = 0) {
    CompletionOutcome o;
    o.case_ref = std::move(ref);
    o.latency_ms = latency;
    if (completion.empty()) {
      o.reason = NoResultReason::Empty;
    } else {
      o.text = std::move(completion);
    }
    return o;
  }

  static CompletionOutcome failure(CaseRef ref, NoResultReason reason, int http_code = 0,
                                   std::int64_t latency = 0) {
    CompletionOutcome o;
    o.case_ref = std::move(ref);
    o.reason = reason;
    o.http_code = http_code;
    o.latency_ms = latency;
    return o;
  }

  /// "completed", or "no_result:<reason>" with ":<code>" for HTTP errors.
  [[nodiscard]] std::string status() const {
    if (completed()) return "completed";
    std::string s = "no_result:" + std::string(to_string(reason));
    if (reason == NoResultReason::HttpError) s += ":" + std::to_string(http_code);
    return s;
  }
};

inline constexpr std::string_view kOutcomeSchema = "completest.outcome.v1";

[[nodiscard]] inline nlohmann::json to_json(const CompletionOutcome& o) {
  nlohmann::json j;
  j["schema"] = kOutcomeSchema;
  j["seed_id"] = o.case_ref.seed_id;
  j["scheme"] = to_string(o.case_ref.scheme);
  if (o.completed()) {
    j["completion"] = *o.text;
  } else {
    j["no_result"] = to_string(o.reason);
    j["http_code"] = o.http_code;
  }
  j["latency_ms"] = o.latency_ms;
  return j;
}

/// Inverse of to_json; throws std::runtime_error on any schema mismatch.
[[nodiscard]] inline CompletionOutcome outcome_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != kOutcomeSchema) {
    throw std::runtime_error("unexpected outcome schema");
  }
  CompletionOutcome o;
  o.case_ref.seed_id = j.at("seed_id").get<std::string>();
  const auto scheme = parse_scheme(j.at("scheme").get<std::string>());
  if (!scheme) throw std::runtime_error("unknown scheme in outcome");
  o.case_ref.scheme = *scheme;
  o.latency_ms = j.at("latency_ms").get<std::int64_t>();
  if (j.contains("completion")) {
    o.text = j.at("completion").get<std::string>();
    if (o.text->empty()) throw std::runtime_error("completed outcome with empty text");
  } else {
    const auto reason = parse_reason(j.at("no_result").get<std::string>());
    if (!reason) throw std::runtime_error("unknown no-result reason");
    o.reason = *reason;
    o.http_code = j.at("http_code").get<int>();
  }
  return o;
}

/// A completion system. Implementations must be safe for concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Stable identity used in cache keys; changes whenever behavior would.
  [[nodiscard]] virtual std::string id() const = 0;
  [[nodiscard]] virtual CompletionOutcome complete(const CompletionRequest& request) = 0;
};

}  // namespace completest::backend
