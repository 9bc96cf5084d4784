#pragma once

// Deterministic local completion system. The completion depends only on the
// function name and the identifier-erased signature of the prompt, so every
// structure-consistent variant of one seed receives the same text. Fault
// rules perturb selected cases to emulate an inconsistent system.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "completest/backend/types.hpp"
#include "completest/metrics.hpp"
#include "completest/syntax/lexer.hpp"

namespace completest::backend {

enum class FaultAction : std::uint8_t { Scramble, Empty, Timeout, HttpError, Malformed, Delay, Replace };

[[nodiscard]] inline std::optional<FaultAction> parse_fault_action(std::string_view s) {
  static constexpr std::array<std::pair<std::string_view, FaultAction>, 7> kNames{{
      {"scramble", FaultAction::Scramble},
      {"empty", FaultAction::Empty},
      {"timeout", FaultAction::Timeout},
      {"http_error", FaultAction::HttpError},
      {"malformed", FaultAction::Malformed},
      {"delay", FaultAction::Delay},
      {"replace", FaultAction::Replace},
  }};
  for (const auto& [name, action] : kNames) {
    if (name == s) return action;
  }
  return std::nullopt;
}

class FaultRuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One fault rule. `scheme` empty means any scheme; `seed_pattern` must match
/// the whole seed id. `rate` in [0, 1] selects a deterministic subset of the
/// matching cases.
struct FaultRule {
  std::optional<SchemeId> scheme;
  std::string seed_pattern = ".*";
  FaultAction action = FaultAction::Scramble;
  int status = 500;
  int delay_ms = 0;
  double rate = 1.0;
  std::string text;
};

[[nodiscard]] inline std::vector<FaultRule> parse_fault_rules(const nlohmann::json& j) {
  if (!j.is_array()) throw FaultRuleError("fault rules must be a JSON array");
  std::vector<FaultRule> rules;
  for (const auto& item : j) {
    if (!item.is_object()) throw FaultRuleError("fault rule must be an object");
    FaultRule r;
    const std::string scheme = item.value("scheme", "*");
    if (scheme != "*") {
      r.scheme = parse_scheme(scheme);
      if (!r.scheme) throw FaultRuleError("unknown scheme in fault rule: " + scheme);
    }
    r.seed_pattern = item.value("seed", ".*");
    try {
      std::regex probe(r.seed_pattern);
    } catch (const std::regex_error& e) {
      throw FaultRuleError("bad seed pattern '" + r.seed_pattern + "': " + e.what());
    }
    const std::string action = item.value("action", "");
    const auto parsed = parse_fault_action(action);
    if (!parsed) throw FaultRuleError("unknown fault action: '" + action + "'");
    r.action = *parsed;
    r.status = item.value("status", 500);
    r.delay_ms = item.value("delay_ms", 0);
    r.rate = item.value("rate", 1.0);
    r.text = item.value("text", "");
    if (r.rate < 0.0 || r.rate > 1.0) throw FaultRuleError("fault rate must lie in [0, 1]");
    if (r.delay_ms < 0) throw FaultRuleError("delay_ms must be non-negative");
    rules.push_back(std::move(r));
  }
  return rules;
}

[[nodiscard]] inline std::vector<FaultRule> load_fault_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FaultRuleError("cannot read fault rules: " + path.string());
  try {
    return parse_fault_rules(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FaultRuleError("fault rules are not valid JSON: " + std::string(e.what()));
  }
}

[[nodiscard]] inline nlohmann::json to_json(const FaultRule& r) {
  nlohmann::json j;
  j["scheme"] = r.scheme ? std::string(to_string(*r.scheme)) : "*";
  j["seed"] = r.seed_pattern;
  j["action"] = static_cast<int>(r.action);
  j["status"] = r.status;
  j["delay_ms"] = r.delay_ms;
  j["rate"] = r.rate;
  j["text"] = r.text;
  return j;
}

namespace detail {

inline constexpr std::array<std::string_view, 16> kTemplateLines = {
    "result = {v}",
    "for {v} in range(len(nums)):",
    "if {v} is None:",
    "return {v}",
    "{v} = {v} + 1",
    "while left < right:",
    "total += {v}",
    "seen = set()",
    "count = {name}_count + 1",
    "if not {v}:",
    "stack.append({v})",
    "ans = max(ans, {v})",
    "{v} = dict()",
    "left, right = 0, len({v}) - 1",
    "return result",
    "else:",
};

inline constexpr std::array<std::string_view, 6> kTemplateVars = {"value", "item", "node", "total", "idx", "cur"};

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
    s.replace(p, from.size(), to);
  }
  return s;
}

// Function name plus the signature tokens with identifiers and literals erased.
inline std::string completion_key(std::string_view prompt) {
  std::vector<syntax::Token> tokens;
  try {
    tokens = syntax::tokenize(prompt);
  } catch (const syntax::LexError&) {
    return "raw:" + std::string(prompt);
  }
  std::size_t i = 0;
  while (i < tokens.size() && tokens[i].text(prompt) != "def") ++i;
  if (i + 1 >= tokens.size()) return "raw:" + std::string(prompt);
  std::string key = "fn=" + std::string(tokens[i + 1].text(prompt)) + "|sig=";
  int depth = 0;
  for (std::size_t k = i + 2; k < tokens.size(); ++k) {
    const auto& tok = tokens[k];
    const std::string_view text = tok.text(prompt);
    if (text == "(" || text == "[" || text == "{") ++depth;
    if (text == ")" || text == "]" || text == "}") --depth;
    switch (tok.kind) {
      case syntax::TokenKind::Name: key += syntax::is_keyword(text) ? std::string(text) : "ID"; break;
      case syntax::TokenKind::Number: key += "NUM"; break;
      case syntax::TokenKind::String: key += "STR"; break;
      default: key += text;
    }
    key += ' ';
    if (text == ":" && depth == 0) break;
  }
  return key;
}

inline std::string function_name_of(std::string_view key) {
  const auto start = key.find("fn=");
  if (start != 0) return "f";
  return std::string(key.substr(3, key.find('|') - 3));
}

}  // namespace detail

/// Code-like text chosen by hashing the completion key; truncated to
/// `max_new_tokens` whitespace tokens.
[[nodiscard]] inline std::string stub_completion(std::string_view prompt, int max_new_tokens) {
  const std::string key = detail::completion_key(prompt);
  const std::string name = detail::function_name_of(key);
  std::mt19937_64 rng(sha256_u64(key));
  const std::size_t lines = 3 + rng() % 4;
  std::string out;
  int budget = std::max(1, max_new_tokens);
  for (std::size_t l = 0; l < lines && budget > 0; ++l) {
    std::string line(detail::kTemplateLines[rng() % detail::kTemplateLines.size()]);
    line = detail::replace_all(line, "{v}", detail::kTemplateVars[rng() % detail::kTemplateVars.size()]);
    line = detail::replace_all(line, "{name}", name);
    std::string kept;
    for (const auto& word : metrics::whitespace_tokens(line)) {
      if (budget == 0) break;
      if (!kept.empty()) kept += ' ';
      kept += word;
      --budget;
    }
    out += "    " + kept + "\n";
  }
  return out;
}

/// Deterministic permutation of the characters of `text`.
[[nodiscard]] inline std::string scramble(std::string text, std::string_view salt) {
  std::mt19937_64 rng(sha256_u64(std::string(salt) + "\x1f" + text));
  for (std::size_t i = text.size(); i > 1; --i) std::swap(text[i - 1], text[rng() % i]);
  return text;
}

class StubBackend final : public Backend {
 public:
  explicit StubBackend(std::vector<FaultRule> rules = {}) : rules_(std::move(rules)) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rules_) {
      j.push_back(to_json(r));
      patterns_.emplace_back(r.seed_pattern);
    }
    id_ = "stub:v1:" + sha256_hex(j.dump()).substr(0, 16);
  }

  [[nodiscard]] std::string id() const override { return id_; }

  [[nodiscard]] CompletionOutcome complete(const CompletionRequest& request) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                   start)
          .count();
    };
    const CaseRef& ref = request.case_ref;
    std::string text = stub_completion(request.prompt, request.max_new_tokens);
    const FaultRule* rule = matching_rule(ref);
    if (rule == nullptr) return CompletionOutcome::success(ref, std::move(text), elapsed());
    switch (rule->action) {
      case FaultAction::Scramble:
        return CompletionOutcome::success(ref, scramble(std::move(text), ref.seed_id), elapsed());
      case FaultAction::Replace: return CompletionOutcome::success(ref, rule->text, elapsed());
      case FaultAction::Empty: return CompletionOutcome::success(ref, "", elapsed());
      case FaultAction::Timeout:
        return CompletionOutcome::failure(ref, NoResultReason::Timeout, 0, elapsed());
      case FaultAction::HttpError:
        return CompletionOutcome::failure(ref, NoResultReason::HttpError, rule->status, elapsed());
      case FaultAction::Malformed:
        return CompletionOutcome::failure(ref, NoResultReason::Malformed, 0, elapsed());
      case FaultAction::Delay: {
        const auto jitter = rule->delay_ms == 0 ? 0 : sha256_u64(request.prompt) % (rule->delay_ms + 1);
        std::this_thread::sleep_for(std::chrono::milliseconds(jitter));
        return CompletionOutcome::success(ref, std::move(text), elapsed());
      }
    }
    return CompletionOutcome::success(ref, std::move(text), elapsed());
  }

  /// Number of complete() calls served so far.
  [[nodiscard]] std::size_t calls() const { return calls_.load(); }

 private:
  const FaultRule* matching_rule(const CaseRef& ref) const {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const FaultRule& r = rules_[i];
      if (r.scheme && *r.scheme != ref.scheme) continue;
      if (!std::regex_match(ref.seed_id, patterns_[i])) continue;
      if (r.rate < 1.0) {
        const auto draw = sha256_u64(std::to_string(i) + "|" + ref.seed_id + "|" +
                                     std::string(to_string(ref.scheme))) %
                          1000000;
        if (static_cast<double>(draw) >= r.rate * 1e6) continue;
      }
      return &r;
    }
    return nullptr;
  }

  std::vector<FaultRule> rules_;
  std::vector<std::regex> patterns_;
  std::string id_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace completest::backend
