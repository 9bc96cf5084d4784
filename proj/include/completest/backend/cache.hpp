#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include "completest/backend/types.hpp"

namespace completest::backend {

/// Persistent response cache in front of another backend. One JSON file per
/// key; transient failures (timeouts, HTTP errors) are never stored.
class CachedBackend final : public Backend {
 public:
  CachedBackend(Backend& inner, std::filesystem::path dir) : inner_(inner), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  [[nodiscard]] std::string id() const override { return inner_.id(); }

  [[nodiscard]] std::string key(const CompletionRequest& r) const {
    std::string material = inner_.id();
    material += '\0';
    material += std::to_string(r.max_new_tokens);
    material += '\0';
    material += r.prompt;
    return sha256_hex(material);
  }

  [[nodiscard]] std::filesystem::path entry_path(const CompletionRequest& r) const {
    return dir_ / (key(r) + ".json");
  }

  [[nodiscard]] CompletionOutcome complete(const CompletionRequest& request) override {
    const auto path = entry_path(request);
    if (auto hit = read_entry(path)) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      hit->case_ref = request.case_ref;
      return *hit;
    }
    misses_.fetch_add(1, std::memory_order_relaxed);
    CompletionOutcome outcome = inner_.complete(request);
    const bool transient = !outcome.completed() && (outcome.reason == NoResultReason::Timeout ||
                                                    outcome.reason == NoResultReason::HttpError);
    if (!transient) write_entry(path, outcome);
    return outcome;
  }

  [[nodiscard]] std::size_t hits() const { return hits_.load(); }
  [[nodiscard]] std::size_t misses() const { return misses_.load(); }

 private:
  static std::optional<CompletionOutcome> read_entry(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
      return outcome_from_json(nlohmann::json::parse(in));
    } catch (const std::exception&) {
      return std::nullopt;  // corrupt entry: treated as a miss and overwritten
    }
  }

  void write_entry(const std::filesystem::path& path, const CompletionOutcome& outcome) {
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << std::this_thread::get_id() << "."
             << counter_.fetch_add(1);
    const auto tmp = path.parent_path() / tmp_name.str();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) return;
      out << to_json(outcome).dump();
      if (!out) return;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) std::filesystem::remove(tmp, ec);
  }

  Backend& inner_;
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> counter_{0};
};

}  // namespace completest::backend
