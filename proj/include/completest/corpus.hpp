#pragma once

// Seed ingestion: load single-function Python sources from a directory or a
// JSONL file, keep those that parse and fall inside the token-length window,
// and split each into a prompt half and a ground-truth half.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "completest/syntax/lexer.hpp"
#include "completest/syntax/parser.hpp"
#include "completest/syntax/scope.hpp"

namespace completest {

struct SeedProgram {
  std::string id;
  std::string source;
  std::string function_name;
  std::size_t token_count = 0;
};

struct PromptSplit {
  std::string prompt;
  std::string ground_truth;
};

struct SkipRecord {
  std::string location;
  std::string reason;
};

struct CorpusLoad {
  std::vector<SeedProgram> seeds;
  std::vector<SkipRecord> skipped;
  std::vector<std::string> warnings;
};

struct CorpusOptions {
  std::size_t min_tokens = 32;
  std::size_t max_tokens = 2048;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSplittable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSeed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validates one function source and builds its SeedProgram. `id_hint` is
/// used verbatim when non-empty; otherwise the function name is the id.
[[nodiscard]] inline SeedProgram make_seed(const std::string& id_hint, std::string source,
                                           const CorpusOptions& options = {}) {
  std::optional<syntax::SyntaxTree> tree;
  try {
    tree.emplace(syntax::parse(source));
  } catch (const syntax::ParseError& e) {
    throw InvalidSeed(std::string("parse error: ") + e.what());
  }
  syntax::NodeId fn = syntax::kNoNode;
  try {
    fn = syntax::find_function(*tree);
  } catch (const syntax::AnalysisError& e) {
    throw InvalidSeed(e.what());
  }
  SeedProgram seed;
  seed.function_name = std::string(syntax::function_name(*tree, fn));
  seed.token_count = syntax::count_tokens(source);
  if (seed.token_count < options.min_tokens || seed.token_count > options.max_tokens) {
    throw InvalidSeed("token count " + std::to_string(seed.token_count) + " outside [" +
                      std::to_string(options.min_tokens) + ", " +
                      std::to_string(options.max_tokens) + "]");
  }
  seed.id = id_hint.empty() ? seed.function_name : id_hint;
  seed.source = std::move(source);
  return seed;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void load_directory(const std::filesystem::path& root, const CorpusOptions& options,
                           CorpusLoad& out) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".py") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string rel = std::filesystem::relative(file, root).generic_string();
    try {
      SeedProgram seed = make_seed("", read_file(file), options);
      seed.id = rel + "::" + seed.function_name;
      out.seeds.push_back(std::move(seed));
    } catch (const InvalidSeed& e) {
      out.skipped.push_back({rel, e.what()});
    } catch (const CorpusError& e) {
      out.skipped.push_back({rel, e.what()});
    }
  }
}

inline void load_jsonl(const std::filesystem::path& file, const CorpusOptions& options,
                       CorpusLoad& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + file.string());
  std::set<std::string> seen_paths;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.filename().string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      out.skipped.push_back({where, std::string("malformed JSON: ") + e.what()});
      continue;
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("source") || !record["source"].is_string()) {
      out.skipped.push_back({where, "record lacks string fields 'id' and 'source'"});
      continue;
    }
    const auto id = record["id"].get<std::string>();
    if (record.contains("path") && record["path"].is_string()) {
      const auto path = record["path"].get<std::string>();
      if (!seen_paths.insert(path).second) {
        out.skipped.push_back({where, "duplicate path '" + path + "'"});
        continue;
      }
    }
    if (seen_ids.count(id) != 0) {
      out.skipped.push_back({where, "duplicate id '" + id + "'"});
      continue;
    }
    try {
      out.seeds.push_back(make_seed(id, record["source"].get<std::string>(), options));
      seen_ids.insert(id);
    } catch (const InvalidSeed& e) {
      out.skipped.push_back({where + " (" + id + ")", e.what()});
    }
  }
}

}  // namespace detail

/// Loads seeds from a directory of .py files or a JSONL file. Individual bad
/// inputs are skipped and recorded; an unreadable root is fatal.
[[nodiscard]] inline CorpusLoad load_corpus(const std::filesystem::path& root,
                                            const CorpusOptions& options = {}) {
  std::error_code ec;
  if (!std::filesystem::exists(root, ec)) throw CorpusError("seed path does not exist: " + root.string());
  CorpusLoad out;
  if (std::filesystem::is_directory(root, ec)) {
    detail::load_directory(root, options, out);
  } else {
    detail::load_jsonl(root, options, out);
  }
  std::sort(out.seeds.begin(), out.seeds.end(),
            [](const SeedProgram& a, const SeedProgram& b) { return a.id < b.id; });
  if (out.seeds.empty()) out.warnings.push_back("no usable seeds in " + root.string());
  return out;
}

namespace detail {

// End offset of the last byte-consuming token inside [begin, end).
inline std::uint32_t last_token_end(const syntax::SyntaxTree& tree, std::uint32_t end) {
  std::uint32_t best = 0;
  for (const auto& tok : tree.tokens()) {
    if (tok.begin >= end) break;
    if (tok.size() > 0 && tok.end <= end) best = tok.end;
  }
  return best;
}

inline std::uint32_t first_token_line(const syntax::SyntaxTree& tree, std::uint32_t begin) {
  for (const auto& tok : tree.tokens()) {
    if (tok.begin >= begin && tok.size() > 0) return tok.line;
  }
  return 0;
}

inline std::uint32_t last_token_line(const syntax::SyntaxTree& tree, std::uint32_t end) {
  std::uint32_t line = 0;
  for (const auto& tok : tree.tokens()) {
    if (tok.begin >= end) break;
    if (tok.size() > 0 && tok.end <= end) {
      // Multi-line strings end on a later line than they start.
      line = tok.line + static_cast<std::uint32_t>(std::count(
                            tree.source().begin() + tok.begin, tree.source().begin() + tok.end, '\n'));
      if (tok.kind == syntax::TokenKind::Newline) line = tok.line;
    }
  }
  return line;
}

}  // namespace detail

/// Splits a function at the top-level body statement boundary whose
/// preceding line count is closest to half the body's line count (earlier
/// boundary on ties). The prompt keeps the signature and the first part.
[[nodiscard]] inline PromptSplit split_function(std::string_view source) {
  const auto tree = syntax::parse(source);
  const auto fn = syntax::find_function(tree);
  const auto stmts = syntax::body_statements(tree, fn);
  if (stmts.size() < 2) throw NotSplittable("function body has fewer than two statements");

  const std::uint32_t body_first = detail::first_token_line(tree, tree.node(stmts.front()).begin);
  const std::uint32_t body_last = detail::last_token_line(tree, tree.node(stmts.back()).end);
  const std::int64_t body_lines = static_cast<std::int64_t>(body_last) - body_first + 1;

  std::size_t best = 0;
  std::int64_t best_gap = -1;
  for (std::size_t i = 0; i + 1 < stmts.size(); ++i) {
    const std::int64_t preceding =
        static_cast<std::int64_t>(detail::first_token_line(tree, tree.node(stmts[i + 1]).begin)) -
        body_first;
    const std::int64_t gap = std::abs(2 * preceding - body_lines);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  const std::uint32_t cut = detail::last_token_end(tree, tree.node(stmts[best]).end);
  return PromptSplit{std::string(source.substr(0, cut)), std::string(source.substr(cut))};
}

[[nodiscard]] inline PromptSplit split_prompt(const SeedProgram& seed) {
  return split_function(seed.source);
}

}  // namespace completest
