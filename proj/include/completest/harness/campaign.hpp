#pragma once

// Campaign orchestration in two phases: collect() mutates every seed and
// gathers completions and similarity matrices; analyze() applies the oracle,
// repair and scoring for one threshold. Threshold sweeps reuse a collection.

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "completest/backend/cache.hpp"
#include "completest/backend/dispatch.hpp"
#include "completest/backend/http.hpp"
#include "completest/backend/stub.hpp"
#include "completest/corpus.hpp"
#include "completest/harness/report.hpp"
#include "completest/metrics.hpp"
#include "completest/mutate.hpp"
#include "completest/oracle.hpp"
#include "completest/repair.hpp"

namespace completest::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CampaignConfig {
  std::filesystem::path seeds;
  /// "stub" or an http(s) URL.
  std::string backend = "stub";
  std::filesystem::path fault_rules;
  int threshold = 9;
  std::set<SchemeId> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  int max_new_tokens = 128;
  std::size_t concurrency = 4;
  double rate_limit = 0.0;
  std::filesystem::path cache_dir;
  std::filesystem::path out;
  std::size_t seed_limit = 0;
  std::string bearer_token;
  int timeout_ms = 60000;
  CorpusOptions corpus;
  MutationOptions mutation;
};

inline constexpr int kMaxThreshold = 9;

inline void validate(const CampaignConfig& c) {
  if (c.threshold < 1 || c.threshold > kMaxThreshold) {
    throw ConfigError("threshold must lie in [1, " + std::to_string(kMaxThreshold) + "]");
  }
  if (c.schemes.count(SchemeId::Original) == 0) throw ConfigError("ORIGINAL cannot be disabled");
  if (c.max_new_tokens <= 0) throw ConfigError("max-new-tokens must be positive");
  if (c.concurrency == 0) throw ConfigError("concurrency must be positive");
  if (c.rate_limit < 0) throw ConfigError("rate limit must be non-negative");
  if (c.timeout_ms <= 0) throw ConfigError("timeout must be positive");
  if (c.backend != "stub" && c.backend.rfind("http://", 0) != 0 && c.backend.rfind("https://", 0) != 0) {
    throw ConfigError("backend must be 'stub' or an http(s) URL");
  }
  if (c.backend != "stub" && !c.fault_rules.empty()) {
    throw ConfigError("fault rules apply to the stub backend only");
  }
}

/// Parses a comma-separated scheme list; ORIGINAL is always included.
[[nodiscard]] inline std::set<SchemeId> parse_scheme_list(const std::string& list) {
  std::set<SchemeId> out{SchemeId::Original};
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    std::string name = list.substr(start, comma - start);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    if (!name.empty()) {
      const auto s = parse_scheme(name);
      if (!s) throw ConfigError("unknown scheme '" + name + "'");
      out.insert(*s);
    }
    start = comma + 1;
  }
  return out;
}

[[nodiscard]] inline std::unique_ptr<backend::Backend> make_backend(const CampaignConfig& c) {
  if (c.backend == "stub") {
    std::vector<backend::FaultRule> rules;
    if (!c.fault_rules.empty()) {
      try {
        rules = backend::load_fault_rules(c.fault_rules);
      } catch (const backend::FaultRuleError& e) {
        throw ConfigError(e.what());
      }
    }
    return std::make_unique<backend::StubBackend>(std::move(rules));
  }
  backend::HttpOptions opts;
  opts.url = c.backend;
  opts.bearer_token = c.bearer_token;
  opts.timeout = std::chrono::milliseconds(c.timeout_ms);
  try {
    return std::make_unique<backend::HttpBackend>(std::move(opts));
  } catch (const backend::HttpConfigError& e) {
    throw ConfigError(e.what());
  }
}

struct VariantOutcome {
  PromptCase prompt_case;
  std::string prompt_sha;
  backend::CompletionOutcome outcome;
};

struct SeedCollection {
  SeedProgram seed;
  /// Empty ground truth when the body could not be split.
  bool splittable = true;
  std::vector<VariantOutcome> variants;
  std::vector<MutationDefect> defects;
  /// Indices into `variants` of completed outcomes, in variant order.
  std::vector<std::size_t> completed;
  /// Present when at least kMinGroupSize outputs completed.
  std::optional<SimilarityMatrix> matrix;
};

struct Collection {
  std::vector<SeedCollection> seeds;
  std::vector<SkipRecord> skipped;
  std::vector<std::string> warnings;
  std::string backend_id;
};

/// Builds every seed's prompt cases without contacting a backend.
[[nodiscard]] inline std::vector<std::pair<SeedProgram, VariantSet>> build_variants(
    const std::vector<SeedProgram>& seeds, const CampaignConfig& config, std::vector<bool>* splittable = nullptr) {
  std::vector<std::pair<SeedProgram, VariantSet>> out;
  for (const auto& seed : seeds) {
    PromptSplit split;
    bool ok = true;
    try {
      split = split_prompt(seed);
    } catch (const NotSplittable&) {
      split = PromptSplit{seed.source, ""};
      ok = false;
    }
    if (splittable != nullptr) splittable->push_back(ok);
    out.emplace_back(seed, generate_variants(seed, split, config.mutation, config.schemes));
  }
  return out;
}

/// Loads seeds, generates variants, dispatches completions and builds one
/// similarity matrix per testable seed.
[[nodiscard]] inline Collection collect(const CampaignConfig& config, backend::Backend& completer) {
  validate(config);
  CorpusLoad corpus;
  try {
    corpus = load_corpus(config.seeds, config.corpus);
  } catch (const CorpusError& e) {
    throw ConfigError(e.what());
  }
  if (config.seed_limit > 0 && corpus.seeds.size() > config.seed_limit) {
    corpus.seeds.resize(config.seed_limit);
  }
  if (corpus.seeds.empty()) throw ConfigError("no usable seeds under " + config.seeds.string());

  Collection col;
  col.skipped = std::move(corpus.skipped);
  col.warnings = std::move(corpus.warnings);
  col.backend_id = completer.id();

  std::vector<bool> splittable;
  auto variant_sets = build_variants(corpus.seeds, config, &splittable);
  std::vector<backend::CompletionRequest> requests;
  for (std::size_t s = 0; s < variant_sets.size(); ++s) {
    auto& [seed, set] = variant_sets[s];
    SeedCollection sc;
    sc.seed = seed;
    sc.splittable = splittable[s];
    sc.defects = std::move(set.defects);
    for (auto& pc : set.cases) {
      requests.push_back({pc.prompt, config.max_new_tokens, {pc.seed_id, pc.scheme}});
      sc.variants.push_back({std::move(pc), backend::sha256_hex(requests.back().prompt), {}});
    }
    col.seeds.push_back(std::move(sc));
  }

  std::unique_ptr<backend::CachedBackend> cached;
  backend::Backend* target = &completer;
  if (!config.cache_dir.empty()) {
    cached = std::make_unique<backend::CachedBackend>(completer, config.cache_dir);
    target = cached.get();
  }
  auto outcomes = backend::dispatch(*target, requests, {config.concurrency, config.rate_limit});

  std::size_t next = 0;
  for (auto& sc : col.seeds) {
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < sc.variants.size(); ++i) {
      sc.variants[i].outcome = std::move(outcomes[next++]);
      if (sc.variants[i].outcome.completed()) {
        sc.completed.push_back(i);
        texts.push_back(*sc.variants[i].outcome.text);
      }
    }
    if (texts.size() >= kMinGroupSize) sc.matrix = build_matrix(texts);
  }
  return col;
}

/// Oracle, repair and ground-truth scoring for one seed at threshold T.
[[nodiscard]] inline SeedRecord analyze_seed(const SeedCollection& sc, int T) {
  SeedRecord rec;
  rec.seed_id = sc.seed.id;
  rec.T = T;
  for (const auto& v : sc.variants) {
    rec.variants.push_back({v.prompt_case.scheme, v.prompt_sha, v.outcome.status(), false, std::nullopt});
  }

  std::vector<LabeledOutput> outputs;
  std::vector<SchemeId> schemes;
  for (std::size_t i : sc.completed) {
    outputs.push_back({sc.variants[i].prompt_case.scheme, *sc.variants[i].outcome.text});
    schemes.push_back(outputs.back().scheme);
  }

  std::optional<std::string> repaired_text;
  if (sc.matrix) {
    OutlierVerdict verdict = select_outliers_clamped(*sc.matrix, T, schemes);
    verdict.seed_id = sc.seed.id;
    rec.median = verdict.median;
    for (std::size_t c = 0; c < sc.completed.size(); ++c) {
      auto& vr = rec.variants[sc.completed[c]];
      vr.below_median_count = verdict.below_median_counts[c];
      vr.flagged = verdict.is_flagged(c);
    }
    try {
      const RepairResult r = repair(outputs, verdict, &*sc.matrix);
      rec.repair = RepairRecord{r.selected_scheme, r.degenerate};
      repaired_text = r.selected_output;
    } catch (const RepairUnavailable&) {
    }
  }

  // Scores need a ground truth and a completed ORIGINAL output. Without a
  // repair the user keeps ORIGINAL's output, so "after" equals "before".
  if (sc.variants.empty()) return rec;
  const auto& first = sc.variants.front();
  if (sc.splittable && first.prompt_case.scheme == SchemeId::Original && first.outcome.completed()) {
    const std::string& truth = first.prompt_case.ground_truth;
    auto score = [&](const std::string& text) {
      return ScorePair{metrics::bleu(text, truth), metrics::edit_similarity(text, truth)};
    };
    rec.original = score(*first.outcome.text);
    rec.repaired = repaired_text ? score(*repaired_text) : *rec.original;
  }
  return rec;
}

[[nodiscard]] inline std::vector<SeedRecord> analyze(const Collection& col, int T) {
  std::vector<SeedRecord> records;
  records.reserve(col.seeds.size());
  for (const auto& sc : col.seeds) records.push_back(analyze_seed(sc, T));
  return records;
}

struct CampaignReport {
  std::vector<SeedRecord> records;
  Summary summary;
  std::vector<SkipRecord> skipped;
  std::vector<MutationDefect> defects;
  std::vector<std::string> warnings;
  std::string backend_id;
};

[[nodiscard]] inline CampaignReport run_campaign(const CampaignConfig& config, backend::Backend& completer) {
  const Collection col = collect(config, completer);
  CampaignReport report;
  report.records = analyze(col, config.threshold);
  report.summary = summarize(report.records);
  report.skipped = col.skipped;
  report.warnings = col.warnings;
  report.backend_id = col.backend_id;
  for (const auto& sc : col.seeds) {
    report.defects.insert(report.defects.end(), sc.defects.begin(), sc.defects.end());
  }
  return report;
}

[[nodiscard]] inline CampaignReport run_campaign(const CampaignConfig& config) {
  validate(config);
  auto completer = make_backend(config);
  return run_campaign(config, *completer);
}

/// Total flagged outputs per threshold over one collection. Thresholds are
/// deduplicated and sorted ascending.
[[nodiscard]] inline std::vector<std::pair<int, std::size_t>> sweep_thresholds(const Collection& col,
                                                                               std::vector<int> thresholds) {
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<std::pair<int, std::size_t>> out;
  for (int T : thresholds) {
    if (T < 1) throw ConfigError("thresholds must be positive");
    std::size_t flagged = 0;
    for (const auto& sc : col.seeds) {
      if (sc.matrix) flagged += select_outliers_clamped(*sc.matrix, T).flagged.size();
    }
    out.emplace_back(T, flagged);
  }
  return out;
}

}  // namespace completest::harness
