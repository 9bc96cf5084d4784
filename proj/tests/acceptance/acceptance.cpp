// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances and time limits are pinned below.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "test_support.hpp"

#include "completest/completest.hpp"

using namespace completest;

namespace {

constexpr std::size_t kMinSeeds = 100;
constexpr double kShallowDistance = 0.1;
constexpr double kShallowFraction = 0.90;
constexpr std::size_t kMinExecutableFunctions = 20;
constexpr std::size_t kShortPairs = 50000;
constexpr std::size_t kShortMaxLength = 12;
constexpr std::size_t kLongPairs = 10000;
constexpr std::size_t kRandomMatrices = 1000;
constexpr std::size_t kRandomCampaigns = 1000;
constexpr std::size_t kCampaignSeeds = 100;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double limit_seconds;
  std::function<Verdict()> check;
};

std::filesystem::path seeds_file() { return support::fixtures() / "seeds.jsonl"; }

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::vector<std::size_t> python_parse_failures(const std::vector<std::string>& sources) {
  support::TempDir dir;
  support::write_file(dir / "sources.json", nlohmann::json(sources).dump());
  const auto r = support::run(std::string(COMPLETEST_PYTHON) + " " +
                              support::shell_quote(std::string(COMPLETEST_SUPPORT) + "/parse_check.py") + " " +
                              support::shell_quote((dir / "sources.json").string()));
  if (r.exit_code != 0) throw std::runtime_error("parse checker failed");
  return nlohmann::json::parse(r.output).get<std::vector<std::size_t>>();
}

struct CorpusVariants {
  std::vector<std::pair<PromptSplit, PromptCase>> cases;
  std::size_t seeds = 0;
  std::size_t defects = 0;
};

CorpusVariants corpus_variants() {
  CorpusVariants out;
  const auto load = load_corpus(seeds_file());
  out.seeds = load.seeds.size();
  for (const auto& seed : load.seeds) {
    PromptSplit split;
    try {
      split = split_prompt(seed);
    } catch (const NotSplittable&) {
      split = PromptSplit{seed.source, ""};
    }
    const auto set = generate_variants(seed, split);
    out.defects += set.defects.size();
    for (const auto& c : set.cases) out.cases.emplace_back(split, c);
  }
  return out;
}

Verdict mutant_validity() {
  const auto cv = corpus_variants();
  std::vector<std::string> prompts;
  std::size_t own_failures = 0;
  for (const auto& [split, c] : cv.cases) {
    prompts.push_back(c.prompt);
    try {
      (void)syntax::parse(c.prompt);
    } catch (const std::exception&) {
      ++own_failures;
    }
  }
  const auto python_failures = python_parse_failures(prompts).size();
  const bool pass = cv.seeds >= kMinSeeds && own_failures == 0 && python_failures == 0 && cv.defects == 0;
  return {pass, std::to_string(cv.seeds) + " seeds, " + std::to_string(prompts.size()) + " variants, " +
                    std::to_string(own_failures) + " parser failures, " + std::to_string(python_failures) +
                    " python ast failures, " + std::to_string(cv.defects) + " engine defects"};
}

struct LabelDistances {
  double seed_side = 0.0;
  double longer_side = 0.0;
};

LabelDistances oracle_distance(const std::string& seed, const std::string& mutant) {
  const auto a = syntax::parse(seed);
  const auto b = syntax::parse(mutant);
  std::vector<std::string> la, lb;
  for (auto l : a.erased_labels()) la.emplace_back(l);
  for (auto l : b.erased_labels()) lb.emplace_back(l);
  if (la.empty()) return lb.empty() ? LabelDistances{0.0, 0.0} : LabelDistances{1.0, 1.0};
  const auto m = static_cast<double>(oracle::lcs(la, lb));
  return {1.0 - m / static_cast<double>(la.size()), 1.0 - m / static_cast<double>(std::max(la.size(), lb.size()))};
}

Verdict structural_consistency() {
  const auto cv = corpus_variants();
  std::size_t shallow = 0, shallow_longer = 0, identifier = 0, identifier_zero = 0, disagreements = 0;
  for (const auto& [split, c] : cv.cases) {
    const double d = syntax::structural_distance(syntax::parse(split.prompt), syntax::parse(c.prompt));
    const auto reference = oracle_distance(split.prompt, c.prompt);
    if (std::abs(d - reference.seed_side) > 1e-12) ++disagreements;
    if (d <= kShallowDistance) ++shallow;
    // Informational: normalizing by the longer sequence also counts insertions.
    if (reference.longer_side <= kShallowDistance) ++shallow_longer;
    if (is_identifier_level(c.scheme)) {
      ++identifier;
      if (d == 0.0) ++identifier_zero;
    }
  }
  const double fraction = static_cast<double>(shallow) / static_cast<double>(cv.cases.size());
  const bool pass = fraction >= kShallowFraction && identifier == identifier_zero && disagreements == 0;
  const double longer = static_cast<double>(shallow_longer) / static_cast<double>(cv.cases.size());
  return {pass, fmt(100 * fraction, 2) + "% at distance <= 0.1 (need 90%; " + fmt(100 * longer, 2) +
                    "% if normalized by the longer tree), " + std::to_string(identifier_zero) + "/" +
                    std::to_string(identifier) + " renames at 0, " + std::to_string(disagreements) +
                    " LCS-oracle disagreements"};
}

Verdict semantics_preservation() {
  const auto functions = support::split_module(support::read_file(support::fixtures() / "solutions.py"));
  const auto inputs = nlohmann::json::parse(support::read_file(support::fixtures() / "solution_inputs.json"));
  nlohmann::json cases = nlohmann::json::array();
  std::size_t executable = 0;
  for (const auto& [name, source] : functions) {
    if (!inputs.contains(name) || inputs[name].empty()) continue;
    ++executable;
    for (SchemeId s : applicable_schemes(source)) {
      if (s == SchemeId::Original) continue;
      cases.push_back({{"name", name}, {"scheme", to_string(s)}, {"seed", source},
                       {"mutant", mutate_source(source, s)}, {"inputs", inputs[name]}});
    }
  }
  const auto mismatches = support::python_mismatches(cases);
  for (const auto& m : mismatches) std::cerr << "  mismatch: " << m << "\n";
  return {executable >= kMinExecutableFunctions && mismatches.empty(),
          std::to_string(executable) + " functions, " + std::to_string(cases.size()) + " mutants, " +
              std::to_string(mismatches.size()) + " mismatches"};
}

std::string encode_utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out += static_cast<char>(c);
    } else if (c < 0x800) {
      out += static_cast<char>(0xC0 | (c >> 6));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else if (c < 0x10000) {
      out += static_cast<char>(0xE0 | (c >> 12));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (c >> 18));
      out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (c & 0x3F));
    }
  }
  return out;
}

Verdict edit_similarity_equivalence() {
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0;
  auto check = [&](const std::u32string& a, const std::u32string& b) {
    const std::string ua = encode_utf8(a), ub = encode_utf8(b);
    const std::size_t expected = oracle::edit_distance(a, b);
    const std::size_t longest = std::max(a.size(), b.size());
    const double expected_sim = longest == 0 ? 1.0 : 1.0 - static_cast<double>(expected) / static_cast<double>(longest);
    if (metrics::levenshtein(ua, ub) != expected || metrics::edit_similarity(ua, ub) != expected_sim) ++mismatches;
  };
  auto random_string = [&](std::size_t len, std::u32string_view alphabet) {
    std::u32string s(len, U' ');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
  };
  for (std::size_t i = 0; i < kShortPairs; ++i) {
    check(random_string(rng() % (kShortMaxLength + 1), U"abc"), random_string(rng() % (kShortMaxLength + 1), U"abc"));
  }
  const std::u32string wide = U"abcdefgh (){}:=+\né中\U0001F600";
  for (std::size_t i = 0; i < kLongPairs; ++i) {
    auto a = random_string(13 + rng() % 48, wide);
    auto b = a;
    // Related pairs exercise long diagonals; unrelated ones the worst case.
    if (rng() % 2 == 0) {
      for (int e = static_cast<int>(rng() % 8); e > 0 && !b.empty(); --e) b[rng() % b.size()] = wide[rng() % wide.size()];
      b.insert(rng() % (b.size() + 1), 1, U'x');
    } else {
      b = random_string(13 + rng() % 48, wide);
    }
    check(a, b);
  }
  return {mismatches == 0, std::to_string(kShortPairs) + " short + " + std::to_string(kLongPairs) + " long pairs, " +
                               std::to_string(mismatches) + " mismatches"};
}

std::vector<std::size_t> flagged_indices(const OutlierVerdict& v) {
  std::vector<std::size_t> out;
  for (const auto& f : v.flagged) out.push_back(f.index);
  return out;
}

Verdict outlier_selection_fidelity() {
  std::vector<std::string> failures;
  const auto identical = build_matrix(std::vector<std::string>(9, "return total"));
  for (int T = 1; T <= 8; ++T) {
    if (!select_outliers(identical, T).flagged.empty()) failures.push_back("identical T=" + std::to_string(T));
  }
  std::vector<std::string> outs(8, "return total");
  outs.push_back("while True: pass");
  const auto deviant = build_matrix(outs);
  for (int T = 1; T <= 8; ++T) {
    const auto got = flagged_indices(select_outliers(deviant, T));
    std::vector<std::size_t> want{8};
    if (T == 1) want = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    if (got != want) failures.push_back("deviant T=" + std::to_string(T));
  }

  std::mt19937 rng(99);
  std::size_t violations = 0, oracle_disagreements = 0;
  for (std::size_t trial = 0; trial < kRandomMatrices; ++trial) {
    const std::size_t k = 4 + rng() % 7;
    SimilarityMatrix m(k);
    std::vector<std::vector<double>> dense(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        const double v = static_cast<double>(rng() % 9) / 8.0;
        m.set(i, j, v);
        dense[i][j] = dense[j][i] = v;
      }
    }
    std::vector<std::size_t> previous;
    for (int T = 1; T < static_cast<int>(k); ++T) {
      const auto current = flagged_indices(select_outliers(m, T));
      if (current != oracle::flagged_rows(dense, T)) ++oracle_disagreements;
      if (T > 1 && !std::includes(previous.begin(), previous.end(), current.begin(), current.end())) ++violations;
      previous = current;
    }
  }
  for (const auto& f : failures) std::cerr << "  fixture failed: " << f << "\n";
  return {failures.empty() && violations == 0 && oracle_disagreements == 0,
          "hand-traced fixtures " + std::string(failures.empty() ? "ok" : "FAILED") + ", " +
              std::to_string(kRandomMatrices) + " random matrices: " + std::to_string(violations) +
              " nesting violations, " + std::to_string(oracle_disagreements) + " brute-force disagreements"};
}

Verdict repair_correctness() {
  std::vector<std::string> failures;
  auto labeled = [](const std::vector<std::string>& texts) {
    std::vector<LabeledOutput> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({kAllSchemes[i], texts[i]});
    return out;
  };

  const auto same = repair(labeled({"x = 1", "x = 1", "x = 1", "x = 1"}), OutlierVerdict{});
  if (same.selected_scheme != SchemeId::Original || same.group_mean != 1.0) failures.push_back("all-identical");

  const auto three = repair(labeled({"aaaa", "aaab", "bbbb"}), OutlierVerdict{});
  const std::vector<double> want_means{0.375, 0.5, 0.125};
  bool three_ok = three.selected_output == "aaaa" && std::abs(three.group_mean - 1.0 / 3.0) < 1e-12;
  for (std::size_t i = 0; i < 3; ++i) three_ok = three_ok && std::abs(three.per_output_means[i].second - want_means[i]) < 1e-12;
  if (!three_ok) failures.push_back("three-output trace");

  const std::vector<std::string> five{"bcb", "cac", "bccb", "bca", "aabc"};
  const auto m5 = build_matrix(five);
  const auto v5 = select_outliers(m5, 3);
  const bool five_ok = flagged_indices(v5) == std::vector<std::size_t>{4} &&
                       repair(labeled(five), v5, &m5).selected_output == "bcb" &&
                       repair(labeled(five), OutlierVerdict{}, &m5).selected_output == "bccb";
  if (!five_ok) failures.push_back("outlier exclusion changes selection");

  // Randomized stub campaigns over small seed subsets with random fault rules.
  const auto all_seeds = load_corpus(seeds_file()).seeds;
  support::TempDir dir;
  std::mt19937 rng(7);
  const char* actions[] = {"scramble", "scramble", "replace", "empty", "timeout"};
  std::size_t flagged_selections = 0, repairs = 0, campaigns = 0;
  for (std::size_t c = 0; c < kRandomCampaigns; ++c) {
    std::string jsonl;
    for (int s = 0; s < 2; ++s) {
      const auto& seed = all_seeds[rng() % all_seeds.size()];
      jsonl += nlohmann::json{{"id", seed.id}, {"source", seed.source}}.dump() + "\n";
    }
    support::write_file(dir / "seeds.jsonl", jsonl);
    nlohmann::json rules = nlohmann::json::array();
    for (int r = static_cast<int>(rng() % 4); r >= 0; --r) {
      rules.push_back({{"scheme", to_string(kAllSchemes[rng() % kAllSchemes.size()])},
                       {"action", actions[rng() % 5]},
                       {"text", "pass  # " + std::to_string(rng() % 3)},
                       {"rate", 0.25 * static_cast<double>(1 + rng() % 4)}});
    }
    harness::CampaignConfig config;
    config.seeds = dir / "seeds.jsonl";
    config.threshold = 1 + static_cast<int>(rng() % 9);
    config.concurrency = 1;
    backend::StubBackend stub(backend::parse_fault_rules(rules));
    const auto report = harness::run_campaign(config, stub);
    ++campaigns;
    for (const auto& rec : report.records) {
      if (!rec.repair) continue;
      ++repairs;
      for (const auto& v : rec.variants) {
        if (v.scheme == rec.repair->selected_scheme && v.flagged) ++flagged_selections;
      }
    }
  }
  for (const auto& f : failures) std::cerr << "  fixture failed: " << f << "\n";
  return {failures.empty() && flagged_selections == 0 && repairs > 0,
          "3 fixtures " + std::string(failures.empty() ? "ok" : "FAILED") + ", " + std::to_string(campaigns) +
              " random campaigns, " + std::to_string(repairs) + " repairs, " + std::to_string(flagged_selections) +
              " selections from flagged outputs"};
}

std::string records_jsonl(const std::vector<harness::SeedRecord>& records, const std::filesystem::path& path) {
  harness::write_records(path, records);
  return support::read_file(path);
}

Verdict determinism_and_improvement() {
  harness::CampaignConfig config;
  config.seeds = seeds_file();
  config.seed_limit = kCampaignSeeds;
  const auto rules = backend::parse_fault_rules(nlohmann::json::parse(R"([{"scheme":"ORIGINAL","action":"scramble"}])"));
  support::TempDir dir;
  backend::StubBackend first_stub(rules);
  const auto first = harness::run_campaign(config, first_stub);
  backend::StubBackend second_stub(rules);
  const auto second = harness::run_campaign(config, second_stub);
  const bool identical =
      records_jsonl(first.records, dir / "a.jsonl") == records_jsonl(second.records, dir / "b.jsonl");
  const auto& s = first.summary;
  const double bleu = s.bleu ? s.bleu->ratio.value_or(0) : 0;
  const double edit = s.edit_sim ? s.edit_sim->ratio.value_or(0) : 0;
  return {s.seeds == kCampaignSeeds && identical && bleu > 0 && edit > 0,
          std::to_string(s.seeds) + " seeds at T = " + std::to_string(config.threshold) + ", BLEU ratio " +
              fmt(bleu) + ", edit-sim ratio " + fmt(edit) + ", reports " +
              (identical ? "byte-identical" : "DIFFER")};
}

Verdict no_result_handling() {
  harness::CampaignConfig config;
  config.seeds = seeds_file();
  config.seed_limit = kCampaignSeeds;
  config.threshold = 3;
  backend::StubBackend stub(backend::parse_fault_rules(nlohmann::json::parse(R"([
    {"scheme":"INI","action":"empty"},
    {"scheme":"GRA_R","action":"timeout"},
    {"scheme":"REP_C","action":"timeout","rate":0.5},
    {"scheme":"*","seed":".*::.*_.*","action":"empty","rate":0.2}
  ])")));
  const auto report = harness::run_campaign(config, stub);
  const auto& s = report.summary;
  std::size_t variants = 0, recorded_empty = 0, recorded_timeout = 0;
  for (const auto& r : report.records) {
    for (const auto& v : r.variants) {
      ++variants;
      recorded_empty += v.status == "no_result:empty" ? 1 : 0;
      recorded_timeout += v.status == "no_result:timeout" ? 1 : 0;
    }
  }
  const std::size_t empty = s.no_result_by_reason.at("empty");
  const std::size_t timeout = s.no_result_by_reason.at("timeout");
  const bool identities = s.completed + s.no_result == s.dispatched && s.dispatched == variants &&
                          empty == recorded_empty && timeout == recorded_timeout &&
                          empty + timeout == s.no_result;
  return {identities && s.seeds == kCampaignSeeds && empty >= kCampaignSeeds && timeout >= kCampaignSeeds,
          std::to_string(s.dispatched) + " dispatched = " + std::to_string(s.completed) + " completed + " +
              std::to_string(s.no_result) + " no-result (" + std::to_string(empty) + " empty, " +
              std::to_string(timeout) + " timeout), " + std::to_string(s.untestable) + " untestable seeds"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "mutant validity", 10, mutant_validity},
      {2, "structural consistency", 30, structural_consistency},
      {3, "semantics preservation", 30, semantics_preservation},
      {4, "edit-similarity oracle equivalence", 60, edit_similarity_equivalence},
      {5, "outlier selection fidelity", 60, outlier_selection_fidelity},
      {6, "repair correctness", 60, repair_correctness},
      {7, "end-to-end determinism and improvement", 120, determinism_and_improvement},
      {8, "no-result handling", 60, no_result_handling},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << "criterion " << c.number << ": " << (pass ? "PASS" : "FAIL") << "  " << c.name << "  ("
              << v.detail << "; " << fmt(seconds, 2) << " s, limit " << fmt(c.limit_seconds, 0) << " s"
              << (in_time ? "" : ", TOO SLOW") << ")" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
