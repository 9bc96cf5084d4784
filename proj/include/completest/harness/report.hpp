#pragma once

// Per-seed JSONL records and the campaign summary derived from them. The
// summary is a pure function of the records so `report` can re-render it.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "completest/metrics.hpp"
#include "completest/mutate.hpp"

namespace completest::harness {

using Json = nlohmann::ordered_json;

struct VariantRecord {
  SchemeId scheme = SchemeId::Original;
  std::string prompt_sha;
  std::string status;
  bool flagged = false;
  std::optional<std::size_t> below_median_count;
};

struct ScorePair {
  double bleu = 0.0;
  double edit_sim = 0.0;
};

struct RepairRecord {
  SchemeId selected_scheme = SchemeId::Original;
  bool degenerate = false;
};

struct SeedRecord {
  std::string seed_id;
  std::vector<VariantRecord> variants;
  std::optional<double> median;
  int T = 0;
  std::optional<RepairRecord> repair;
  std::optional<ScorePair> original;
  std::optional<ScorePair> repaired;
};

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
Json nullable(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json scores_json(const std::optional<ScorePair>& s) {
  if (!s) return Json{{"bleu", nullptr}, {"edit_sim", nullptr}};
  return Json{{"bleu", s->bleu}, {"edit_sim", s->edit_sim}};
}

inline std::optional<ScorePair> scores_from(const Json& j) {
  if (!j.is_object() || j.value("bleu", Json()).is_null() || j.value("edit_sim", Json()).is_null()) {
    return std::nullopt;
  }
  return ScorePair{j.at("bleu").get<double>(), j.at("edit_sim").get<double>()};
}

inline SchemeId scheme_from(const Json& j) {
  const auto s = parse_scheme(j.get<std::string>());
  if (!s) throw ReportError("unknown scheme '" + j.get<std::string>() + "'");
  return *s;
}

}  // namespace detail

[[nodiscard]] inline Json to_json(const SeedRecord& r) {
  Json variants = Json::array();
  for (const auto& v : r.variants) {
    variants.push_back(Json{{"scheme", to_string(v.scheme)},
                            {"prompt_sha", v.prompt_sha},
                            {"status", v.status},
                            {"flagged", v.flagged},
                            {"below_median_count", detail::nullable(v.below_median_count)}});
  }
  Json repair = Json{{"selected_scheme", nullptr}, {"degenerate", nullptr}};
  if (r.repair) {
    repair = Json{{"selected_scheme", to_string(r.repair->selected_scheme)},
                  {"degenerate", r.repair->degenerate}};
  }
  return Json{{"seed_id", r.seed_id},
              {"variants", std::move(variants)},
              {"median", detail::nullable(r.median)},
              {"T", r.T},
              {"repair", std::move(repair)},
              {"metrics",
               Json{{"original", detail::scores_json(r.original)},
                    {"repaired", detail::scores_json(r.repaired)}}}};
}

[[nodiscard]] inline SeedRecord record_from_json(const Json& j) {
  try {
    SeedRecord r;
    r.seed_id = j.at("seed_id").get<std::string>();
    for (const auto& v : j.at("variants")) {
      VariantRecord vr;
      vr.scheme = detail::scheme_from(v.at("scheme"));
      vr.prompt_sha = v.at("prompt_sha").get<std::string>();
      vr.status = v.at("status").get<std::string>();
      vr.flagged = v.at("flagged").get<bool>();
      if (!v.at("below_median_count").is_null()) {
        vr.below_median_count = v.at("below_median_count").get<std::size_t>();
      }
      r.variants.push_back(std::move(vr));
    }
    if (!j.at("median").is_null()) r.median = j.at("median").get<double>();
    r.T = j.at("T").get<int>();
    const auto& repair = j.at("repair");
    if (!repair.at("selected_scheme").is_null()) {
      r.repair = RepairRecord{detail::scheme_from(repair.at("selected_scheme")),
                              repair.at("degenerate").get<bool>()};
    }
    r.original = detail::scores_from(j.at("metrics").at("original"));
    r.repaired = detail::scores_from(j.at("metrics").at("repaired"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ReportError(std::string("bad report record: ") + e.what());
  }
}

inline void write_records(const std::filesystem::path& path, const std::vector<SeedRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

[[nodiscard]] inline std::vector<SeedRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot read " + path.string());
  std::vector<SeedRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ReportError(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

struct SchemeOutlierRow {
  SchemeId scheme;
  std::size_t variants = 0;
  std::size_t flagged = 0;
  /// flagged / variants; empty when the scheme produced no variants.
  std::optional<double> fraction;
  /// flagged / all flagged outputs; empty when nothing was flagged.
  std::optional<double> share;
};

struct OptimalSchemeRow {
  SchemeId scheme;
  std::size_t selected = 0;
  /// selected / seeds with a repair; empty when no seed was repaired.
  std::optional<double> fraction;
};

struct MetricImprovement {
  double before = 0.0;
  double after = 0.0;
  std::optional<double> ratio;
};

struct Summary {
  std::size_t seeds = 0;
  std::size_t dispatched = 0;
  std::size_t completed = 0;
  std::size_t no_result = 0;
  std::map<std::string, std::size_t> no_result_by_reason;
  std::size_t untestable = 0;
  std::size_t outliers = 0;
  std::size_t seeds_with_outliers = 0;
  std::size_t repairs = 0;
  std::size_t degenerate_repairs = 0;
  std::vector<SchemeOutlierRow> scheme_outliers;
  std::vector<OptimalSchemeRow> optimal_schemes;
  std::size_t improvement_seeds = 0;
  std::optional<MetricImprovement> bleu;
  std::optional<MetricImprovement> edit_sim;
};

/// Per-scheme outlier and repair-selection tables.
[[nodiscard]] inline std::pair<std::vector<SchemeOutlierRow>, std::vector<OptimalSchemeRow>>
attribute_schemes(const std::vector<SeedRecord>& records) {
  std::vector<SchemeOutlierRow> outliers;
  std::vector<OptimalSchemeRow> optimal;
  std::size_t total_flagged = 0;
  std::size_t total_repairs = 0;
  for (SchemeId s : kAllSchemes) {
    outliers.push_back({s, 0, 0, std::nullopt, std::nullopt});
    optimal.push_back({s, 0, std::nullopt});
  }
  for (const auto& r : records) {
    for (const auto& v : r.variants) {
      auto& row = outliers[scheme_rank(v.scheme)];
      ++row.variants;
      if (v.flagged) {
        ++row.flagged;
        ++total_flagged;
      }
    }
    if (r.repair) {
      ++optimal[scheme_rank(r.repair->selected_scheme)].selected;
      ++total_repairs;
    }
  }
  for (auto& row : outliers) {
    if (row.variants > 0) row.fraction = static_cast<double>(row.flagged) / row.variants;
    if (total_flagged > 0) row.share = static_cast<double>(row.flagged) / total_flagged;
  }
  for (auto& row : optimal) {
    if (total_repairs > 0) row.fraction = static_cast<double>(row.selected) / total_repairs;
  }
  return {outliers, optimal};
}

[[nodiscard]] inline Summary summarize(const std::vector<SeedRecord>& records) {
  Summary s;
  s.seeds = records.size();
  for (const char* reason : {"empty", "timeout", "http_error", "malformed"}) s.no_result_by_reason[reason] = 0;
  double bleu_before = 0, bleu_after = 0, es_before = 0, es_after = 0;
  for (const auto& r : records) {
    bool any_flagged = false;
    for (const auto& v : r.variants) {
      ++s.dispatched;
      if (v.status == "completed") {
        ++s.completed;
      } else {
        ++s.no_result;
        std::string reason = v.status.substr(v.status.find(':') + 1);
        reason = reason.substr(0, reason.find(':'));
        ++s.no_result_by_reason[reason];
      }
      if (v.flagged) {
        ++s.outliers;
        any_flagged = true;
      }
    }
    if (any_flagged) ++s.seeds_with_outliers;
    if (!r.median) ++s.untestable;
    if (r.repair) {
      ++s.repairs;
      if (r.repair->degenerate) ++s.degenerate_repairs;
    }
    if (r.original && r.repaired) {
      ++s.improvement_seeds;
      bleu_before += r.original->bleu;
      bleu_after += r.repaired->bleu;
      es_before += r.original->edit_sim;
      es_after += r.repaired->edit_sim;
    }
  }
  std::tie(s.scheme_outliers, s.optimal_schemes) = attribute_schemes(records);
  if (s.improvement_seeds > 0) {
    const double n = static_cast<double>(s.improvement_seeds);
    s.bleu = MetricImprovement{bleu_before / n, bleu_after / n,
                               metrics::improvement_ratio(bleu_before / n, bleu_after / n)};
    s.edit_sim = MetricImprovement{es_before / n, es_after / n,
                                   metrics::improvement_ratio(es_before / n, es_after / n)};
  }
  return s;
}

[[nodiscard]] inline Json to_json(const Summary& s) {
  Json by_reason = Json::object();
  for (const auto& [reason, count] : s.no_result_by_reason) by_reason[reason] = count;
  Json scheme_outliers = Json::object();
  for (const auto& row : s.scheme_outliers) {
    scheme_outliers[std::string(to_string(row.scheme))] =
        Json{{"variants", row.variants},
             {"flagged", row.flagged},
             {"fraction", detail::nullable(row.fraction)},
             {"share", detail::nullable(row.share)}};
  }
  Json optimal = Json::object();
  for (const auto& row : s.optimal_schemes) {
    optimal[std::string(to_string(row.scheme))] =
        Json{{"selected", row.selected}, {"fraction", detail::nullable(row.fraction)}};
  }
  auto improvement = [](const std::optional<MetricImprovement>& m) {
    if (!m) return Json{{"before", nullptr}, {"after", nullptr}, {"ratio", nullptr}};
    return Json{{"before", m->before}, {"after", m->after}, {"ratio", detail::nullable(m->ratio)}};
  };
  return Json{{"schema", "completest.summary.v1"},
              {"seeds", s.seeds},
              {"counts",
               Json{{"dispatched", s.dispatched},
                    {"completed", s.completed},
                    {"no_result", s.no_result},
                    {"no_result_by_reason", by_reason},
                    {"untestable", s.untestable},
                    {"outliers", s.outliers},
                    {"seeds_with_outliers", s.seeds_with_outliers},
                    {"repairs", s.repairs},
                    {"degenerate_repairs", s.degenerate_repairs}}},
              {"scheme_outliers", scheme_outliers},
              {"optimal_schemes", optimal},
              {"improvement",
               Json{{"seeds", s.improvement_seeds},
                    {"bleu", improvement(s.bleu)},
                    {"edit_sim", improvement(s.edit_sim)}}}};
}

namespace detail {

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace detail

/// Plain-text rendering of a summary.
[[nodiscard]] inline std::string render_text(const Summary& s) {
  std::ostringstream out;
  out << "seeds: " << s.seeds << "\n"
      << "dispatched: " << s.dispatched << "  completed: " << s.completed
      << "  no result: " << s.no_result << "\n";
  for (const auto& [reason, count] : s.no_result_by_reason) {
    if (count > 0) out << "  no result (" << reason << "): " << count << "\n";
  }
  out << "untestable seeds: " << s.untestable << "\n"
      << "outliers: " << s.outliers << " in " << s.seeds_with_outliers << " seeds\n"
      << "repairs: " << s.repairs << " (degenerate " << s.degenerate_repairs << ")\n\n";
  out << "scheme      variants  flagged  fraction  share\n";
  for (const auto& row : s.scheme_outliers) {
    char line[128];
    std::snprintf(line, sizeof line, "%-10s  %8zu  %7zu  %8s  %s\n",
                  std::string(to_string(row.scheme)).c_str(), row.variants, row.flagged,
                  detail::percent(row.fraction).c_str(), detail::percent(row.share).c_str());
    out << line;
  }
  out << "\nrepair selections\n";
  for (const auto& row : s.optimal_schemes) {
    char line[96];
    std::snprintf(line, sizeof line, "%-10s  %8zu  %s\n", std::string(to_string(row.scheme)).c_str(),
                  row.selected, detail::percent(row.fraction).c_str());
    out << line;
  }
  out << "\nimprovement over " << s.improvement_seeds << " seeds\n";
  auto metric = [&](const char* name, const std::optional<MetricImprovement>& m) {
    out << "  " << name << ": ";
    if (!m) {
      out << "n/a\n";
      return;
    }
    out << detail::fixed(m->before) << " -> " << detail::fixed(m->after) << " ("
        << (m->ratio ? detail::percent(m->ratio) : std::string("not computable")) << ")\n";
  };
  metric("bleu", s.bleu);
  metric("edit_sim", s.edit_sim);
  return out.str();
}

}  // namespace completest::harness
