// Command-line front end: mutate, run, sweep and report.
//
// Exit codes: 0 success, 1 fatal configuration error, 2 outliers found.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "completest/completest.hpp"

namespace fs = std::filesystem;
using namespace completest;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitOutliers = 2;

struct Options {
  std::string seeds;
  std::string backend = "stub";
  std::string fault_rules;
  int threshold = 9;
  std::string schemes;
  int max_new_tokens = 128;
  std::size_t concurrency = 4;
  double rate_limit = 0.0;
  int timeout_ms = 60000;
  std::string cache_dir;
  std::string out;
  std::size_t seed_limit = 0;
  std::string bearer_token;
  std::vector<int> thresholds{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string records;
};

harness::CampaignConfig to_config(const Options& o) {
  harness::CampaignConfig c;
  if (o.seeds.empty()) throw harness::ConfigError("--seeds is required");
  c.seeds = o.seeds;
  c.backend = o.backend;
  c.fault_rules = o.fault_rules;
  c.threshold = o.threshold;
  if (!o.schemes.empty()) c.schemes = harness::parse_scheme_list(o.schemes);
  c.max_new_tokens = o.max_new_tokens;
  c.concurrency = o.concurrency;
  c.rate_limit = o.rate_limit;
  c.timeout_ms = o.timeout_ms;
  c.cache_dir = o.cache_dir;
  c.out = o.out;
  c.seed_limit = o.seed_limit;
  c.bearer_token = o.bearer_token;
  harness::validate(c);
  return c;
}

fs::path output_dir(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("completest-out") : fs::path(o.out);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw harness::ReportError("cannot write " + path.string());
  out << text;
}

void print_diagnostics(const harness::CampaignReport& report) {
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& s : report.skipped) std::cerr << "skipped " << s.location << ": " << s.reason << "\n";
  for (const auto& d : report.defects) {
    std::cerr << "mutation defect " << d.seed_id << " " << to_string(d.scheme) << ": " << d.reason << "\n";
  }
}

int cmd_mutate(const Options& o) {
  const auto config = to_config(o);
  auto corpus = load_corpus(config.seeds, config.corpus);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& s : corpus.skipped) std::cerr << "skipped " << s.location << ": " << s.reason << "\n";
  if (config.seed_limit > 0 && corpus.seeds.size() > config.seed_limit) corpus.seeds.resize(config.seed_limit);

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!o.out.empty()) {
    const fs::path path = output_dir(o) / "variants.jsonl";
    file.open(path, std::ios::binary | std::ios::trunc);
    if (!file) throw harness::ConfigError("cannot write " + path.string());
    out = &file;
  }
  for (const auto& [seed, set] : harness::build_variants(corpus.seeds, config)) {
    for (const auto& d : set.defects) {
      std::cerr << "mutation defect " << d.seed_id << " " << to_string(d.scheme) << ": " << d.reason << "\n";
    }
    for (const auto& pc : set.cases) {
      *out << harness::Json{{"seed_id", pc.seed_id},
                            {"scheme", to_string(pc.scheme)},
                            {"prompt_sha", backend::sha256_hex(pc.prompt)},
                            {"prompt", pc.prompt},
                            {"ground_truth", pc.ground_truth}}
                  .dump()
           << "\n";
    }
  }
  return kExitOk;
}

int cmd_run(const Options& o) {
  const auto config = to_config(o);
  const auto report = harness::run_campaign(config);
  print_diagnostics(report);
  const fs::path dir = output_dir(o);
  harness::write_records(dir / "records.jsonl", report.records);
  write_text(dir / "summary.json", harness::to_json(report.summary).dump(2) + "\n");
  const std::string text = harness::render_text(report.summary);
  write_text(dir / "summary.txt", text);
  std::cout << "backend: " << report.backend_id << "  T = " << config.threshold << "\n" << text;
  return report.summary.outliers > 0 ? kExitOutliers : kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto config = to_config(o);
  auto completer = harness::make_backend(config);
  const auto col = harness::collect(config, *completer);
  const auto counts = harness::sweep_thresholds(col, o.thresholds);
  harness::Json table = harness::Json::array();
  bool any = false;
  std::cout << "T  outliers\n";
  for (const auto& [T, n] : counts) {
    table.push_back(harness::Json{{"T", T}, {"outliers", n}});
    std::cout << T << "  " << n << "\n";
    any = any || n > 0;
  }
  write_text(output_dir(o) / "sweep.json", table.dump(2) + "\n");
  return any ? kExitOutliers : kExitOk;
}

int cmd_report(const Options& o) {
  fs::path records = o.records;
  if (records.empty()) {
    if (o.out.empty()) throw harness::ConfigError("report needs --records or --out");
    records = fs::path(o.out) / "records.jsonl";
  }
  const auto summary = harness::summarize(harness::read_records(records));
  if (!o.out.empty()) {
    write_text(output_dir(o) / "summary.json", harness::to_json(summary).dump(2) + "\n");
  }
  std::cout << harness::render_text(summary);
  return summary.outliers > 0 ? kExitOutliers : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metamorphic testing and repair of code completion systems"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--seeds", o.seeds, "Directory of .py files or a JSONL seed file");
  app.add_option("--backend", o.backend, "'stub' or the completion service URL")->capture_default_str();
  app.add_option("--fault-rules", o.fault_rules, "JSON fault rules for the stub backend");
  app.add_option("--threshold", o.threshold, "Outlier peer-count threshold T")->capture_default_str();
  app.add_option("--schemes", o.schemes, "Comma-separated schemes to enable (ORIGINAL always on)");
  app.add_option("--max-new-tokens", o.max_new_tokens, "Completion length limit")->capture_default_str();
  app.add_option("--concurrency", o.concurrency, "Requests in flight")->capture_default_str();
  app.add_option("--rate-limit", o.rate_limit, "Requests per second, 0 for unlimited")->capture_default_str();
  app.add_option("--timeout-ms", o.timeout_ms, "Per-request HTTP timeout")->capture_default_str();
  app.add_option("--cache-dir", o.cache_dir, "Response cache directory");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--seed-limit", o.seed_limit, "Use at most N seeds (0 = all)")->capture_default_str();
  app.add_option("--bearer-token", o.bearer_token, "Authorization bearer token")
      ->envname("COMPLETEST_BEARER_TOKEN");

  auto* mutate = app.add_subcommand("mutate", "Write prompt variants as JSONL");
  auto* run = app.add_subcommand("run", "Run a full campaign");
  auto* sweep = app.add_subcommand("sweep", "Count outliers for several thresholds");
  sweep->add_option("--thresholds", o.thresholds, "Threshold values")->delimiter(',')->capture_default_str();
  auto* report = app.add_subcommand("report", "Re-render a summary from records.jsonl");
  report->add_option("--records", o.records, "Path to records.jsonl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*mutate) return cmd_mutate(o);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*report) return cmd_report(o);
  } catch (const harness::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const harness::ReportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
