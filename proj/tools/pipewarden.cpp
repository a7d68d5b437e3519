#include <atomic>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "CLI11.hpp"
#include "pipewarden/fetch.hpp"
#include "pipewarden/report.hpp"
#include "pipewarden/rules.hpp"
#include "pipewarden/scan.hpp"
#include "pipewarden/stats.hpp"

namespace fs = std::filesystem;
using namespace pipewarden;

namespace {

constexpr const char* kVersion = "0.1.0";

#ifndef PIPEWARDEN_DATA_DIR
#define PIPEWARDEN_DATA_DIR "data"
#endif

struct CommonOptions {
  std::string metadata_path;
  std::string advisories_path;
  std::string categories_path;
  std::string format = "json";
  std::string as_of;
  std::string out_path;
  int jobs = 1;
  bool offline = false;
};

void log_error(const std::string& message) {
  std::cerr << "pipewarden: " << message << "\n";
}

bool emit(const std::string& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << report;
    return true;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    log_error("cannot write " + out_path);
    return false;
  }
  out << report;
  return static_cast<bool>(out);
}

fs::path data_file(const char* name) {
  return fs::path(PIPEWARDEN_DATA_DIR) / name;
}

struct Inputs {
  std::optional<MetadataStore> metadata;
  std::optional<AdvisoryDb> advisories;
  RuleConfig rules;
  Timestamp analysis_time = 0;
  ReportFormat format = ReportFormat::Json;
};

// Returns nullopt on a usage error (already logged).
std::optional<Inputs> load_inputs(const CommonOptions& options) {
  Inputs inputs;

  auto format = report_format_from_string(options.format);
  if (!format) {
    log_error("unsupported format '" + options.format + "'");
    return std::nullopt;
  }
  inputs.format = *format;

  if (options.as_of.empty()) {
    inputs.analysis_time = static_cast<Timestamp>(std::time(nullptr));
  } else {
    auto parsed = parse_rfc3339(options.as_of);
    if (!parsed) {
      log_error("--as-of expects an RFC 3339 timestamp");
      return std::nullopt;
    }
    inputs.analysis_time = *parsed;
  }

  if (!options.metadata_path.empty()) {
    auto loaded = MetadataStore::load(options.metadata_path);
    if (const SnapshotError* err = std::get_if<SnapshotError>(&loaded)) {
      log_error("metadata snapshot: " + err->message);
      return std::nullopt;
    }
    inputs.metadata = std::get<MetadataStore>(std::move(loaded));
  }

  fs::path advisories_path = options.advisories_path.empty()
                                 ? data_file("advisories.json")
                                 : fs::path(options.advisories_path);
  if (fs::exists(advisories_path)) {
    auto loaded = AdvisoryDb::load(advisories_path);
    if (const AdvisoryError* err = std::get_if<AdvisoryError>(&loaded)) {
      log_error("advisory db: " + err->message);
      return std::nullopt;
    }
    inputs.advisories = std::get<AdvisoryDb>(std::move(loaded));
  } else if (!options.advisories_path.empty()) {
    log_error("advisory db not found: " + options.advisories_path);
    return std::nullopt;
  }

  fs::path categories_path = options.categories_path.empty()
                                 ? data_file("categories.json")
                                 : fs::path(options.categories_path);
  if (!options.categories_path.empty() && !fs::exists(categories_path)) {
    log_error("category map not found: " + options.categories_path);
    return std::nullopt;
  }
  if (inputs.metadata && fs::exists(categories_path)) {
    auto loaded = load_category_map(categories_path);
    if (const SnapshotError* err = std::get_if<SnapshotError>(&loaded)) {
      log_error("category map: " + err->message);
      return std::nullopt;
    }
    inputs.metadata->apply_categories(
        std::get<std::map<std::string, std::set<std::string>>>(loaded));
  }

  inputs.rules.load_external_triggers(data_file("external_triggers.json"));
  return inputs;
}

// Analyzes repositories in parallel; results keep the input order. The
// prefix for reported paths equals the repo id unless `prefix_paths` is off
// (single-target scans report paths relative to the target).
std::vector<RepoAnalysis> analyze_all(
    const std::vector<std::pair<fs::path, std::string>>& repos,
    const Inputs& inputs, const AnalysisOptions& options, int jobs,
    bool prefix_paths) {
  std::vector<RepoAnalysis> analyses(repos.size());
  const MetadataStore* metadata = inputs.metadata ? &*inputs.metadata : nullptr;
  const AdvisoryDb* advisories =
      inputs.advisories ? &*inputs.advisories : nullptr;

  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= repos.size()) return;
      analyses[i] = analyze_repository(
          repos[i].first, repos[i].second,
          prefix_paths ? repos[i].second : std::string{}, metadata, advisories,
          options);
    }
  };
  int thread_count = std::max(1, jobs);
  if (thread_count == 1 || repos.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
  }
  return analyses;
}

std::string repo_id_for(const fs::path& target) {
  std::error_code ec;
  fs::path canonical = fs::canonical(target, ec);
  if (ec) return target.filename().string();
  std::string name = canonical.filename().string();
  return name.empty() ? canonical.string() : name;
}

int run_scan(const CommonOptions& options, std::vector<std::string> targets,
             const std::string& fail_on_text, bool use_config_mtime) {
  auto fail_on = severity_from_string(fail_on_text);
  if (!fail_on) {
    log_error("unknown --fail-on severity '" + fail_on_text + "'");
    return 2;
  }
  auto inputs = load_inputs(options);
  if (!inputs) return 2;

  std::vector<std::pair<fs::path, std::string>> repos;
  for (const std::string& target : targets) {
    if (!fs::is_directory(target)) {
      log_error("not a directory: " + target);
      return 2;
    }
    repos.emplace_back(target, repo_id_for(target));
  }

  AnalysisOptions analysis_options{inputs->analysis_time, use_config_mtime};
  auto analyses = analyze_all(repos, *inputs, analysis_options, options.jobs,
                              /*prefix_paths=*/repos.size() > 1);

  std::vector<Finding> findings;
  bool any_parse_failure = false;
  for (const RepoAnalysis& analysis : analyses) {
    if (!analysis.parse_failures.empty()) any_parse_failure = true;
    auto repo_findings = evaluate_rules(
        analysis, inputs->metadata ? &*inputs->metadata : nullptr,
        inputs->advisories ? &*inputs->advisories : nullptr, inputs->rules);
    findings.insert(findings.end(),
                    std::make_move_iterator(repo_findings.begin()),
                    std::make_move_iterator(repo_findings.end()));
  }

  auto rendered = render_findings(findings, inputs->format,
                                  ToolInfo{"pipewarden", kVersion});
  if (const RenderError* err = std::get_if<RenderError>(&rendered)) {
    log_error(err->message);
    return 2;
  }
  if (!emit(std::get<std::string>(rendered), options.out_path)) return 2;

  if (any_parse_failure) return 3;
  for (const Finding& finding : findings) {
    if (finding.severity >= *fail_on) return 1;
  }
  return 0;
}

int run_corpus_stats(const CommonOptions& options,
                     const std::string& corpus_dir) {
  auto inputs = load_inputs(options);
  if (!inputs) return 2;
  if (inputs->format == ReportFormat::Sarif) {
    log_error("corpus statistics have no SARIF form");
    return 2;
  }
  if (!fs::is_directory(corpus_dir)) {
    log_error("not a directory: " + corpus_dir);
    return 2;
  }

  std::vector<std::pair<fs::path, std::string>> repos;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_directory()) {
      repos.emplace_back(entry.path(), entry.path().filename().string());
    }
  }
  std::sort(repos.begin(), repos.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });

  AnalysisOptions analysis_options{inputs->analysis_time, false};
  auto analyses = analyze_all(repos, *inputs, analysis_options, options.jobs,
                              /*prefix_paths=*/true);
  CorpusStats stats = aggregate_corpus(
      analyses, inputs->metadata ? &*inputs->metadata : nullptr);
  for (const RepoAnalysis& analysis : analyses) {
    for (const ParseFailure& failure : analysis.parse_failures) {
      log_error("parse failure: " + failure.source_path + " (" +
                to_string(failure.error.kind) + ")");
    }
  }

  auto rendered = render_stats(stats, inputs->format);
  if (const RenderError* err = std::get_if<RenderError>(&rendered)) {
    log_error(err->message);
    return 2;
  }
  if (!emit(std::get<std::string>(rendered), options.out_path)) return 2;
  return 0;
}

int run_fetch(const std::vector<std::string>& scripts,
              const std::string& from_scan, const std::string& api_base,
              const std::string& out_path, const std::string& categories_path,
              int max_rps) {
  std::vector<std::string> slugs = scripts;
  if (!from_scan.empty()) {
    if (!fs::is_directory(from_scan)) {
      log_error("--from-scan expects a repository or corpus directory");
      return 2;
    }
    for (auto& slug : collect_slugs(from_scan)) slugs.push_back(slug);
  }
  std::sort(slugs.begin(), slugs.end());
  slugs.erase(std::unique(slugs.begin(), slugs.end()), slugs.end());

  FetchOptions fetch_options;
  fetch_options.api_base = api_base;
  fetch_options.max_requests_per_second = max_rps;
  if (const char* token = std::getenv("PIPEWARDEN_TOKEN")) {
    if (*token) fetch_options.auth_token = token;
  }

  fs::path allow_list = data_file("verified_creators.json");
  if (fs::exists(allow_list)) {
    std::ifstream in(allow_list);
    try {
      nlohmann::json doc = nlohmann::json::parse(in);
      for (const auto& creator : doc) {
        fetch_options.verified_creators.insert(creator.get<std::string>());
      }
    } catch (const nlohmann::json::exception& e) {
      log_error(std::string("verified-creator list: ") + e.what());
      return 2;
    }
  }
  fs::path categories = categories_path.empty() ? data_file("categories.json")
                                                : fs::path(categories_path);
  if (fs::exists(categories)) {
    auto loaded = load_category_map(categories);
    if (const SnapshotError* err = std::get_if<SnapshotError>(&loaded)) {
      log_error("category map: " + err->message);
      return 2;
    }
    fetch_options.categories =
        std::get<std::map<std::string, std::set<std::string>>>(loaded);
  }

  // Re-running merges by slug into the existing snapshot.
  MetadataStore store;
  if (fs::exists(out_path)) {
    auto loaded = MetadataStore::load(out_path);
    if (const SnapshotError* err = std::get_if<SnapshotError>(&loaded)) {
      log_error("existing snapshot: " + err->message);
      return 2;
    }
    store = std::get<MetadataStore>(std::move(loaded));
  }

  FetchReport report = fetch_metadata(slugs, store, fetch_options);
  for (const std::string& error : report.errors) log_error(error);
  if (!store.save(out_path)) {
    log_error("cannot write snapshot: " + out_path);
    return 2;
  }
  std::cerr << "pipewarden: fetched " << report.fetched << " slug(s), "
            << report.partial << " partial\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CI/CD pipeline configuration security analyzer"};
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<std::string> scan_targets;
  std::string fail_on = "high";
  bool use_config_mtime = false;

  auto add_common = [&](CLI::App* cmd, bool with_time) {
    cmd->add_option("--metadata", common.metadata_path,
                    "Metadata snapshot file");
    cmd->add_option("--advisories", common.advisories_path,
                    "Advisory db file (default: bundled)");
    cmd->add_option("--categories", common.categories_path,
                    "Category map file (default: bundled)");
    cmd->add_option("--format", common.format, "json, text, or sarif");
    cmd->add_option("--out", common.out_path,
                    "Write the report here instead of stdout");
    cmd->add_option("--jobs", common.jobs, "Repository-level parallelism")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--offline", common.offline,
                  "Assert that no network operation is attempted");
    if (with_time) {
      cmd->add_option("--as-of", common.as_of,
                      "Analysis time (RFC 3339); default: now");
    }
  };

  CLI::App* scan = app.add_subcommand("scan", "Scan repositories for findings");
  scan->add_option("targets", scan_targets, "Repository roots")
      ->required()
      ->expected(-1);
  scan->add_option("--fail-on", fail_on,
                   "Exit 1 when a finding reaches this severity");
  scan->add_flag("--config-mtime", use_config_mtime,
                 "Measure lag at each workflow file's mtime");
  add_common(scan, true);

  CLI::App* corpus = app.add_subcommand("corpus", "Corpus-level analytics");
  corpus->require_subcommand(1);
  std::string corpus_dir;
  CLI::App* corpus_stats =
      corpus->add_subcommand("stats", "Aggregate statistics over a corpus");
  corpus_stats->add_option("corpus", corpus_dir, "Directory of repositories")
      ->required();
  add_common(corpus_stats, true);

  CLI::App* fetch = app.add_subcommand(
      "fetch-metadata", "Fetch script metadata into a snapshot file");
  std::vector<std::string> fetch_scripts;
  std::string from_scan;
  std::string api_base = "https://api.github.com";
  std::string fetch_out;
  std::string fetch_categories;
  int max_rps = 0;
  fetch->add_option("--scripts", fetch_scripts, "Slugs (owner/repo) to fetch");
  fetch->add_option("--from-scan", from_scan,
                    "Derive slugs from the workflows under this directory");
  fetch->add_option("--api-base", api_base, "API endpoint override");
  fetch->add_option("--out", fetch_out, "Snapshot file to write")->required();
  fetch->add_option("--categories", fetch_categories,
                    "Category map file (default: bundled)");
  fetch->add_option("--max-rps", max_rps, "Request-rate ceiling (0 = none)");

  CLI::App* version = app.add_subcommand("version", "Print the tool version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (version->parsed()) {
    std::cout << "pipewarden " << kVersion << "\n";
    return 0;
  }
  if (scan->parsed()) {
    return run_scan(common, scan_targets, fail_on, use_config_mtime);
  }
  if (corpus_stats->parsed()) {
    return run_corpus_stats(common, corpus_dir);
  }
  if (fetch->parsed()) {
    return run_fetch(fetch_scripts, from_scan, api_base, fetch_out,
                     fetch_categories, max_rps);
  }
  return 2;
}
