#include "pipewarden/report.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

namespace pipewarden {
namespace {

using nlohmann::json;

double pct(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) return 0.0;
  return std::round(10000.0 * static_cast<double>(numerator) /
                    static_cast<double>(denominator)) /
         100.0;
}

std::string snake(std::string label) {
  std::replace(label.begin(), label.end(), '-', '_');
  return label;
}

json location_json(const UsageLocation& location) {
  json out;
  out["file"] = location.source_path;
  out["job"] = location.job_id ? json(*location.job_id) : json(nullptr);
  out["step"] = location.step_index ? json(*location.step_index) : json(nullptr);
  return out;
}

json findings_summary(const std::vector<Finding>& findings) {
  json summary;
  summary["total"] = findings.size();
  std::map<std::string, std::int64_t> counts;
  for (const Finding& finding : findings) {
    counts[to_string(finding.severity)] += 1;
    counts[to_string(finding.attack_surface)] += 1;
  }
  for (const auto& [key, count] : counts) summary[key] = count;
  return summary;
}

std::string render_findings_json(const std::vector<Finding>& findings,
                                 const std::optional<ToolInfo>& tool) {
  json doc;
  json items = json::array();
  for (const Finding& finding : findings) {
    json item;
    item["rule_id"] = finding.rule_id;
    item["severity"] = to_string(finding.severity);
    item["attack_surface"] = to_string(finding.attack_surface);
    item["location"] = location_json(finding.location);
    item["message"] = finding.message;
    item["evidence"] = finding.evidence;
    items.push_back(std::move(item));
  }
  doc["findings"] = std::move(items);
  doc["summary"] = findings_summary(findings);
  if (tool) {
    doc["tool"] = {{"name", tool->name}, {"version", tool->version}};
  }
  return doc.dump() + "\n";
}

std::string render_findings_text(const std::vector<Finding>& findings) {
  std::ostringstream out;
  for (const Finding& finding : findings) {
    out << "[" << to_string(finding.severity) << "] " << finding.rule_id
        << " (" << to_string(finding.attack_surface) << ") "
        << finding.location.source_path;
    if (finding.location.job_id) out << " job=" << *finding.location.job_id;
    if (finding.location.step_index)
      out << " step=" << *finding.location.step_index;
    out << "\n    " << finding.message << "\n";
  }
  if (findings.empty()) {
    out << "no findings\n";
  } else {
    std::map<std::string, std::int64_t> by_severity;
    for (const Finding& finding : findings)
      by_severity[to_string(finding.severity)] += 1;
    out << "total: " << findings.size() << " finding"
        << (findings.size() == 1 ? "" : "s") << " (";
    bool first = true;
    for (const char* level : {"critical", "high", "medium", "low", "info"}) {
      auto it = by_severity.find(level);
      if (it == by_severity.end()) continue;
      if (!first) out << ", ";
      out << it->second << " " << level;
      first = false;
    }
    out << ")\n";
  }
  return out.str();
}

const char* sarif_level(Severity severity) {
  switch (severity) {
    case Severity::Critical:
    case Severity::High:
      return "error";
    case Severity::Medium:
      return "warning";
    case Severity::Low:
    case Severity::Info:
      return "note";
  }
  return "note";
}

std::string render_findings_sarif(const std::vector<Finding>& findings,
                                  const std::optional<ToolInfo>& tool) {
  const auto& catalog = rule_catalog();
  json rules = json::array();
  std::map<std::string, std::size_t> rule_index;
  for (const RuleDescriptor& rule : catalog) {
    rule_index[rule.id] = rules.size();
    rules.push_back({{"id", rule.id},
                     {"name", rule.name},
                     {"shortDescription", {{"text", rule.description}}}});
  }

  json results = json::array();
  for (const Finding& finding : findings) {
    json result;
    result["ruleId"] = finding.rule_id;
    auto it = rule_index.find(finding.rule_id);
    if (it != rule_index.end()) result["ruleIndex"] = it->second;
    result["level"] = sarif_level(finding.severity);
    result["message"] = {{"text", finding.message}};
    result["locations"] = json::array(
        {{{"physicalLocation",
           {{"artifactLocation", {{"uri", finding.location.source_path}}}}}}});
    json properties;
    properties["severity"] = to_string(finding.severity);
    properties["attack_surface"] = to_string(finding.attack_surface);
    if (finding.location.job_id) properties["job"] = *finding.location.job_id;
    if (finding.location.step_index)
      properties["step"] = *finding.location.step_index;
    for (const auto& [key, value] : finding.evidence)
      properties["evidence." + key] = value;
    result["properties"] = std::move(properties);
    results.push_back(std::move(result));
  }

  json driver;
  driver["name"] = tool ? tool->name : "pipewarden";
  if (tool) driver["version"] = tool->version;
  driver["informationUri"] = "https://github.com/pipewarden/pipewarden";
  driver["rules"] = std::move(rules);

  json doc;
  doc["$schema"] = "https://json.schemastore.org/sarif-2.1.0.json";
  doc["version"] = "2.1.0";
  doc["runs"] =
      json::array({{{"tool", {{"driver", std::move(driver)}}},
                    {"results", std::move(results)}}});
  return doc.dump(2) + "\n";
}

json stats_json(const CorpusStats& stats) {
  json doc;
  doc["repo_count"] = stats.repo_count;
  doc["usage_count"] = stats.usage_count;
  doc["parse_failures"] = stats.parse_failures;
  doc["distinct_scripts"] = stats.script_repo_counts.size();
  doc["distinct_creators"] = stats.creator_repo_counts.size();

  // Script counts per runtime partition the distinct scripts; repo counts use
  // "uses at least one" semantics.
  std::map<std::string, std::int64_t> runtime_scripts;
  for (const auto& [slug, runtime] : stats.script_runtime)
    runtime_scripts[runtime] += 1;
  json runtimes;
  for (const char* label : {"nodejs", "docker", "raw_command", "unknown"}) {
    std::int64_t scripts = runtime_scripts.count(label)
                               ? runtime_scripts.at(label)
                               : 0;
    std::int64_t repos = stats.runtime_repo_counts.count(label)
                             ? stats.runtime_repo_counts.at(label)
                             : 0;
    runtimes[label] = {
        {"scripts", scripts},
        {"scripts_pct",
         pct(scripts, static_cast<std::int64_t>(stats.script_runtime.size()))},
        {"influenced_repos", repos},
        {"influenced_repos_pct", pct(repos, stats.repo_count)}};
  }
  doc["runtime_distribution"] = std::move(runtimes);

  auto top_entries = [&](auto include) {
    std::vector<std::pair<std::string, std::int64_t>> entries;
    for (const auto& [name, count] : stats.creator_repo_counts) {
      if (include(name)) entries.emplace_back(name, count);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
    if (entries.size() > 10) entries.resize(10);
    json out = json::array();
    for (const auto& [name, count] : entries) {
      out.push_back({{"creator", name},
                     {"influenced_repos", count},
                     {"pct", pct(count, stats.repo_count)}});
    }
    return out;
  };
  auto verified = [&](const std::string& name) {
    auto it = stats.creator_verified.find(name);
    return it != stats.creator_verified.end() && it->second;
  };
  doc["top_creators"] = {
      {"verified", top_entries(verified)},
      {"unverified",
       top_entries([&](const std::string& name) { return !verified(name); })}};

  {
    std::vector<std::pair<std::string, std::int64_t>> entries(
        stats.script_repo_counts.begin(), stats.script_repo_counts.end());
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });
    if (entries.size() > 10) entries.resize(10);
    json top = json::array();
    for (const auto& [slug, count] : entries) {
      top.push_back({{"slug", slug},
                     {"influenced_repos", count},
                     {"pct", pct(count, stats.repo_count)}});
    }
    doc["top_scripts"] = std::move(top);
  }

  doc["credential_histogram"] = {
      {"zero", stats.credential_histogram[0]},
      {"one", stats.credential_histogram[1]},
      {"two_to_five", stats.credential_histogram[2]},
      {"over_five", stats.credential_histogram[3]}};

  // Non-exclusive "at least once" counts; percentages may sum past 100.
  json ref_kinds;
  for (const char* label :
       {"tag", "branch", "commit-hash", "invalid", "unresolved"}) {
    std::int64_t count = stats.ref_kind_repo_counts.count(label)
                             ? stats.ref_kind_repo_counts.at(label)
                             : 0;
    ref_kinds[snake(label)] = {{"repos", count},
                               {"pct", pct(count, stats.repo_count)}};
  }
  doc["ref_kind_repos"] = std::move(ref_kinds);

  doc["sensitive_operations"] = {
      {"artifact_release",
       {{"scripts",
         static_cast<std::int64_t>(stats.artifact_release_scripts.size())},
        {"influenced_repos", stats.artifact_release_repos},
        {"influenced_repos_pct",
         pct(stats.artifact_release_repos, stats.repo_count)}}},
      {"deployment",
       {{"scripts", static_cast<std::int64_t>(stats.deployment_scripts.size())},
        {"influenced_repos", stats.deployment_repos},
        {"influenced_repos_pct",
         pct(stats.deployment_repos, stats.repo_count)}}}};

  auto buckets_json = [](const LagBuckets& buckets) {
    return json{{"under_1_month", buckets.under_one_month},
                {"1_to_3_months", buckets.one_to_three_months},
                {"3_to_12_months", buckets.three_to_twelve_months},
                {"over_12_months", buckets.over_twelve_months}};
  };
  doc["lag_buckets"] = {{"usages", buckets_json(stats.usage_lag_buckets)},
                        {"repos", buckets_json(stats.repo_lag_buckets)}};

  doc["vulnerable_repos"] = stats.vulnerable_repos;
  return doc;
}

std::string render_stats_text(const CorpusStats& stats) {
  json doc = stats_json(stats);
  std::ostringstream out;
  out << "repositories:      " << stats.repo_count << "\n";
  out << "script usages:     " << stats.usage_count << "\n";
  out << "distinct scripts:  " << doc["distinct_scripts"] << "\n";
  out << "distinct creators: " << doc["distinct_creators"] << "\n";
  out << "parse failures:    " << stats.parse_failures << "\n";
  out << "runtime distribution (scripts / influenced repos):\n";
  for (const char* label : {"nodejs", "docker", "raw_command", "unknown"}) {
    const auto& entry = doc["runtime_distribution"][label];
    out << "  " << label << ": " << entry["scripts"] << " / "
        << entry["influenced_repos"] << "\n";
  }
  out << "ref kinds (repos referencing at least once):\n";
  for (const char* label :
       {"tag", "branch", "commit_hash", "invalid", "unresolved"}) {
    const auto& entry = doc["ref_kind_repos"][label];
    out << "  " << label << ": " << entry["repos"] << " ("
        << entry["pct"].dump() << "%)\n";
  }
  const auto& hist = doc["credential_histogram"];
  out << "credential histogram (repos by distinct secrets): 0 -> "
      << hist["zero"] << ", 1 -> " << hist["one"] << ", 2-5 -> "
      << hist["two_to_five"] << ", >5 -> " << hist["over_five"] << "\n";
  out << "vulnerable repos:  " << stats.vulnerable_repos.size();
  for (const auto& repo : stats.vulnerable_repos) out << " " << repo;
  out << "\n";
  return out.str();
}

}  // namespace

std::optional<ReportFormat> report_format_from_string(std::string_view text) {
  if (text == "json") return ReportFormat::Json;
  if (text == "text") return ReportFormat::Text;
  if (text == "sarif") return ReportFormat::Sarif;
  return std::nullopt;
}

RenderResult render_findings(const std::vector<Finding>& findings,
                             ReportFormat format,
                             const std::optional<ToolInfo>& tool) {
  switch (format) {
    case ReportFormat::Json:
      return render_findings_json(findings, tool);
    case ReportFormat::Text:
      return render_findings_text(findings);
    case ReportFormat::Sarif:
      return render_findings_sarif(findings, tool);
  }
  return RenderError{"unsupported format"};
}

RenderResult render_stats(const CorpusStats& stats, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return stats_json(stats).dump(2) + "\n";
    case ReportFormat::Text:
      return render_stats_text(stats);
    case ReportFormat::Sarif:
      return RenderError{"corpus statistics have no SARIF form"};
  }
  return RenderError{"unsupported format"};
}

}  // namespace pipewarden
