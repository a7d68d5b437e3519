#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pipewarden/scan.hpp"

namespace pipewarden {

enum class Severity { Info, Low, Medium, High, Critical };

const char* to_string(Severity severity);
std::optional<Severity> severity_from_string(std::string_view text);

// Standard CVSS bands: >=9 Critical, >=7 High, >=4 Medium, else Low.
Severity severity_from_cvss(double score);

// Pipeline stage the finding threatens: what flows in (credentials, source),
// what runs (the runner), or what flows out (artifacts, deployments).
enum class AttackSurface { Input, Runtime, Output, None };

const char* to_string(AttackSurface surface);

// Maps an advisory impact ("Credential Leakage", "Remote Code Execution",
// ...) onto the surface it threatens.
AttackSurface surface_from_impact(std::string_view impact);

struct Finding {
  std::string rule_id;
  Severity severity = Severity::Info;
  AttackSurface attack_surface = AttackSurface::None;
  UsageLocation location;
  std::string message;
  std::map<std::string, std::string> evidence;

  bool operator==(const Finding&) const = default;
};

struct RuleDescriptor {
  std::string id;
  std::string name;
  std::string description;
};

// Every rule the scanner can emit, ordered by id. Also drives the SARIF
// rule table.
const std::vector<RuleDescriptor>& rule_catalog();

struct RuleConfig {
  // Events an outsider can fire without write access to the repository.
  std::set<std::string> external_triggers = {"issue_comment", "issues",
                                             "pull_request_target"};
  int distinct_secret_warning_threshold = 5;

  // Replaces external_triggers from a JSON array file; false when unreadable.
  bool load_external_triggers(const std::filesystem::path& path);
};

// Applies the full rule catalog to one analyzed repository. Deterministic:
// sorted by (file, job, step, rule id, message).
std::vector<Finding> evaluate_rules(const RepoAnalysis& analysis,
                                    const MetadataStore* metadata,
                                    const AdvisoryDb* advisories,
                                    const RuleConfig& config);

}  // namespace pipewarden
