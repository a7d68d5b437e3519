#include "pipewarden/rules.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <tuple>

namespace pipewarden {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string format_cvss(double score) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", score);
  return buf;
}

std::string join(const std::set<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

UsageLocation workflow_location(const Workflow& workflow) {
  return {workflow.source_path, std::nullopt, std::nullopt};
}

constexpr std::int64_t kStaleLowDays = 90;    // three 30-day months
constexpr std::int64_t kStaleMediumDays = 365; // twelve 30-day months

}  // namespace

const char* to_string(Severity severity) {
  switch (severity) {
    case Severity::Info:
      return "info";
    case Severity::Low:
      return "low";
    case Severity::Medium:
      return "medium";
    case Severity::High:
      return "high";
    case Severity::Critical:
      return "critical";
  }
  return "info";
}

std::optional<Severity> severity_from_string(std::string_view text) {
  std::string t = lower(text);
  if (t == "info") return Severity::Info;
  if (t == "low") return Severity::Low;
  if (t == "medium") return Severity::Medium;
  if (t == "high") return Severity::High;
  if (t == "critical") return Severity::Critical;
  return std::nullopt;
}

Severity severity_from_cvss(double score) {
  if (score >= 9.0) return Severity::Critical;
  if (score >= 7.0) return Severity::High;
  if (score >= 4.0) return Severity::Medium;
  return Severity::Low;
}

const char* to_string(AttackSurface surface) {
  switch (surface) {
    case AttackSurface::Input:
      return "input";
    case AttackSurface::Runtime:
      return "runtime";
    case AttackSurface::Output:
      return "output";
    case AttackSurface::None:
      return "none";
  }
  return "none";
}

AttackSurface surface_from_impact(std::string_view impact) {
  std::string t = lower(impact);
  if (t.find("credential") != std::string::npos ||
      t.find("leak") != std::string::npos ||
      t.find("exposure") != std::string::npos ||
      t.find("disclosure") != std::string::npos) {
    return AttackSurface::Input;
  }
  if (t.find("artifact") != std::string::npos ||
      t.find("deploy") != std::string::npos ||
      t.find("contamination") != std::string::npos) {
    return AttackSurface::Output;
  }
  // Execution and injection impacts land on the runner.
  return AttackSurface::Runtime;
}

const std::vector<RuleDescriptor>& rule_catalog() {
  static const std::vector<RuleDescriptor> catalog = {
      {"R-CRED-BROAD", "Broadly scoped secret",
       "A secret is set at workflow or job env scope, so every step in scope "
       "can read it."},
      {"R-CRED-COUNT", "Secrets passed into the pipeline",
       "Reports the number of distinct secrets a workflow passes; large "
       "counts widen the exposure of a single compromised step."},
      {"R-DOCKER-SOURCE", "Unpinned or untrusted docker image",
       "A docker image is pulled by mutable tag or comes from an unverified "
       "creator, so its content can change underneath the pipeline."},
      {"R-PARSE-ERROR", "Workflow failed to parse",
       "The workflow file could not be parsed and was skipped."},
      {"R-REF-INVALID", "Invalid script reference",
       "The reference resolves to no tag, branch, or commit of the script "
       "repository."},
      {"R-REF-MUTABLE", "Mutable script reference",
       "The script is referenced by tag or branch; the revision it points to "
       "can change. Pin a full commit hash instead."},
      {"R-SENSITIVE-UNVERIFIED", "Sensitive operation by unverified creator",
       "An artifact-release or deployment script comes from a creator the "
       "platform has not verified."},
      {"R-STALE", "Outdated script usage",
       "A newer release of the referenced script has been available for an "
       "extended period."},
      {"R-TRIGGER-BROAD", "Secrets with externally initiable triggers",
       "The workflow passes secrets while events outsiders can initiate may "
       "trigger it."},
      {"R-VULN-KNOWN", "Known-vulnerable script version",
       "The referenced script version is affected by a published CVE."},
  };
  return catalog;
}

bool RuleConfig::load_external_triggers(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return false;
  }
  if (!doc.is_array()) return false;
  std::set<std::string> triggers;
  for (const auto& item : doc) {
    if (!item.is_string()) return false;
    triggers.insert(item.get<std::string>());
  }
  external_triggers = std::move(triggers);
  return true;
}

namespace {

void emit_vuln_findings(const RepoAnalysis& analysis,
                        const AdvisoryDb* advisories,
                        std::vector<Finding>& out) {
  if (!advisories) return;
  for (const VulnMatch& match : analysis.matches) {
    const Advisory* advisory = advisories->find(match.advisory_id);
    if (!advisory) continue;
    Finding f;
    f.rule_id = "R-VULN-KNOWN";
    f.severity = severity_from_cvss(advisory->cvss);
    f.attack_surface = surface_from_impact(advisory->impact);
    f.location = match.location;
    f.message = "usage of " + advisory->slug + "@" +
                match.referenced_version + " matches known vulnerability " +
                advisory->id + " (" + advisory->impact + ", CVSS " +
                format_cvss(advisory->cvss) + ")";
    f.evidence["advisory_id"] = advisory->id;
    f.evidence["slug"] = advisory->slug;
    f.evidence["referenced_version"] = match.referenced_version;
    f.evidence["reason"] = to_string(match.reason);
    f.evidence["cvss"] = format_cvss(advisory->cvss);
    f.evidence["impact"] = advisory->impact;
    if (advisory->fixed_in) f.evidence["fixed_in"] = *advisory->fixed_in;
    if (advisory->last_vulnerable)
      f.evidence["last_vulnerable"] = *advisory->last_vulnerable;
    out.push_back(std::move(f));
  }
}

void emit_credential_findings(const WorkflowAnalysis& wf,
                              const RuleConfig& config,
                              std::vector<Finding>& out) {
  std::set<std::string> distinct;
  for (const CredentialUse& cred : wf.credentials) {
    distinct.insert(cred.secret_name);
    if (cred.scope == CredentialScope::WorkflowEnv ||
        cred.scope == CredentialScope::JobEnv) {
      Finding f;
      f.rule_id = "R-CRED-BROAD";
      f.severity = Severity::Medium;
      f.attack_surface = AttackSurface::Input;
      f.location = cred.location;
      const char* scope_name =
          cred.scope == CredentialScope::WorkflowEnv ? "workflow" : "job";
      f.message = std::string("secret '") + cred.secret_name +
                  "' is set at " + scope_name +
                  " env scope; every script in scope can read it";
      f.evidence["secret"] = cred.secret_name;
      f.evidence["scope"] = to_string(cred.scope);
      f.evidence["expression"] = cred.expression;
      out.push_back(std::move(f));
    }
  }

  if (!distinct.empty()) {
    Finding f;
    f.rule_id = "R-CRED-COUNT";
    f.severity = Severity::Info;
    f.attack_surface = AttackSurface::Input;
    f.location = workflow_location(wf.workflow);
    bool over = distinct.size() >
                static_cast<size_t>(config.distinct_secret_warning_threshold);
    f.message = "workflow passes " + std::to_string(distinct.size()) +
                " distinct secret" + (distinct.size() == 1 ? "" : "s");
    if (over) {
      f.message += " (more than " +
                   std::to_string(config.distinct_secret_warning_threshold) +
                   ")";
    }
    f.evidence["count"] = std::to_string(distinct.size());
    f.evidence["secrets"] = join(distinct, ", ");
    if (over) f.evidence["exceeds_threshold"] = "true";
    for (const CredentialUse& cred : wf.credentials) {
      if (cred.in_run_script) {
        f.evidence["includes_run_script_reference"] = "true";
        break;
      }
    }
    out.push_back(std::move(f));
  }
}

void emit_trigger_finding(const WorkflowAnalysis& wf, const RuleConfig& config,
                          std::vector<Finding>& out) {
  if (wf.credentials.empty()) return;
  std::set<std::string> risky;
  for (const std::string& trigger : wf.workflow.triggers) {
    if (config.external_triggers.count(trigger)) risky.insert(trigger);
  }
  if (risky.empty()) return;
  Finding f;
  f.rule_id = "R-TRIGGER-BROAD";
  f.severity = Severity::Medium;
  f.attack_surface = AttackSurface::Input;
  f.location = workflow_location(wf.workflow);
  f.message =
      "secrets are passed while externally initiable events can trigger the "
      "workflow: " +
      join(risky, ", ");
  f.evidence["triggers"] = join(risky, ", ");
  out.push_back(std::move(f));
}

void emit_ref_findings(const ScriptUsage& usage, std::vector<Finding>& out) {
  const RepositoryRef* repo = usage.repository();
  if (usage.parse_error) {
    Finding f;
    f.rule_id = "R-REF-INVALID";
    f.severity = Severity::Medium;
    f.attack_surface = AttackSurface::None;
    f.location = usage.location;
    f.message = "script reference '" + usage.raw_uses + "' cannot be parsed";
    f.evidence["uses"] = usage.raw_uses;
    f.evidence["error"] = *usage.parse_error;
    out.push_back(std::move(f));
    return;
  }
  if (!repo) return;

  switch (usage.kind) {
    case RefKind::Tag:
    case RefKind::Branch:
    case RefKind::Unresolved: {
      Finding f;
      f.rule_id = "R-REF-MUTABLE";
      f.severity = Severity::Low;
      f.attack_surface = AttackSurface::Runtime;
      f.location = usage.location;
      f.message = "script reference '" + usage.raw_uses +
                  "' is mutable; pin a full commit hash instead";
      f.evidence["uses"] = usage.raw_uses;
      f.evidence["ref_kind"] = to_string(usage.kind);
      f.evidence["slug"] = repo->slug();
      out.push_back(std::move(f));
      break;
    }
    case RefKind::Invalid: {
      Finding f;
      f.rule_id = "R-REF-INVALID";
      f.severity = Severity::Medium;
      f.attack_surface = AttackSurface::None;
      f.location = usage.location;
      f.message = "script reference '" + usage.raw_uses +
                  "' resolves to no tag, branch, or commit";
      f.evidence["uses"] = usage.raw_uses;
      f.evidence["ref"] = repo->ref;
      f.evidence["slug"] = repo->slug();
      out.push_back(std::move(f));
      break;
    }
    case RefKind::CommitHash:
      break;
  }
}

void emit_docker_findings(const ScriptUsage& usage,
                          const MetadataStore* metadata,
                          std::vector<Finding>& out) {
  if (const DockerImageRef* docker = usage.docker_image()) {
    std::set<std::string> reasons;
    if (!docker->is_digest_pinned()) reasons.insert("mutable-reference");
    const ScriptMetadata* image_meta =
        metadata ? metadata->lookup(docker->image) : nullptr;
    if (image_meta && !image_meta->verified)
      reasons.insert("unverified-creator");
    if (reasons.empty()) return;
    Finding f;
    f.rule_id = "R-DOCKER-SOURCE";
    f.severity = Severity::Medium;
    f.attack_surface = AttackSurface::Runtime;
    f.location = usage.location;
    f.message = "docker image '" + docker->image +
                (docker->tag_or_digest ? ":" + *docker->tag_or_digest : "") +
                "' can change underneath the pipeline (" + join(reasons, ", ") +
                ")";
    f.evidence["image"] = docker->image;
    if (docker->registry) f.evidence["registry"] = *docker->registry;
    if (docker->tag_or_digest) f.evidence["tag"] = *docker->tag_or_digest;
    f.evidence["reasons"] = join(reasons, ", ");
    out.push_back(std::move(f));
    return;
  }

  const RepositoryRef* repo = usage.repository();
  if (!repo) return;
  const ScriptMetadata* meta = metadata_for_usage(metadata, usage);
  if (!meta || meta->runtime.kind != RuntimeKind::Docker) return;

  std::set<std::string> reasons;
  std::string image = meta->runtime.detail.value_or("");
  if (image.rfind("docker://", 0) == 0) {
    auto parsed = parse_uses(image);
    if (const ScriptRef* ref = std::get_if<ScriptRef>(&parsed)) {
      if (const DockerImageRef* docker = ref->docker_image()) {
        if (!docker->is_digest_pinned()) reasons.insert("mutable-image-tag");
      }
    }
  }
  if (!meta->verified) reasons.insert("unverified-creator");
  if (reasons.empty()) return;

  Finding f;
  f.rule_id = "R-DOCKER-SOURCE";
  f.severity = Severity::Medium;
  f.attack_surface = AttackSurface::Runtime;
  f.location = usage.location;
  f.message = "script " + meta->slug + " runs a docker image that " +
              (reasons.count("mutable-image-tag")
                   ? std::string("is pulled by mutable tag")
                   : std::string("comes from an unverified creator")) +
              (reasons.size() > 1 ? " and comes from an unverified creator"
                                  : "");
  f.evidence["slug"] = meta->slug;
  if (!image.empty()) f.evidence["image"] = image;
  f.evidence["reasons"] = join(reasons, ", ");
  out.push_back(std::move(f));
}

void emit_sensitive_finding(const ScriptUsage& usage,
                            const MetadataStore* metadata,
                            std::vector<Finding>& out) {
  const ScriptMetadata* meta = metadata_for_usage(metadata, usage);
  if (!meta || meta->verified) return;
  std::set<std::string> sensitive;
  for (const char* category : {"artifact-release", "deployment"}) {
    if (meta->categories.count(category)) sensitive.insert(category);
  }
  if (sensitive.empty()) return;
  Finding f;
  f.rule_id = "R-SENSITIVE-UNVERIFIED";
  f.severity = Severity::Medium;
  f.attack_surface = AttackSurface::Output;
  f.location = usage.location;
  f.message = "script " + meta->slug + " (" + join(sensitive, ", ") +
              ") controls pipeline output but its creator '" + meta->creator +
              "' is not verified";
  f.evidence["slug"] = meta->slug;
  f.evidence["categories"] = join(sensitive, ", ");
  f.evidence["creator"] = meta->creator;
  out.push_back(std::move(f));
}

void emit_stale_finding(const ScriptUsage& usage, const UsageLag& lag,
                        std::vector<Finding>& out) {
  if (lag.status != LagStatus::Outdated) return;
  if (lag.lag_days <= kStaleLowDays) return;
  Finding f;
  f.rule_id = "R-STALE";
  f.severity =
      lag.lag_days > kStaleMediumDays ? Severity::Medium : Severity::Low;
  f.attack_surface = AttackSurface::Runtime;
  f.location = usage.location;
  f.message = "script reference '" + usage.raw_uses + "' is outdated by " +
              std::to_string(lag.lag_days) + " days";
  f.evidence["uses"] = usage.raw_uses;
  f.evidence["lag_days"] = std::to_string(lag.lag_days);
  if (lag.first_newer_release_date) {
    f.evidence["first_newer_release"] =
        format_rfc3339(*lag.first_newer_release_date);
  }
  out.push_back(std::move(f));
}

}  // namespace

std::vector<Finding> evaluate_rules(const RepoAnalysis& analysis,
                                    const MetadataStore* metadata,
                                    const AdvisoryDb* advisories,
                                    const RuleConfig& config) {
  std::vector<Finding> findings;

  for (const ParseFailure& failure : analysis.parse_failures) {
    Finding f;
    f.rule_id = "R-PARSE-ERROR";
    f.severity = Severity::Medium;
    f.attack_surface = AttackSurface::None;
    f.location = {failure.source_path, std::nullopt, std::nullopt};
    f.message = "workflow failed to parse (" +
                std::string(to_string(failure.error.kind)) + ")";
    f.evidence["kind"] = to_string(failure.error.kind);
    f.evidence["detail"] = failure.error.message;
    findings.push_back(std::move(f));
  }

  emit_vuln_findings(analysis, advisories, findings);

  std::map<UsageLocation, const UsageLag*> lag_by_location;
  for (const UsageLag& lag : analysis.lags) {
    lag_by_location.emplace(lag.location, &lag);
  }

  for (const WorkflowAnalysis& wf : analysis.workflows) {
    emit_credential_findings(wf, config, findings);
    emit_trigger_finding(wf, config, findings);
    for (const ScriptUsage& usage : wf.usages) {
      emit_ref_findings(usage, findings);
      emit_docker_findings(usage, metadata, findings);
      emit_sensitive_finding(usage, metadata, findings);
      auto it = lag_by_location.find(usage.location);
      if (it != lag_by_location.end()) {
        emit_stale_finding(usage, *it->second, findings);
      }
    }
  }

  std::sort(findings.begin(), findings.end(),
            [](const Finding& a, const Finding& b) {
              return std::tie(a.location.source_path, a.location.job_id,
                              a.location.step_index, a.rule_id, a.message) <
                     std::tie(b.location.source_path, b.location.job_id,
                              b.location.step_index, b.rule_id, b.message);
            });
  return findings;
}

}  // namespace pipewarden
