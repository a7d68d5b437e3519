#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pipewarden/advisory.hpp"
#include "pipewarden/metadata.hpp"
#include "pipewarden/staleness.hpp"
#include "pipewarden/usage.hpp"
#include "pipewarden/workflow.hpp"

namespace pipewarden {

struct WorkflowAnalysis {
  Workflow workflow;
  std::vector<ScriptUsage> usages;
  std::vector<CredentialUse> credentials;
};

struct ParseFailure {
  std::string source_path;
  ParseError error;
};

struct RepoAnalysis {
  std::string repo_id;
  std::vector<WorkflowAnalysis> workflows;
  std::vector<ParseFailure> parse_failures;
  std::vector<VulnMatch> matches;
  std::vector<MatchNote> match_notes;
  std::vector<UsageLag> lags;  // parallel to the usage order across workflows
  RepoLag repo_lag;
};

struct AnalysisOptions {
  Timestamp analysis_time = 0;
  // Measure each file's lag at the workflow file's mtime instead of
  // analysis_time.
  bool use_config_mtime = false;
};

// Workflow files under <root>/.github/workflows/, sorted by filename.
std::vector<std::filesystem::path> discover_workflow_files(
    const std::filesystem::path& root);

// Parses, classifies, matches, and lags every workflow in one repository.
// `metadata` and `advisories` may be null (everything degrades to
// Unresolved/Unknown). Reported source paths are relative to `root`,
// prefixed with `path_prefix` when non-empty.
RepoAnalysis analyze_repository(const std::filesystem::path& root,
                                std::string repo_id, std::string path_prefix,
                                const MetadataStore* metadata,
                                const AdvisoryDb* advisories,
                                const AnalysisOptions& options);

// Metadata entry for a usage, with owner/repo fallback for subpath slugs.
const ScriptMetadata* metadata_for_usage(const MetadataStore* store,
                                         const ScriptUsage& usage);

// Distinct repository slugs referenced by the workflows under `root`
// (recursing into immediate subdirectories that look like repos).
std::vector<std::string> collect_slugs(const std::filesystem::path& root);

}  // namespace pipewarden
