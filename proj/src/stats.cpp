#include "pipewarden/stats.hpp"

#include <algorithm>

namespace pipewarden {
namespace {

void add_counts(std::map<std::string, std::int64_t>& into,
                const std::map<std::string, std::int64_t>& from) {
  for (const auto& [key, count] : from) into[key] += count;
}

template <typename V>
void union_facts(std::map<std::string, V>& into,
                 const std::map<std::string, V>& from) {
  for (const auto& [key, value] : from) into.emplace(key, value);
}

std::size_t histogram_bucket(std::size_t distinct_secrets) {
  if (distinct_secrets == 0) return 0;
  if (distinct_secrets == 1) return 1;
  if (distinct_secrets <= 5) return 2;
  return 3;
}

}  // namespace

void accumulate_repo(CorpusStats& stats, const RepoAnalysis& analysis,
                     const MetadataStore* metadata) {
  stats.repo_count += 1;
  stats.parse_failures +=
      static_cast<std::int64_t>(analysis.parse_failures.size());

  std::set<std::string> repo_scripts;
  std::set<std::string> repo_creators;
  std::set<std::string> repo_runtimes;
  std::set<std::string> repo_ref_kinds;
  std::set<std::string> repo_secrets;
  bool uses_artifact_release = false;
  bool uses_deployment = false;

  for (const WorkflowAnalysis& wf : analysis.workflows) {
    for (const CredentialUse& cred : wf.credentials) {
      repo_secrets.insert(cred.secret_name);
    }
    for (const ScriptUsage& usage : wf.usages) {
      stats.usage_count += 1;
      const RepositoryRef* repo = usage.repository();
      if (!repo) continue;

      std::string slug = repo->slug();
      repo_scripts.insert(slug);
      repo_ref_kinds.insert(to_string(usage.kind));

      const ScriptMetadata* meta = metadata_for_usage(metadata, usage);
      // Composite scripts count under raw_command, matching how shell-driven
      // scripts are grouped; the precise kind stays in the metadata.
      RuntimeKind kind = meta ? meta->runtime.kind : RuntimeKind::Unknown;
      if (kind == RuntimeKind::Composite) kind = RuntimeKind::RawCommand;
      std::string runtime_label = to_string(kind);
      std::string creator = meta ? meta->creator : repo->owner;

      stats.script_runtime.emplace(slug, runtime_label);
      stats.script_creator.emplace(slug, creator);
      repo_runtimes.insert(runtime_label);
      repo_creators.insert(creator);
      stats.creator_verified.emplace(creator, meta ? meta->verified : false);

      if (meta && meta->categories.count("artifact-release")) {
        stats.artifact_release_scripts.insert(slug);
        uses_artifact_release = true;
      }
      if (meta && meta->categories.count("deployment")) {
        stats.deployment_scripts.insert(slug);
        uses_deployment = true;
      }
    }
  }

  for (const auto& slug : repo_scripts) stats.script_repo_counts[slug] += 1;
  for (const auto& creator : repo_creators)
    stats.creator_repo_counts[creator] += 1;
  for (const auto& runtime : repo_runtimes)
    stats.runtime_repo_counts[runtime] += 1;
  for (const auto& kind : repo_ref_kinds)
    stats.ref_kind_repo_counts[kind] += 1;
  stats.credential_histogram[histogram_bucket(repo_secrets.size())] += 1;
  if (uses_artifact_release) stats.artifact_release_repos += 1;
  if (uses_deployment) stats.deployment_repos += 1;

  stats.usage_lag_buckets += bucket_lags(analysis.lags);
  bucket_lag_days(analysis.repo_lag.max_lag_days, stats.repo_lag_buckets);

  if (!analysis.matches.empty()) {
    auto pos = std::lower_bound(stats.vulnerable_repos.begin(),
                                stats.vulnerable_repos.end(),
                                analysis.repo_id);
    if (pos == stats.vulnerable_repos.end() || *pos != analysis.repo_id) {
      stats.vulnerable_repos.insert(pos, analysis.repo_id);
    }
  }
}

CorpusStats aggregate_corpus(const std::vector<RepoAnalysis>& analyses,
                             const MetadataStore* metadata) {
  CorpusStats stats;
  for (const RepoAnalysis& analysis : analyses) {
    accumulate_repo(stats, analysis, metadata);
  }
  return stats;
}

CorpusStats merge_stats(CorpusStats a, const CorpusStats& b) {
  a.repo_count += b.repo_count;
  a.usage_count += b.usage_count;
  a.parse_failures += b.parse_failures;

  add_counts(a.script_repo_counts, b.script_repo_counts);
  union_facts(a.script_runtime, b.script_runtime);
  union_facts(a.script_creator, b.script_creator);
  add_counts(a.creator_repo_counts, b.creator_repo_counts);
  union_facts(a.creator_verified, b.creator_verified);
  add_counts(a.runtime_repo_counts, b.runtime_repo_counts);
  for (std::size_t i = 0; i < a.credential_histogram.size(); ++i) {
    a.credential_histogram[i] += b.credential_histogram[i];
  }
  add_counts(a.ref_kind_repo_counts, b.ref_kind_repo_counts);

  a.artifact_release_scripts.insert(b.artifact_release_scripts.begin(),
                                    b.artifact_release_scripts.end());
  a.artifact_release_repos += b.artifact_release_repos;
  a.deployment_scripts.insert(b.deployment_scripts.begin(),
                              b.deployment_scripts.end());
  a.deployment_repos += b.deployment_repos;

  a.usage_lag_buckets += b.usage_lag_buckets;
  a.repo_lag_buckets += b.repo_lag_buckets;

  std::vector<std::string> merged;
  merged.reserve(a.vulnerable_repos.size() + b.vulnerable_repos.size());
  std::set_union(a.vulnerable_repos.begin(), a.vulnerable_repos.end(),
                 b.vulnerable_repos.begin(), b.vulnerable_repos.end(),
                 std::back_inserter(merged));
  a.vulnerable_repos = std::move(merged);
  return a;
}

}  // namespace pipewarden
