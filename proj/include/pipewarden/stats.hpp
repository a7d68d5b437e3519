#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pipewarden/scan.hpp"
#include "pipewarden/staleness.hpp"

namespace pipewarden {

// Corpus-level aggregates. Everything here merges associatively and
// commutatively over disjoint repository sets, so partial aggregates can be
// computed in parallel and combined.
struct CorpusStats {
  std::int64_t repo_count = 0;
  std::int64_t usage_count = 0;
  std::int64_t parse_failures = 0;

  // Per-script facts. Runtime/creator/verified are properties of the script
  // itself (from metadata), so merging just unions consistent values.
  std::map<std::string, std::int64_t> script_repo_counts;
  std::map<std::string, std::string> script_runtime;  // slug -> runtime label
  std::map<std::string, std::string> script_creator;

  std::map<std::string, std::int64_t> creator_repo_counts;
  std::map<std::string, bool> creator_verified;

  // "uses at least one script of that runtime" per repository.
  std::map<std::string, std::int64_t> runtime_repo_counts;

  // Repositories by distinct-secret count: 0, 1, 2-5, >5.
  std::array<std::int64_t, 4> credential_histogram = {0, 0, 0, 0};

  // "references by that kind at least once" per repository.
  std::map<std::string, std::int64_t> ref_kind_repo_counts;

  std::set<std::string> artifact_release_scripts;
  std::int64_t artifact_release_repos = 0;
  std::set<std::string> deployment_scripts;
  std::int64_t deployment_repos = 0;

  LagBuckets usage_lag_buckets;
  LagBuckets repo_lag_buckets;  // every repo, bucketed by its max lag

  std::vector<std::string> vulnerable_repos;  // sorted, unique

  bool operator==(const CorpusStats&) const = default;
};

// Aggregates one analyzed repository into stats.
void accumulate_repo(CorpusStats& stats, const RepoAnalysis& analysis,
                     const MetadataStore* metadata);

CorpusStats aggregate_corpus(const std::vector<RepoAnalysis>& analyses,
                             const MetadataStore* metadata);

// Associative, commutative merge over disjoint repository sets.
CorpusStats merge_stats(CorpusStats a, const CorpusStats& b);

}  // namespace pipewarden
