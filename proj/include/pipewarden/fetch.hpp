#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pipewarden/metadata.hpp"

namespace pipewarden {

struct FetchOptions {
  std::string api_base = "https://api.github.com";
  std::optional<std::string> auth_token;
  // Creators treated as verified; the platform signal is not uniformly
  // exposed through the API, so an editable allow-list stands in.
  std::set<std::string> verified_creators;
  std::map<std::string, std::set<std::string>> categories;
  // Upper bound on request rate; 0 means unlimited.
  int max_requests_per_second = 0;
};

struct FetchReport {
  int fetched = 0;
  int partial = 0;
  std::vector<std::string> errors;  // one line per partial slug
};

// Fetches release tags (dated by their commit), branches, default branch,
// creator, and the manifest-classified runtime for each slug, merging into
// `store` (idempotent by slug). Per-slug failures leave a partial entry and
// never abort the run.
FetchReport fetch_metadata(const std::vector<std::string>& slugs,
                           MetadataStore& store, const FetchOptions& options);

}  // namespace pipewarden
