#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pipewarden/time_util.hpp"

namespace pipewarden {

struct Release {
  std::string tag;
  Timestamp date = 0;
  std::optional<std::string> commit;  // 40-hex when present

  bool operator==(const Release&) const = default;
};

enum class RuntimeKind { NodeJs, Docker, Composite, RawCommand, Unknown };

const char* to_string(RuntimeKind kind);
std::optional<RuntimeKind> runtime_kind_from_string(std::string_view label);

struct Runtime {
  RuntimeKind kind = RuntimeKind::Unknown;
  // NodeJs: node version text; Docker: image source; Unknown: optional note.
  std::optional<std::string> detail;

  bool operator==(const Runtime&) const = default;
};

// Classifies a script's runtime from its action manifest (`action.yml`).
// Total: malformed or unrecognized manifests yield Unknown.
Runtime classify_runtime(std::string_view manifest_text);

struct ScriptMetadata {
  std::string slug;  // "owner/repo" or "owner/repo/subpath"
  std::string creator;
  bool verified = false;
  std::string default_branch;
  std::set<std::string> branches;
  std::vector<Release> releases;  // ascending by date, ties by tag text
  Runtime runtime;
  std::set<std::string> categories;

  bool has_release_tag(std::string_view tag) const;
  const Release* find_release(std::string_view tag) const;
  // Matches full hashes and unique prefixes of release commits.
  const Release* find_release_by_commit(std::string_view hash) const;

  bool operator==(const ScriptMetadata&) const = default;
};

enum class SnapshotErrorKind { Malformed, DuplicateSlug, BadTimestamp };

struct SnapshotError {
  SnapshotErrorKind kind = SnapshotErrorKind::Malformed;
  std::string message;
};

class MetadataStore;
using SnapshotLoadResult = std::variant<MetadataStore, SnapshotError>;

// In-memory slug -> metadata map backed by a JSON snapshot file, so every
// analysis runs offline.
class MetadataStore {
 public:
  static SnapshotLoadResult load(const std::filesystem::path& path);
  static SnapshotLoadResult from_json_text(std::string_view text);

  const ScriptMetadata* lookup(std::string_view slug) const;
  // Lookup for a usage: exact slug first, then the bare owner/repo (subpath
  // actions share their repository's tags and creator).
  const ScriptMetadata* lookup_for_usage(std::string_view slug,
                                         std::string_view owner_repo) const;

  void upsert(ScriptMetadata metadata);
  // Union of extra categories, keyed by slug; unknown slugs are ignored.
  void apply_categories(
      const std::map<std::string, std::set<std::string>>& category_map);

  std::string to_json_text() const;  // snapshot schema, sorted keys, "\n"-terminated
  bool save(const std::filesystem::path& path) const;

  std::size_t size() const { return scripts_.size(); }
  bool empty() const { return scripts_.empty(); }
  const std::map<std::string, ScriptMetadata>& scripts() const {
    return scripts_;
  }

  bool operator==(const MetadataStore&) const = default;

 private:
  std::map<std::string, ScriptMetadata> scripts_;
};

// Loads a category-map file: JSON object slug -> [category, ...].
std::variant<std::map<std::string, std::set<std::string>>, SnapshotError>
load_category_map(const std::filesystem::path& path);

}  // namespace pipewarden
