#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pipewarden/time_util.hpp"

namespace pipewarden {

struct ScriptMetadata;

struct RepositoryRef {
  std::string owner;
  std::string repo;
  std::optional<std::string> subpath;
  std::string ref;  // empty when the uses string carries no '@'

  std::string owner_repo() const { return owner + "/" + repo; }
  std::string slug() const {
    return subpath ? owner_repo() + "/" + *subpath : owner_repo();
  }

  bool operator==(const RepositoryRef&) const = default;
};

struct DockerImageRef {
  std::optional<std::string> registry;
  std::string image;
  std::optional<std::string> tag_or_digest;  // "sha256:..." when a digest

  bool is_digest_pinned() const {
    return tag_or_digest && tag_or_digest->rfind("sha256:", 0) == 0;
  }

  bool operator==(const DockerImageRef&) const = default;
};

struct LocalPathRef {
  std::string path;

  bool operator==(const LocalPathRef&) const = default;
};

struct ScriptRef {
  std::variant<RepositoryRef, DockerImageRef, LocalPathRef> form;
  std::string raw;

  const RepositoryRef* repository() const {
    return std::get_if<RepositoryRef>(&form);
  }
  const DockerImageRef* docker_image() const {
    return std::get_if<DockerImageRef>(&form);
  }
  const LocalPathRef* local_path() const {
    return std::get_if<LocalPathRef>(&form);
  }

  bool operator==(const ScriptRef&) const = default;
};

struct RefParseError {
  std::string message;
};

using UsesParseResult = std::variant<ScriptRef, RefParseError>;

// Parses a raw `uses:` value into one of the three reference forms.
UsesParseResult parse_uses(std::string_view raw);

enum class RefKind { Tag, Branch, CommitHash, Invalid, Unresolved };

const char* to_string(RefKind kind);

// Classifies how a Repository reference names its revision. A full 40-hex
// ref is always a commit hash; 7-39 hex wins only once metadata rules out an
// identically named tag or branch. Without metadata anything non-40-hex is
// Unresolved.
RefKind classify_ref(const ScriptRef& ref, const ScriptMetadata* metadata);

// Version ordering key for a release tag: one leading 'v'/'V' stripped,
// dot-separated numeric components, non-numeric tails truncated.
struct VersionKey {
  std::vector<std::uint64_t> numeric_components;
  std::string original;
  std::optional<Timestamp> release_date;

  bool operator==(const VersionKey&) const = default;
};

VersionKey make_version_key(std::string_view tag,
                            std::optional<Timestamp> release_date = {});

enum class Ordering { Less, Equal, Greater };

// Total order: numeric components compared lexicographically with missing
// components as 0; ties fall back to release date, then to the original tag
// text.
Ordering compare_versions(const VersionKey& a, const VersionKey& b);

}  // namespace pipewarden
