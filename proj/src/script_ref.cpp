#include "pipewarden/script_ref.hpp"

#include <algorithm>
#include <cctype>

#include "pipewarden/metadata.hpp"

namespace pipewarden {
namespace {

bool is_lower_hex(std::string_view text) {
  return !text.empty() &&
         std::all_of(text.begin(), text.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

bool is_full_hash(std::string_view ref) {
  return ref.size() == 40 && is_lower_hex(ref);
}

bool is_abbreviated_hash(std::string_view ref) {
  return ref.size() >= 7 && ref.size() <= 40 && is_lower_hex(ref);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

UsesParseResult parse_docker(std::string_view raw) {
  std::string_view rest = raw.substr(9);  // past "docker://"
  if (rest.empty()) return RefParseError{"empty docker image reference"};

  DockerImageRef docker;
  // name[@digest] wins over name[:tag]; a ':' only names a tag when it
  // appears after the last '/'.
  size_t at = rest.find('@');
  if (at != std::string_view::npos) {
    docker.tag_or_digest = std::string(rest.substr(at + 1));
    rest = rest.substr(0, at);
  } else {
    size_t colon = rest.rfind(':');
    size_t slash = rest.rfind('/');
    if (colon != std::string_view::npos &&
        (slash == std::string_view::npos || colon > slash)) {
      docker.tag_or_digest = std::string(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
  }
  size_t slash = rest.find('/');
  if (slash != std::string_view::npos) {
    std::string_view head = rest.substr(0, slash);
    // A registry host contains a dot or port, or is "localhost".
    if (head.find('.') != std::string_view::npos ||
        head.find(':') != std::string_view::npos || head == "localhost") {
      docker.registry = std::string(head);
      rest = rest.substr(slash + 1);
    }
  }
  if (rest.empty()) return RefParseError{"docker reference lacks an image"};
  docker.image = std::string(rest);
  return ScriptRef{std::move(docker), std::string(raw)};
}

}  // namespace

UsesParseResult parse_uses(std::string_view raw) {
  if (raw.empty()) return RefParseError{"empty uses value"};
  if (raw.rfind("docker://", 0) == 0) return parse_docker(raw);
  if (raw.rfind("./", 0) == 0 || raw.front() == '/') {
    return ScriptRef{LocalPathRef{std::string(raw)}, std::string(raw)};
  }

  RepositoryRef repo;
  size_t at = raw.find('@');
  std::string_view path = raw.substr(0, at);
  if (at != std::string_view::npos) repo.ref = std::string(raw.substr(at + 1));

  auto segments = split(path, '/');
  if (segments.size() < 2 || segments[0].empty() || segments[1].empty()) {
    return RefParseError{"expected owner/repo[@ref], got '" +
                         std::string(raw) + "'"};
  }
  repo.owner = segments[0];
  repo.repo = segments[1];
  if (segments.size() > 2) {
    std::string subpath = segments[2];
    for (size_t i = 3; i < segments.size(); ++i) subpath += "/" + segments[i];
    repo.subpath = std::move(subpath);
  }
  return ScriptRef{std::move(repo), std::string(raw)};
}

const char* to_string(RefKind kind) {
  switch (kind) {
    case RefKind::Tag:
      return "tag";
    case RefKind::Branch:
      return "branch";
    case RefKind::CommitHash:
      return "commit-hash";
    case RefKind::Invalid:
      return "invalid";
    case RefKind::Unresolved:
      return "unresolved";
  }
  return "unresolved";
}

RefKind classify_ref(const ScriptRef& ref, const ScriptMetadata* metadata) {
  const RepositoryRef* repo = ref.repository();
  if (!repo) return RefKind::Unresolved;

  const std::string& rev = repo->ref;
  if (is_full_hash(rev)) return RefKind::CommitHash;
  if (!metadata) return RefKind::Unresolved;
  if (metadata->has_release_tag(rev)) return RefKind::Tag;
  if (metadata->branches.count(rev) ||
      (!metadata->default_branch.empty() && rev == metadata->default_branch)) {
    return RefKind::Branch;
  }
  if (is_abbreviated_hash(rev)) return RefKind::CommitHash;
  return RefKind::Invalid;
}

VersionKey make_version_key(std::string_view tag,
                            std::optional<Timestamp> release_date) {
  VersionKey key;
  key.original = std::string(tag);
  key.release_date = release_date;

  std::string_view body = tag;
  if (!body.empty() && (body.front() == 'v' || body.front() == 'V'))
    body.remove_prefix(1);

  for (const auto& component : split(body, '.')) {
    size_t digits = 0;
    while (digits < component.size() &&
           std::isdigit(static_cast<unsigned char>(component[digits]))) {
      ++digits;
    }
    if (digits == 0) break;
    std::uint64_t value = 0;
    for (size_t i = 0; i < digits; ++i) {
      if (value > (UINT64_MAX - 9) / 10) {
        value = UINT64_MAX;
        break;
      }
      value = value * 10 + static_cast<std::uint64_t>(component[i] - '0');
    }
    key.numeric_components.push_back(value);
    if (digits != component.size()) break;  // non-numeric tail truncates
  }
  return key;
}

Ordering compare_versions(const VersionKey& a, const VersionKey& b) {
  size_t n = std::max(a.numeric_components.size(), b.numeric_components.size());
  for (size_t i = 0; i < n; ++i) {
    std::uint64_t av = i < a.numeric_components.size() ? a.numeric_components[i] : 0;
    std::uint64_t bv = i < b.numeric_components.size() ? b.numeric_components[i] : 0;
    if (av < bv) return Ordering::Less;
    if (av > bv) return Ordering::Greater;
  }
  if (a.release_date && b.release_date && *a.release_date != *b.release_date) {
    return *a.release_date < *b.release_date ? Ordering::Less
                                             : Ordering::Greater;
  }
  if (a.original != b.original) {
    return a.original < b.original ? Ordering::Less : Ordering::Greater;
  }
  return Ordering::Equal;
}

}  // namespace pipewarden
