#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pipewarden/usage.hpp"

namespace pipewarden {

// One known-vulnerability record. Exactly one of `last_vulnerable` /
// `fixed_in` bounds the affected versions.
struct Advisory {
  std::string id;
  std::string slug;  // "owner/repo"
  std::optional<std::string> last_vulnerable;
  std::optional<std::string> fixed_in;
  double cvss = 0.0;
  std::string impact;
  bool verified_creator = false;
  std::vector<std::string> references;

  bool operator==(const Advisory&) const = default;
};

enum class AdvisoryErrorKind {
  Malformed,
  DuplicateId,
  BothRangeFields,
  NoRangeField,
  BadScore,
};

struct AdvisoryError {
  AdvisoryErrorKind kind = AdvisoryErrorKind::Malformed;
  std::string message;
};

class AdvisoryDb;
using AdvisoryLoadResult = std::variant<AdvisoryDb, AdvisoryError>;

class AdvisoryDb {
 public:
  static AdvisoryLoadResult load(const std::filesystem::path& path);
  static AdvisoryLoadResult from_json_text(std::string_view text);

  // Advisories sorted by id.
  const std::vector<Advisory>& all() const { return advisories_; }
  std::vector<const Advisory*> for_slug(std::string_view slug) const;
  const Advisory* find(std::string_view id) const;
  std::size_t size() const { return advisories_.size(); }

  std::string to_json_text() const;

  bool operator==(const AdvisoryDb&) const = default;

 private:
  std::vector<Advisory> advisories_;
};

enum class MatchReason {
  AtOrBeforeLastVulnerable,
  BeforeFixedIn,
  // Unpinned refs track the latest revision and are assumed current; the
  // value exists for reporting completeness and is never attached to a match.
  UnpinnedRefAssumedCurrent,
};

const char* to_string(MatchReason reason);

struct VulnMatch {
  std::string advisory_id;
  UsageLocation location;
  std::string referenced_version;
  MatchReason reason = MatchReason::BeforeFixedIn;

  bool operator==(const VulnMatch&) const = default;
};

// Non-match outcomes worth surfacing: branch refs assumed current,
// commit/metadata situations that could not be resolved.
struct MatchNote {
  std::string advisory_id;
  UsageLocation location;
  std::string note;

  bool operator==(const MatchNote&) const = default;
};

struct AdvisoryMatches {
  std::vector<VulnMatch> matches;  // ordered by advisory id
  std::vector<MatchNote> notes;
};

// Detects unfixed usages of a vulnerable script version. Tag refs match when
// the version is at or before `last_vulnerable`, or strictly before
// `fixed_in`. Branch refs never match. Commit refs match when the pinned
// commit's release date precedes the fixing release.
AdvisoryMatches match_advisories(const ScriptUsage& usage,
                                 const AdvisoryDb& db,
                                 const ScriptMetadata* metadata);

}  // namespace pipewarden
