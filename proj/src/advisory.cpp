#include "pipewarden/advisory.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "pipewarden/metadata.hpp"

namespace pipewarden {
namespace {

using nlohmann::json;

AdvisoryError malformed(std::string message) {
  return AdvisoryError{AdvisoryErrorKind::Malformed, std::move(message)};
}

// Version key for a tag, dated from metadata when the tag is a known release.
VersionKey key_for_tag(std::string_view tag, const ScriptMetadata* metadata) {
  std::optional<Timestamp> date;
  if (metadata) {
    if (const Release* release = metadata->find_release(tag))
      date = release->date;
  }
  return make_version_key(tag, date);
}

// Date of the release that fixes the advisory: the `fixed_in` release itself,
// or the earliest release strictly newer than `last_vulnerable`.
std::optional<Timestamp> fixing_release_date(const Advisory& advisory,
                                             const ScriptMetadata& metadata) {
  if (advisory.fixed_in) {
    const Release* release = metadata.find_release(*advisory.fixed_in);
    return release ? std::optional<Timestamp>(release->date) : std::nullopt;
  }
  VersionKey last = key_for_tag(*advisory.last_vulnerable, &metadata);
  std::optional<Timestamp> earliest;
  for (const Release& release : metadata.releases) {
    VersionKey key = make_version_key(release.tag, release.date);
    if (compare_versions(key, last) != Ordering::Greater) continue;
    if (!earliest || release.date < *earliest) earliest = release.date;
  }
  return earliest;
}

}  // namespace

const char* to_string(MatchReason reason) {
  switch (reason) {
    case MatchReason::AtOrBeforeLastVulnerable:
      return "at-or-before-last-vulnerable";
    case MatchReason::BeforeFixedIn:
      return "before-fixed-in";
    case MatchReason::UnpinnedRefAssumedCurrent:
      return "unpinned-ref-assumed-current";
  }
  return "unknown";
}

AdvisoryLoadResult AdvisoryDb::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return malformed("cannot read advisory db: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

AdvisoryLoadResult AdvisoryDb::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    return malformed(e.what());
  }
  if (!doc.is_array()) return malformed("advisory db root is not an array");

  AdvisoryDb db;
  std::set<std::string> seen_ids;
  for (const auto& record : doc) {
    Advisory advisory;
    try {
      advisory.id = record.at("id").get<std::string>();
      advisory.slug = record.at("slug").get<std::string>();
      if (record.contains("last_vulnerable") &&
          !record.at("last_vulnerable").is_null()) {
        advisory.last_vulnerable =
            record.at("last_vulnerable").get<std::string>();
      }
      if (record.contains("fixed_in") && !record.at("fixed_in").is_null()) {
        advisory.fixed_in = record.at("fixed_in").get<std::string>();
      }
      advisory.cvss = record.at("cvss").get<double>();
      advisory.impact = record.at("impact").get<std::string>();
      advisory.verified_creator = record.value("verified_creator", false);
      if (record.contains("references")) {
        for (const auto& url : record.at("references")) {
          advisory.references.push_back(url.get<std::string>());
        }
      }
    } catch (const json::exception& e) {
      return malformed(std::string("advisory record: ") + e.what());
    }

    if (advisory.last_vulnerable && advisory.fixed_in) {
      return AdvisoryError{
          AdvisoryErrorKind::BothRangeFields,
          advisory.id + " has both last_vulnerable and fixed_in"};
    }
    if (!advisory.last_vulnerable && !advisory.fixed_in) {
      return AdvisoryError{
          AdvisoryErrorKind::NoRangeField,
          advisory.id + " has neither last_vulnerable nor fixed_in"};
    }
    if (advisory.cvss < 0.0 || advisory.cvss > 10.0) {
      return AdvisoryError{AdvisoryErrorKind::BadScore,
                           advisory.id + " has cvss outside [0, 10]"};
    }
    if (!seen_ids.insert(advisory.id).second) {
      return AdvisoryError{AdvisoryErrorKind::DuplicateId,
                           "duplicate advisory id " + advisory.id};
    }
    db.advisories_.push_back(std::move(advisory));
  }
  std::sort(db.advisories_.begin(), db.advisories_.end(),
            [](const Advisory& a, const Advisory& b) { return a.id < b.id; });
  return db;
}

std::vector<const Advisory*> AdvisoryDb::for_slug(
    std::string_view slug) const {
  std::vector<const Advisory*> out;
  for (const Advisory& advisory : advisories_) {
    if (advisory.slug == slug) out.push_back(&advisory);
  }
  return out;
}

const Advisory* AdvisoryDb::find(std::string_view id) const {
  for (const Advisory& advisory : advisories_) {
    if (advisory.id == id) return &advisory;
  }
  return nullptr;
}

std::string AdvisoryDb::to_json_text() const {
  json doc = json::array();
  for (const Advisory& advisory : advisories_) {
    json record;
    record["id"] = advisory.id;
    record["slug"] = advisory.slug;
    if (advisory.last_vulnerable)
      record["last_vulnerable"] = *advisory.last_vulnerable;
    if (advisory.fixed_in) record["fixed_in"] = *advisory.fixed_in;
    record["cvss"] = advisory.cvss;
    record["impact"] = advisory.impact;
    record["verified_creator"] = advisory.verified_creator;
    record["references"] = advisory.references;
    doc.push_back(std::move(record));
  }
  return doc.dump(2) + "\n";
}

AdvisoryMatches match_advisories(const ScriptUsage& usage,
                                 const AdvisoryDb& db,
                                 const ScriptMetadata* metadata) {
  AdvisoryMatches out;
  const RepositoryRef* repo = usage.repository();
  if (!repo) return out;

  for (const Advisory* advisory : db.for_slug(repo->owner_repo())) {
    switch (usage.kind) {
      case RefKind::Tag: {
        VersionKey used = key_for_tag(repo->ref, metadata);
        bool vulnerable = false;
        MatchReason reason;
        if (advisory->fixed_in) {
          VersionKey fixed = key_for_tag(*advisory->fixed_in, metadata);
          vulnerable = compare_versions(used, fixed) == Ordering::Less;
          reason = MatchReason::BeforeFixedIn;
        } else {
          VersionKey last = key_for_tag(*advisory->last_vulnerable, metadata);
          vulnerable = compare_versions(used, last) != Ordering::Greater;
          reason = MatchReason::AtOrBeforeLastVulnerable;
        }
        if (vulnerable) {
          out.matches.push_back(
              {advisory->id, usage.location, repo->ref, reason});
        }
        break;
      }
      case RefKind::Branch:
        out.notes.push_back({advisory->id, usage.location,
                             "branch ref '" + repo->ref +
                                 "' tracks latest; assumed fixed"});
        break;
      case RefKind::CommitHash: {
        const Release* pinned =
            metadata ? metadata->find_release_by_commit(repo->ref) : nullptr;
        std::optional<Timestamp> fix_date;
        if (metadata) fix_date = fixing_release_date(*advisory, *metadata);
        if (!pinned || !fix_date) {
          out.notes.push_back({advisory->id, usage.location,
                               "cannot date pinned commit '" + repo->ref +
                                   "' against the fixing release"});
          break;
        }
        if (pinned->date < *fix_date) {
          out.matches.push_back({advisory->id, usage.location, repo->ref,
                                 advisory->fixed_in
                                     ? MatchReason::BeforeFixedIn
                                     : MatchReason::AtOrBeforeLastVulnerable});
        }
        break;
      }
      case RefKind::Invalid:
        out.notes.push_back({advisory->id, usage.location,
                             "invalid ref '" + repo->ref +
                                 "'; advisory not evaluated"});
        break;
      case RefKind::Unresolved:
        out.notes.push_back({advisory->id, usage.location,
                             "no metadata to resolve ref '" + repo->ref +
                                 "'; advisory not evaluated"});
        break;
    }
  }
  return out;
}

}  // namespace pipewarden
