#include "pipewarden/staleness.hpp"

#include <algorithm>

#include "pipewarden/metadata.hpp"

namespace pipewarden {

const char* to_string(LagStatus status) {
  switch (status) {
    case LagStatus::UpToDate:
      return "up-to-date";
    case LagStatus::Outdated:
      return "outdated";
    case LagStatus::TracksBranch:
      return "tracks-branch";
    case LagStatus::PinnedCommit:
      return "pinned-commit";
    case LagStatus::Unknown:
      return "unknown";
  }
  return "unknown";
}

UsageLag compute_usage_lag(const ScriptUsage& usage,
                           const ScriptMetadata* metadata,
                           Timestamp analysis_time) {
  UsageLag lag;
  lag.location = usage.location;

  const RepositoryRef* repo = usage.repository();
  if (!repo || !metadata) return lag;  // Unknown

  switch (usage.kind) {
    case RefKind::Branch:
      lag.status = LagStatus::TracksBranch;
      return lag;
    case RefKind::Invalid:
    case RefKind::Unresolved:
      return lag;  // Unknown
    case RefKind::Tag: {
      const Release* referenced = metadata->find_release(repo->ref);
      if (!referenced) return lag;
      lag.referenced_release_date = referenced->date;
      VersionKey used = make_version_key(referenced->tag, referenced->date);

      // Earliest-dated release strictly newer by version order.
      const Release* first_newer = nullptr;
      for (const Release& release : metadata->releases) {
        VersionKey key = make_version_key(release.tag, release.date);
        if (compare_versions(key, used) != Ordering::Greater) continue;
        if (!first_newer || release.date < first_newer->date)
          first_newer = &release;
      }
      if (!first_newer) {
        lag.status = LagStatus::UpToDate;
        return lag;
      }
      lag.status = LagStatus::Outdated;
      lag.first_newer_release_date = first_newer->date;
      lag.lag_days =
          std::max<std::int64_t>(0, days_between(first_newer->date,
                                                 analysis_time));
      return lag;
    }
    case RefKind::CommitHash: {
      lag.status = LagStatus::PinnedCommit;
      const Release* pinned = metadata->find_release_by_commit(repo->ref);
      if (!pinned) return lag;  // commit not datable, lag stays 0
      lag.referenced_release_date = pinned->date;
      const Release* first_newer = nullptr;
      for (const Release& release : metadata->releases) {
        if (release.date <= pinned->date) continue;
        if (!first_newer || release.date < first_newer->date)
          first_newer = &release;
      }
      if (first_newer) {
        lag.first_newer_release_date = first_newer->date;
        lag.lag_days =
            std::max<std::int64_t>(0, days_between(first_newer->date,
                                                   analysis_time));
      }
      return lag;
    }
  }
  return lag;
}

RepoLag compute_repo_lag(std::string repo, const std::vector<UsageLag>& lags) {
  RepoLag out;
  out.repo = std::move(repo);
  for (const UsageLag& lag : lags) {
    if (!out.contributing_usage || lag.lag_days > out.max_lag_days) {
      out.max_lag_days = lag.lag_days;
      out.contributing_usage = lag.location;
    }
  }
  return out;
}

LagBuckets& LagBuckets::operator+=(const LagBuckets& other) {
  under_one_month += other.under_one_month;
  one_to_three_months += other.one_to_three_months;
  three_to_twelve_months += other.three_to_twelve_months;
  over_twelve_months += other.over_twelve_months;
  return *this;
}

void bucket_lag_days(std::int64_t lag_days, LagBuckets& buckets) {
  if (lag_days < 30) {
    ++buckets.under_one_month;
  } else if (lag_days < 90) {
    ++buckets.one_to_three_months;
  } else if (lag_days < 365) {
    ++buckets.three_to_twelve_months;
  } else {
    ++buckets.over_twelve_months;
  }
}

LagBuckets bucket_lags(const std::vector<UsageLag>& lags) {
  LagBuckets buckets;
  for (const UsageLag& lag : lags) {
    if (lag.status != LagStatus::Outdated &&
        lag.status != LagStatus::PinnedCommit) {
      continue;
    }
    bucket_lag_days(lag.lag_days, buckets);
  }
  return buckets;
}

}  // namespace pipewarden
