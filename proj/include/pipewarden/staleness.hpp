#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pipewarden/usage.hpp"

namespace pipewarden {

enum class LagStatus { UpToDate, Outdated, TracksBranch, PinnedCommit, Unknown };

const char* to_string(LagStatus status);

struct UsageLag {
  UsageLocation location;
  LagStatus status = LagStatus::Unknown;
  std::optional<Timestamp> referenced_release_date;
  std::optional<Timestamp> first_newer_release_date;
  std::int64_t lag_days = 0;  // 0 unless Outdated or PinnedCommit

  bool operator==(const UsageLag&) const = default;
};

// How stale one usage is at `analysis_time`. A tag equal to the newest
// release (by version order) is up to date; an older tag lags from the
// earliest strictly-newer release. Commit pins lag from the earliest release
// dated after the pinned commit. Branch refs track latest and never lag.
UsageLag compute_usage_lag(const ScriptUsage& usage,
                           const ScriptMetadata* metadata,
                           Timestamp analysis_time);

struct RepoLag {
  std::string repo;
  std::int64_t max_lag_days = 0;
  std::optional<UsageLocation> contributing_usage;

  bool operator==(const RepoLag&) const = default;
};

// The repository lag is the maximum usage lag; ties keep the first usage.
RepoLag compute_repo_lag(std::string repo, const std::vector<UsageLag>& lags);

// Half-open day buckets: [0,30) [30,90) [90,365) [365,inf). One month is
// 30 days.
struct LagBuckets {
  std::int64_t under_one_month = 0;
  std::int64_t one_to_three_months = 0;
  std::int64_t three_to_twelve_months = 0;
  std::int64_t over_twelve_months = 0;

  std::int64_t total() const {
    return under_one_month + one_to_three_months + three_to_twelve_months +
           over_twelve_months;
  }

  LagBuckets& operator+=(const LagBuckets& other);
  bool operator==(const LagBuckets&) const = default;
};

void bucket_lag_days(std::int64_t lag_days, LagBuckets& buckets);

// Buckets Outdated and PinnedCommit lags only.
LagBuckets bucket_lags(const std::vector<UsageLag>& lags);

}  // namespace pipewarden
