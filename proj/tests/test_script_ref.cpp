#include "doctest.h"
#include "pipewarden/script_ref.hpp"

#include <algorithm>
#include <random>

#include "pipewarden/metadata.hpp"
#include "test_support.hpp"

using namespace pipewarden;

namespace {

ScriptRef parse_ok(const std::string& raw) {
  auto result = parse_uses(raw);
  REQUIRE(std::holds_alternative<ScriptRef>(result));
  return std::get<ScriptRef>(result);
}

ScriptMetadata widget_like(std::vector<std::string> tags,
                           std::set<std::string> branches) {
  ScriptMetadata meta;
  meta.slug = "acme/widget";
  meta.default_branch = "main";
  meta.branches = std::move(branches);
  Timestamp date = *parse_rfc3339("2020-01-01");
  for (auto& tag : tags) {
    meta.releases.push_back({tag, date, std::nullopt});
    date += 86400;
  }
  return meta;
}

}  // namespace

TEST_CASE("parse_uses repository form") {
  ScriptRef ref = parse_ok("actions/checkout@v2");
  const RepositoryRef* repo = ref.repository();
  REQUIRE(repo != nullptr);
  CHECK(repo->owner == "actions");
  CHECK(repo->repo == "checkout");
  CHECK_FALSE(repo->subpath.has_value());
  CHECK(repo->ref == "v2");
  CHECK(ref.raw == "actions/checkout@v2");
}

TEST_CASE("parse_uses docker form") {
  ScriptRef ref = parse_ok("docker://ghcr.io/github/super-linter:v4.9.2");
  const DockerImageRef* docker = ref.docker_image();
  REQUIRE(docker != nullptr);
  CHECK(docker->registry == "ghcr.io");
  CHECK(docker->image == "github/super-linter");
  CHECK(docker->tag_or_digest == "v4.9.2");
  CHECK_FALSE(docker->is_digest_pinned());

  ScriptRef bare = parse_ok("docker://alpine:3.10");
  REQUIRE(bare.docker_image() != nullptr);
  CHECK_FALSE(bare.docker_image()->registry.has_value());
  CHECK(bare.docker_image()->image == "alpine");
  CHECK(bare.docker_image()->tag_or_digest == "3.10");

  ScriptRef digest = parse_ok(
      "docker://ghcr.io/a/b@sha256:0123456789abcdef0123456789abcdef0123456789"
      "abcdef0123456789abcdef");
  REQUIRE(digest.docker_image() != nullptr);
  CHECK(digest.docker_image()->is_digest_pinned());
}

TEST_CASE("parse_uses local form") {
  ScriptRef ref = parse_ok("./local-action");
  REQUIRE(ref.local_path() != nullptr);
  CHECK(ref.local_path()->path == "./local-action");
  CHECK(parse_ok("/abs/action").local_path() != nullptr);
}

TEST_CASE("parse_uses subpath and missing ref") {
  ScriptRef sub = parse_ok("github/codeql-action/analyze@v1");
  REQUIRE(sub.repository() != nullptr);
  CHECK(sub.repository()->subpath == "analyze");
  CHECK(sub.repository()->slug() == "github/codeql-action/analyze");
  CHECK(sub.repository()->owner_repo() == "github/codeql-action");

  ScriptRef noref = parse_ok("actions/checkout");
  REQUIRE(noref.repository() != nullptr);
  CHECK(noref.repository()->ref.empty());
}

TEST_CASE("parse_uses errors") {
  CHECK(std::holds_alternative<RefParseError>(parse_uses("")));
  CHECK(std::holds_alternative<RefParseError>(parse_uses("justname")));
  CHECK(std::holds_alternative<RefParseError>(parse_uses("owner/@v1")));
  CHECK(std::holds_alternative<RefParseError>(parse_uses("/")) == false);
  CHECK(std::holds_alternative<RefParseError>(parse_uses("docker://")));
}

TEST_CASE("parse_uses round-trips raw and reconstructs repository refs") {
  for (const char* raw :
       {"actions/checkout@v2", "a/b/c/d@main", "docker://alpine:3.10",
        "./x", "a/b@0123456789abcdef0123456789abcdef01234567"}) {
    ScriptRef ref = parse_ok(raw);
    CHECK(ref.raw == raw);
    if (const RepositoryRef* repo = ref.repository()) {
      std::string rebuilt = repo->slug() + "@" + repo->ref;
      CHECK(rebuilt == raw);
    }
  }
}

TEST_CASE("classify_ref follows the hex and membership rules") {
  ScriptMetadata meta = widget_like({"v1", "v2", "v3", "deadbee"}, {"main"});

  auto classify = [&](const std::string& rev,
                      const ScriptMetadata* m) {
    return classify_ref(parse_ok("acme/widget@" + rev), m);
  };

  CHECK(classify("v2", &meta) == RefKind::Tag);
  CHECK(classify("main", &meta) == RefKind::Branch);
  CHECK(classify("v9.9.9", &meta) == RefKind::Invalid);
  CHECK(classify("", &meta) == RefKind::Invalid);

  // Full 40-hex is a commit hash even without metadata.
  const std::string full = "0123456789abcdef0123456789abcdef01234567";
  CHECK(classify(full, nullptr) == RefKind::CommitHash);
  CHECK(classify(full, &meta) == RefKind::CommitHash);

  // Abbreviated hex needs metadata to rule out a named ref.
  CHECK(classify("0123abc", nullptr) == RefKind::Unresolved);
  CHECK(classify("0123abc", &meta) == RefKind::CommitHash);
  CHECK(classify("deadbee", &meta) == RefKind::Tag);  // named ref wins
  CHECK(classify("v2", nullptr) == RefKind::Unresolved);

  // Uppercase hex is not a hash ref.
  CHECK(classify("0123ABC", &meta) == RefKind::Invalid);
}

TEST_CASE("classification is stable under unrelated tag additions") {
  ScriptMetadata meta = widget_like({"v1", "v2"}, {"main"});
  ScriptRef usage = parse_ok("acme/widget@v2");
  REQUIRE(classify_ref(usage, &meta) == RefKind::Tag);
  for (const char* extra : {"v4", "v5", "nightly", "v2.1"}) {
    meta.releases.push_back({extra, *parse_rfc3339("2022-01-01"), {}});
    CHECK(classify_ref(usage, &meta) == RefKind::Tag);
  }
}

TEST_CASE("version key construction") {
  CHECK(make_version_key("v2.0.1").numeric_components ==
        std::vector<std::uint64_t>{2, 0, 1});
  CHECK(make_version_key("2.0.1").numeric_components ==
        std::vector<std::uint64_t>{2, 0, 1});
  CHECK(make_version_key("v2-beta").numeric_components ==
        std::vector<std::uint64_t>{2});
  CHECK(make_version_key("v1.2rc1").numeric_components ==
        std::vector<std::uint64_t>{1, 2});
  CHECK(make_version_key("release").numeric_components.empty());
  CHECK(make_version_key("v1..2").numeric_components ==
        std::vector<std::uint64_t>{1});
}

TEST_CASE("compare_versions spec examples") {
  CHECK(compare_versions(make_version_key("v2.0.0"),
                         make_version_key("v2.0.1")) == Ordering::Less);
  CHECK(compare_versions(make_version_key("v1.10"), make_version_key("v1.9")) ==
        Ordering::Greater);

  // Equal components resolved by the release-date fallback.
  auto v2 = make_version_key("v2", *parse_rfc3339("2019-07-01"));
  auto v200 = make_version_key("v2.0.0", *parse_rfc3339("2019-07-15"));
  CHECK(compare_versions(v2, v200) == Ordering::Less);
  CHECK(compare_versions(v200, v2) == Ordering::Greater);
  CHECK(compare_versions(v2, v2) == Ordering::Equal);

  // Without dates the original text breaks the tie.
  CHECK(compare_versions(make_version_key("v2"), make_version_key("v2.0.0")) ==
        Ordering::Less);
  CHECK(compare_versions(make_version_key("v2"), make_version_key("2")) ==
        Ordering::Greater);
}

namespace {

std::string random_tag(std::mt19937& rng) {
  std::uniform_int_distribution<int> family(0, 3);
  std::uniform_int_distribution<int> part(0, 20);
  std::uniform_int_distribution<int> parts(1, 4);
  std::string tag;
  int f = family(rng);
  if (f != 0) tag += "v";  // plain numeric family keeps no prefix
  int n = parts(rng);
  for (int i = 0; i < n; ++i) {
    if (i) tag += ".";
    tag += std::to_string(part(rng));
  }
  if (f == 3) {
    static const char* suffixes[] = {"-beta", "rc1", "-alpha.1", "x"};
    tag += suffixes[std::uniform_int_distribution<int>(0, 3)(rng)];
  }
  return tag;
}

}  // namespace

TEST_CASE("compare_versions is a total order agreeing with the oracle") {
  std::mt19937 rng(991);
  for (int round = 0; round < 300; ++round) {
    std::uniform_int_distribution<int> set_size(2, 8);
    int n = set_size(rng);
    bool dated = round % 2 == 0;

    std::vector<VersionKey> keys;
    std::vector<OracleTag> oracle_tags;
    Timestamp date = *parse_rfc3339("2020-01-01");
    for (int i = 0; i < n; ++i) {
      std::string tag = random_tag(rng);
      std::optional<Timestamp> key_date;
      OracleTag ot{tag, false, 0};
      if (dated) {
        date += std::uniform_int_distribution<int>(0, 90)(rng) * 86400;
        key_date = date;
        ot.has_date = true;
        ot.date = date;
      }
      keys.push_back(make_version_key(tag, key_date));
      oracle_tags.push_back(ot);
    }

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        int got = ordering_sign(compare_versions(keys[i], keys[j]));
        int want = oracle_compare(oracle_tags[i], oracle_tags[j]);
        CHECK(got == want);
        // Antisymmetry.
        CHECK(got == -ordering_sign(compare_versions(keys[j], keys[i])));
      }
    }

    // Transitivity: sorting with the comparator yields a consistent order.
    auto sorted = keys;
    std::sort(sorted.begin(), sorted.end(),
              [](const VersionKey& a, const VersionKey& b) {
                return compare_versions(a, b) == Ordering::Less;
              });
    for (size_t i = 0; i + 1 < sorted.size(); ++i) {
      CHECK(compare_versions(sorted[i], sorted[i + 1]) != Ordering::Greater);
    }
  }
}

TEST_CASE("fixture tag set {v1, v1.9, v1.10, v2, v2.0.0, v2.0.1, v3} orders") {
  std::vector<std::string> tags = {"v1",     "v1.9",   "v1.10", "v2",
                                   "v2.0.0", "v2.0.1", "v3"};
  std::vector<VersionKey> keys;
  std::vector<OracleTag> oracle_tags;
  Timestamp date = *parse_rfc3339("2019-01-01");
  for (const auto& tag : tags) {
    keys.push_back(make_version_key(tag, date));
    oracle_tags.push_back({tag, true, date});
    date += 30 * 86400;
  }
  for (size_t i = 0; i < keys.size(); ++i) {
    for (size_t j = 0; j < keys.size(); ++j) {
      CHECK(ordering_sign(compare_versions(keys[i], keys[j])) ==
            oracle_compare(oracle_tags[i], oracle_tags[j]));
    }
  }
  // The fixture dates ascend with the version order, so sorting by version
  // reproduces the input order.
  auto sorted = keys;
  std::sort(sorted.begin(), sorted.end(),
            [](const VersionKey& a, const VersionKey& b) {
              return compare_versions(a, b) == Ordering::Less;
            });
  for (size_t i = 0; i < keys.size(); ++i) {
    CHECK(sorted[i].original == tags[i]);
  }
}
