#include "doctest.h"
#include "pipewarden/rules.hpp"

#include <algorithm>

#include "test_support.hpp"

using namespace pipewarden;

namespace {

MetadataStore load_fixture_store() {
  auto result = MetadataStore::load(fixture_dir() / "snapshot.json");
  REQUIRE(std::holds_alternative<MetadataStore>(result));
  return std::get<MetadataStore>(std::move(result));
}

AdvisoryDb load_bundled_db() {
  auto result = AdvisoryDb::load(bundled_data_dir() / "advisories.json");
  REQUIRE(std::holds_alternative<AdvisoryDb>(result));
  return std::get<AdvisoryDb>(std::move(result));
}

RepoAnalysis analyze(const std::filesystem::path& repo_root,
                     const std::string& repo_id, const MetadataStore* metadata,
                     const AdvisoryDb* advisories, const char* as_of) {
  AnalysisOptions options{*parse_rfc3339(as_of), false};
  return analyze_repository(repo_root, repo_id, "", metadata, advisories,
                            options);
}

std::vector<Finding> findings_for(const std::string& rule,
                                  const std::vector<Finding>& findings) {
  std::vector<Finding> out;
  for (const auto& finding : findings) {
    if (finding.rule_id == rule) out.push_back(finding);
  }
  return out;
}

}  // namespace

TEST_CASE("severity bands from cvss") {
  CHECK(severity_from_cvss(9.8) == Severity::Critical);
  CHECK(severity_from_cvss(9.0) == Severity::Critical);
  CHECK(severity_from_cvss(7.5) == Severity::High);
  CHECK(severity_from_cvss(4.4) == Severity::Medium);
  CHECK(severity_from_cvss(3.9) == Severity::Low);
}

TEST_CASE("attack surfaces from advisory impacts") {
  CHECK(surface_from_impact("Credential Leakage") == AttackSurface::Input);
  CHECK(surface_from_impact("Remote Code Execution") == AttackSurface::Runtime);
  CHECK(surface_from_impact("OS Command Injection") == AttackSurface::Runtime);
  CHECK(surface_from_impact("Artifact Tampering") == AttackSurface::Output);
}

TEST_CASE("example workflow with no metadata: two mutable refs, one secret count") {
  RepoAnalysis analysis =
      analyze(fixture_dir() / "fig2", "fig2", nullptr, nullptr, "2022-06-15");
  REQUIRE(analysis.parse_failures.empty());

  auto findings = evaluate_rules(analysis, nullptr, nullptr, RuleConfig{});
  CHECK(findings_for("R-REF-MUTABLE", findings).size() == 2);

  auto cred_count = findings_for("R-CRED-COUNT", findings);
  REQUIRE(cred_count.size() == 1);
  CHECK(cred_count[0].severity == Severity::Info);
  CHECK(cred_count[0].evidence.at("count") == "1");
  CHECK(cred_count[0].evidence.at("secrets") == "GITHUB_TOKEN");

  CHECK(findings_for("R-CRED-BROAD", findings).empty());  // step-scoped secret
  CHECK(findings.size() == 3);
}

TEST_CASE("known-vulnerable usage yields one critical runtime finding") {
  MetadataStore store = load_fixture_store();
  AdvisoryDb db = load_bundled_db();
  RepoAnalysis analysis =
      analyze(fixture_dir() / "corpus15/repo-vuln-gajira-create", "repo",
              &store, &db, "2022-06-15");
  REQUIRE(analysis.matches.size() == 1);

  auto findings = evaluate_rules(analysis, &store, &db, RuleConfig{});
  auto vuln = findings_for("R-VULN-KNOWN", findings);
  REQUIRE(vuln.size() == 1);
  CHECK(vuln[0].severity == Severity::Critical);
  CHECK(vuln[0].attack_surface == AttackSurface::Runtime);
  CHECK(vuln[0].message.find("CVE-2020-14188") != std::string::npos);
  CHECK(vuln[0].evidence.at("cvss") == "9.8");
}

TEST_CASE("workflow with neither uses nor secrets yields no findings") {
  MetadataStore store = load_fixture_store();
  AdvisoryDb db = load_bundled_db();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus15/repo-clean-07",
                                  "repo", &store, &db, "2022-06-15");
  CHECK(evaluate_rules(analysis, &store, &db, RuleConfig{}).empty());
}

TEST_CASE("broad credentials and external triggers on the deploy fixture") {
  MetadataStore store = load_fixture_store();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus10/repo04", "repo04",
                                  &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, nullptr, RuleConfig{});

  auto broad = findings_for("R-CRED-BROAD", findings);
  REQUIRE(broad.size() == 1);
  CHECK(broad[0].severity == Severity::Medium);
  CHECK(broad[0].attack_surface == AttackSurface::Input);
  CHECK(broad[0].evidence.at("secret") == "DEPLOY_KEY");
  CHECK(broad[0].evidence.at("scope") == "job-env");

  auto trigger = findings_for("R-TRIGGER-BROAD", findings);
  REQUIRE(trigger.size() == 1);
  CHECK(trigger[0].evidence.at("triggers") == "pull_request_target");

  // deploy-pages: deployment category, unverified creator, docker runtime.
  auto sensitive = findings_for("R-SENSITIVE-UNVERIFIED", findings);
  REQUIRE(sensitive.size() == 1);
  CHECK(sensitive[0].attack_surface == AttackSurface::Output);
  CHECK(sensitive[0].evidence.at("slug") == "devco/deploy-pages");

  auto docker = findings_for("R-DOCKER-SOURCE", findings);
  REQUIRE(docker.size() == 1);
  CHECK(docker[0].evidence.at("reasons").find("unverified-creator") !=
        std::string::npos);
  CHECK(docker[0].evidence.at("reasons").find("mutable-image-tag") !=
        std::string::npos);
}

TEST_CASE("docker-runtime script from a verified creator still flags a mutable image") {
  MetadataStore store = load_fixture_store();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus10/repo02", "repo02",
                                  &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, nullptr, RuleConfig{});
  auto docker = findings_for("R-DOCKER-SOURCE", findings);
  REQUIRE(docker.size() == 1);
  CHECK(docker[0].evidence.at("slug") == "github/super-linter");
  CHECK(docker[0].evidence.at("reasons") == "mutable-image-tag");
}

TEST_CASE("raw docker:// usages flag mutable references") {
  MetadataStore store = load_fixture_store();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus15/repo-clean-10",
                                  "repo", &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, nullptr, RuleConfig{});
  bool saw_alpine = false;
  for (const auto& finding : findings_for("R-DOCKER-SOURCE", findings)) {
    if (finding.evidence.count("image") &&
        finding.evidence.at("image") == "alpine") {
      saw_alpine = true;
      CHECK(finding.evidence.at("reasons") == "mutable-reference");
    }
  }
  CHECK(saw_alpine);
}

TEST_CASE("stale findings escalate at the 3- and 12-month marks") {
  MetadataStore store = load_fixture_store();

  // checkout@v2 lags 106 days at 2022-06-15: Low.
  RepoAnalysis repo01 = analyze(fixture_dir() / "corpus10/repo01", "repo01",
                                &store, nullptr, "2022-06-15");
  auto low = findings_for(
      "R-STALE", evaluate_rules(repo01, &store, nullptr, RuleConfig{}));
  REQUIRE(low.size() == 1);
  CHECK(low[0].severity == Severity::Low);
  CHECK(low[0].evidence.at("lag_days") == "106");

  // super-linter@v3 lags 379 days: Medium.
  RepoAnalysis repo02 = analyze(fixture_dir() / "corpus10/repo02", "repo02",
                                &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(repo02, &store, nullptr, RuleConfig{});
  auto stale = findings_for("R-STALE", findings);
  REQUIRE(stale.size() == 1);
  CHECK(stale[0].severity == Severity::Medium);
  CHECK(stale[0].evidence.at("lag_days") == "379");

  // Within three months nothing fires.
  RepoAnalysis fresh = analyze(fixture_dir() / "corpus10/repo01", "repo01",
                               &store, nullptr, "2022-04-01");
  CHECK(findings_for("R-STALE",
                     evaluate_rules(fresh, &store, nullptr, RuleConfig{}))
            .empty());
}

TEST_CASE("invalid refs are reported with surface none") {
  MetadataStore store = load_fixture_store();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus10/repo07", "repo07",
                                  &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, nullptr, RuleConfig{});
  auto invalid = findings_for("R-REF-INVALID", findings);
  REQUIRE(invalid.size() == 1);
  CHECK(invalid[0].severity == Severity::Medium);
  CHECK(invalid[0].attack_surface == AttackSurface::None);
  CHECK(invalid[0].evidence.at("uses") == "acme/widget@v9.9.9");
}

TEST_CASE("parse failures become diagnostics") {
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus_bad/repoB", "repoB",
                                  nullptr, nullptr, "2022-06-15");
  REQUIRE(analysis.parse_failures.size() == 1);
  auto findings = evaluate_rules(analysis, nullptr, nullptr, RuleConfig{});
  auto parse = findings_for("R-PARSE-ERROR", findings);
  REQUIRE(parse.size() == 1);
  CHECK(parse[0].location.source_path.find("ci.yml") != std::string::npos);
}

TEST_CASE("over-threshold secret counts are called out") {
  MetadataStore store = load_fixture_store();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus10/repo08", "repo08",
                                  &store, nullptr, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, nullptr, RuleConfig{});
  bool saw_six = false;
  for (const auto& finding : findings_for("R-CRED-COUNT", findings)) {
    if (finding.evidence.at("count") == "6") {
      saw_six = true;
      CHECK(finding.severity == Severity::Info);
      CHECK(finding.evidence.at("exceeds_threshold") == "true");
      CHECK(finding.message.find("more than 5") != std::string::npos);
    }
  }
  CHECK(saw_six);
}

TEST_CASE("every vulnerability match yields exactly one finding") {
  MetadataStore store = load_fixture_store();
  AdvisoryDb db = load_bundled_db();
  size_t total_matches = 0;
  size_t total_vuln_findings = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(fixture_dir() / "corpus15")) {
    if (!entry.is_directory()) continue;
    RepoAnalysis analysis = analyze(entry.path(),
                                    entry.path().filename().string(), &store,
                                    &db, "2022-06-15");
    total_matches += analysis.matches.size();
    total_vuln_findings +=
        findings_for("R-VULN-KNOWN",
                     evaluate_rules(analysis, &store, &db, RuleConfig{}))
            .size();
  }
  CHECK(total_matches == 5);
  CHECK(total_vuln_findings == total_matches);
}

TEST_CASE("findings are sorted by location then rule") {
  MetadataStore store = load_fixture_store();
  AdvisoryDb db = load_bundled_db();
  RepoAnalysis analysis = analyze(fixture_dir() / "corpus10/repo04", "repo04",
                                  &store, &db, "2022-06-15");
  auto findings = evaluate_rules(analysis, &store, &db, RuleConfig{});
  CHECK(std::is_sorted(
      findings.begin(), findings.end(),
      [](const Finding& a, const Finding& b) {
        return std::tie(a.location.source_path, a.location.job_id,
                        a.location.step_index, a.rule_id, a.message) <
               std::tie(b.location.source_path, b.location.job_id,
                        b.location.step_index, b.rule_id, b.message);
      }));
}

TEST_CASE("rule catalog is sorted and complete") {
  const auto& catalog = rule_catalog();
  CHECK(catalog.size() == 10);
  CHECK(std::is_sorted(catalog.begin(), catalog.end(),
                       [](const RuleDescriptor& a, const RuleDescriptor& b) {
                         return a.id < b.id;
                       }));
}
