#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pipewarden {

// Where something was found inside a repository scan. Workflow-level items
// carry neither job nor step; job-level items carry no step.
struct UsageLocation {
  std::string source_path;
  std::optional<std::string> job_id;
  std::optional<int> step_index;

  auto operator<=>(const UsageLocation&) const = default;
};

struct UsesStep {
  std::string raw_uses;
  std::map<std::string, std::string> with_args;

  bool operator==(const UsesStep&) const = default;
};

struct RunStep {
  std::string script_text;
  std::optional<std::string> shell;

  bool operator==(const RunStep&) const = default;
};

struct Step {
  int index = 0;
  std::optional<std::string> display_name;
  std::map<std::string, std::string> env;
  std::variant<UsesStep, RunStep> body;

  const UsesStep* uses() const { return std::get_if<UsesStep>(&body); }
  const RunStep* run() const { return std::get_if<RunStep>(&body); }

  bool operator==(const Step&) const = default;
};

struct Job {
  std::string id;
  std::optional<std::string> display_name;
  std::vector<std::string> runs_on;
  std::map<std::string, std::string> env;
  // Job-level reusable-workflow call (`uses:` directly under the job). Such a
  // job has no steps of its own; the call still counts as a script usage.
  std::optional<std::string> uses;
  std::vector<Step> steps;

  bool operator==(const Job&) const = default;
};

struct Workflow {
  std::string source_path;
  std::optional<std::string> name;
  std::vector<std::string> triggers;
  std::map<std::string, std::string> env;
  std::optional<std::string> permissions;
  std::vector<Job> jobs;

  bool operator==(const Workflow&) const = default;
};

enum class ParseErrorKind {
  MalformedYaml,
  MissingJobs,
  MissingTrigger,
  InvalidStructure,
};

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::MalformedYaml;
  std::string message;
};

const char* to_string(ParseErrorKind kind);

using WorkflowParseResult = std::variant<Workflow, ParseError>;

// Parses one workflow configuration file. Never throws: any input yields
// either a Workflow honoring the model invariants or a ParseError. Unknown
// keys are ignored.
WorkflowParseResult parse_workflow(std::string_view text,
                                   std::string source_path);

struct RawUsage {
  UsageLocation location;
  std::string raw_uses;

  bool operator==(const RawUsage&) const = default;
};

// All `uses:` occurrences in source order: per job, the job-level reusable
// call (if any) first, then step-level usages by step index.
std::vector<RawUsage> extract_script_usages(const Workflow& workflow);

enum class CredentialScope { WorkflowEnv, JobEnv, StepEnv, StepWith };

const char* to_string(CredentialScope scope);

struct CredentialUse {
  std::string secret_name;
  std::string expression;
  CredentialScope scope = CredentialScope::WorkflowEnv;
  UsageLocation location;
  // Set when the accessor was found inside a `run:` script rather than an
  // env/with value; the scope is reported as StepEnv in that case.
  bool in_run_script = false;

  bool operator==(const CredentialUse&) const = default;
};

// Every `secrets.<name>` accessor in env values, `with:` values, and run
// scripts. Detection is lexical; expressions are never evaluated.
std::vector<CredentialUse> extract_credentials(const Workflow& workflow);

}  // namespace pipewarden
