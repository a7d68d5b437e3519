#include "pipewarden/workflow.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <functional>
#include <sstream>

namespace pipewarden {
namespace {

std::string scalar_or_dump(const YAML::Node& node) {
  if (node.IsScalar()) return node.Scalar();
  std::ostringstream out;
  out << node;
  return out.str();
}

std::map<std::string, std::string> read_env_map(const YAML::Node& node) {
  std::map<std::string, std::string> env;
  if (!node || !node.IsMap()) return env;
  for (const auto& entry : node) {
    if (!entry.first.IsScalar()) continue;
    env[entry.first.Scalar()] = scalar_or_dump(entry.second);
  }
  return env;
}

std::vector<std::string> read_triggers(const YAML::Node& node) {
  std::vector<std::string> triggers;
  if (!node) return triggers;
  if (node.IsScalar()) {
    if (!node.Scalar().empty()) triggers.push_back(node.Scalar());
  } else if (node.IsSequence()) {
    for (const auto& item : node) {
      if (item.IsScalar()) triggers.push_back(item.Scalar());
    }
  } else if (node.IsMap()) {
    for (const auto& entry : node) {
      if (entry.first.IsScalar()) triggers.push_back(entry.first.Scalar());
    }
  }
  return triggers;
}

std::vector<std::string> read_runs_on(const YAML::Node& node) {
  std::vector<std::string> labels;
  if (!node) return labels;
  if (node.IsScalar()) {
    labels.push_back(node.Scalar());
  } else if (node.IsSequence()) {
    for (const auto& item : node) {
      if (item.IsScalar()) labels.push_back(item.Scalar());
    }
  }
  return labels;
}

std::optional<Step> read_step(const YAML::Node& node, int index) {
  if (!node.IsMap()) return std::nullopt;
  Step step;
  step.index = index;
  if (node["name"] && node["name"].IsScalar())
    step.display_name = node["name"].Scalar();
  step.env = read_env_map(node["env"]);

  if (node["uses"] && node["uses"].IsScalar()) {
    UsesStep uses;
    uses.raw_uses = node["uses"].Scalar();
    uses.with_args = read_env_map(node["with"]);
    step.body = std::move(uses);
    return step;
  }
  if (node["run"]) {
    RunStep run;
    run.script_text = scalar_or_dump(node["run"]);
    if (node["shell"] && node["shell"].IsScalar())
      run.shell = node["shell"].Scalar();
    step.body = std::move(run);
    return step;
  }
  return std::nullopt;
}

// Finds `secrets.<ident>` accessors in a text blob. The reported expression
// is the enclosing `${{ ... }}` block when one surrounds the accessor.
void find_secret_accessors(
    const std::string& text,
    const std::function<void(std::string /*name*/, std::string /*expr*/)>&
        emit) {
  static const std::string needle = "secrets.";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    size_t name_begin = pos + needle.size();
    size_t name_end = name_begin;
    while (name_end < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[name_end])) ||
            text[name_end] == '_')) {
      ++name_end;
    }
    if (name_end == name_begin ||
        std::isdigit(static_cast<unsigned char>(text[name_begin]))) {
      pos = name_begin;
      continue;
    }
    std::string name = text.substr(name_begin, name_end - name_begin);

    std::string expr = text.substr(pos, name_end - pos);
    size_t open = text.rfind("${{", pos);
    if (open != std::string::npos) {
      // Inside the block iff the first "}}" after the opener follows the name.
      size_t close = text.find("}}", open);
      if (close != std::string::npos && close >= name_end) {
        expr = text.substr(open, close + 2 - open);
      }
    }
    emit(std::move(name), std::move(expr));
    pos = name_end;
  }
}

void collect_from_values(const std::map<std::string, std::string>& values,
                         CredentialScope scope, const UsageLocation& location,
                         bool in_run_script,
                         std::vector<CredentialUse>& out) {
  for (const auto& [key, value] : values) {
    find_secret_accessors(value, [&](std::string name, std::string expr) {
      CredentialUse use;
      use.secret_name = std::move(name);
      use.expression = std::move(expr);
      use.scope = scope;
      use.location = location;
      use.in_run_script = in_run_script;
      out.push_back(std::move(use));
    });
  }
}

}  // namespace

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::MalformedYaml:
      return "malformed-yaml";
    case ParseErrorKind::MissingJobs:
      return "missing-jobs";
    case ParseErrorKind::MissingTrigger:
      return "missing-trigger";
    case ParseErrorKind::InvalidStructure:
      return "invalid-structure";
  }
  return "unknown";
}

const char* to_string(CredentialScope scope) {
  switch (scope) {
    case CredentialScope::WorkflowEnv:
      return "workflow-env";
    case CredentialScope::JobEnv:
      return "job-env";
    case CredentialScope::StepEnv:
      return "step-env";
    case CredentialScope::StepWith:
      return "step-with";
  }
  return "unknown";
}

WorkflowParseResult parse_workflow(std::string_view text,
                                   std::string source_path) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const std::exception& e) {
    return ParseError{ParseErrorKind::MalformedYaml, e.what()};
  }

  try {
    if (!root.IsMap()) {
      return ParseError{ParseErrorKind::MalformedYaml,
                        "workflow root is not a mapping"};
    }

    Workflow workflow;
    workflow.source_path = std::move(source_path);
    if (root["name"] && root["name"].IsScalar())
      workflow.name = root["name"].Scalar();

    workflow.triggers = read_triggers(root["on"]);
    if (workflow.triggers.empty()) {
      return ParseError{ParseErrorKind::MissingTrigger,
                        "no `on:` trigger events are defined"};
    }

    workflow.env = read_env_map(root["env"]);
    if (root["permissions"])
      workflow.permissions = scalar_or_dump(root["permissions"]);

    const YAML::Node jobs = root["jobs"];
    if (!jobs || !jobs.IsMap() || jobs.size() == 0) {
      return ParseError{ParseErrorKind::MissingJobs, "no jobs are defined"};
    }

    for (const auto& entry : jobs) {
      if (!entry.first.IsScalar() || !entry.second.IsMap()) {
        return ParseError{ParseErrorKind::InvalidStructure,
                          "job entry is not a mapping"};
      }
      Job job;
      job.id = entry.first.Scalar();
      const YAML::Node body = entry.second;
      if (body["name"] && body["name"].IsScalar())
        job.display_name = body["name"].Scalar();
      job.runs_on = read_runs_on(body["runs-on"]);
      job.env = read_env_map(body["env"]);
      if (body["uses"] && body["uses"].IsScalar())
        job.uses = body["uses"].Scalar();

      const YAML::Node steps = body["steps"];
      if (steps && steps.IsSequence()) {
        int index = 0;
        for (const auto& item : steps) {
          auto step = read_step(item, index);
          if (!step) {
            return ParseError{
                ParseErrorKind::InvalidStructure,
                "job '" + job.id + "' step " + std::to_string(index) +
                    " has neither `uses:` nor `run:`"};
          }
          job.steps.push_back(std::move(*step));
          ++index;
        }
      }
      if (job.steps.empty() && !job.uses) {
        return ParseError{ParseErrorKind::InvalidStructure,
                          "job '" + job.id + "' has no steps"};
      }
      workflow.jobs.push_back(std::move(job));
    }
    return workflow;
  } catch (const std::exception& e) {
    return ParseError{ParseErrorKind::MalformedYaml, e.what()};
  }
}

std::vector<RawUsage> extract_script_usages(const Workflow& workflow) {
  std::vector<RawUsage> usages;
  for (const auto& job : workflow.jobs) {
    if (job.uses) {
      usages.push_back(
          {UsageLocation{workflow.source_path, job.id, std::nullopt},
           *job.uses});
    }
    for (const auto& step : job.steps) {
      if (const UsesStep* uses = step.uses()) {
        usages.push_back(
            {UsageLocation{workflow.source_path, job.id, step.index},
             uses->raw_uses});
      }
    }
  }
  return usages;
}

std::vector<CredentialUse> extract_credentials(const Workflow& workflow) {
  std::vector<CredentialUse> out;
  UsageLocation wf_loc{workflow.source_path, std::nullopt, std::nullopt};
  collect_from_values(workflow.env, CredentialScope::WorkflowEnv, wf_loc,
                      false, out);
  for (const auto& job : workflow.jobs) {
    UsageLocation job_loc{workflow.source_path, job.id, std::nullopt};
    collect_from_values(job.env, CredentialScope::JobEnv, job_loc, false, out);
    for (const auto& step : job.steps) {
      UsageLocation step_loc{workflow.source_path, job.id, step.index};
      collect_from_values(step.env, CredentialScope::StepEnv, step_loc, false,
                          out);
      if (const UsesStep* uses = step.uses()) {
        collect_from_values(uses->with_args, CredentialScope::StepWith,
                            step_loc, false, out);
      } else if (const RunStep* run = step.run()) {
        std::map<std::string, std::string> pseudo{{"run", run->script_text}};
        collect_from_values(pseudo, CredentialScope::StepEnv, step_loc, true,
                            out);
      }
    }
  }
  return out;
}

}  // namespace pipewarden
