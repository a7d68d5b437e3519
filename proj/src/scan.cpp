#include "pipewarden/scan.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace pipewarden {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::optional<Timestamp> file_mtime(const fs::path& path) {
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0) return std::nullopt;
  return static_cast<Timestamp>(st.st_mtime);
}

}  // namespace

ScriptUsage resolve_usage(const RawUsage& raw_usage,
                          const ScriptMetadata* metadata) {
  ScriptUsage usage;
  usage.location = raw_usage.location;
  usage.raw_uses = raw_usage.raw_uses;
  auto parsed = parse_uses(raw_usage.raw_uses);
  if (const RefParseError* err = std::get_if<RefParseError>(&parsed)) {
    usage.parse_error = err->message;
    usage.kind = RefKind::Invalid;
    return usage;
  }
  usage.ref = std::get<ScriptRef>(std::move(parsed));
  if (usage.ref->repository()) {
    usage.kind = classify_ref(*usage.ref, metadata);
  }
  return usage;
}

const ScriptMetadata* metadata_for_usage(const MetadataStore* store,
                                         const ScriptUsage& usage) {
  if (!store) return nullptr;
  const RepositoryRef* repo = usage.repository();
  if (!repo) return nullptr;
  return store->lookup_for_usage(repo->slug(), repo->owner_repo());
}

std::vector<fs::path> discover_workflow_files(const fs::path& root) {
  std::vector<fs::path> files;
  fs::path dir = root / ".github" / "workflows";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return files;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    if (ext == ".yml" || ext == ".yaml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

RepoAnalysis analyze_repository(const fs::path& root, std::string repo_id,
                                std::string path_prefix,
                                const MetadataStore* metadata,
                                const AdvisoryDb* advisories,
                                const AnalysisOptions& options) {
  RepoAnalysis analysis;
  analysis.repo_id = std::move(repo_id);

  for (const fs::path& file : discover_workflow_files(root)) {
    std::string rel = fs::relative(file, root).generic_string();
    std::string source_path =
        path_prefix.empty() ? rel : path_prefix + "/" + rel;

    auto parsed = parse_workflow(read_file(file), source_path);
    if (const ParseError* err = std::get_if<ParseError>(&parsed)) {
      analysis.parse_failures.push_back({source_path, *err});
      continue;
    }

    WorkflowAnalysis wf;
    wf.workflow = std::get<Workflow>(std::move(parsed));
    wf.credentials = extract_credentials(wf.workflow);

    Timestamp as_of = options.analysis_time;
    if (options.use_config_mtime) {
      if (auto mtime = file_mtime(file)) as_of = *mtime;
    }

    for (const RawUsage& raw : extract_script_usages(wf.workflow)) {
      // First resolve the slug form, then classify against its metadata.
      ScriptUsage usage = resolve_usage(raw, nullptr);
      const ScriptMetadata* meta = metadata_for_usage(metadata, usage);
      if (meta && usage.ref) usage.kind = classify_ref(*usage.ref, meta);

      if (advisories) {
        AdvisoryMatches matched = match_advisories(usage, *advisories, meta);
        analysis.matches.insert(analysis.matches.end(),
                                matched.matches.begin(),
                                matched.matches.end());
        analysis.match_notes.insert(analysis.match_notes.end(),
                                    matched.notes.begin(),
                                    matched.notes.end());
      }
      analysis.lags.push_back(compute_usage_lag(usage, meta, as_of));
      wf.usages.push_back(std::move(usage));
    }
    analysis.workflows.push_back(std::move(wf));
  }

  analysis.repo_lag = compute_repo_lag(analysis.repo_id, analysis.lags);
  return analysis;
}

std::vector<std::string> collect_slugs(const fs::path& root) {
  std::set<std::string> slugs;
  auto scan_one = [&](const fs::path& repo_root) {
    for (const fs::path& file : discover_workflow_files(repo_root)) {
      auto parsed = parse_workflow(read_file(file), file.generic_string());
      const Workflow* wf = std::get_if<Workflow>(&parsed);
      if (!wf) continue;
      for (const RawUsage& raw : extract_script_usages(*wf)) {
        auto ref = parse_uses(raw.raw_uses);
        if (const ScriptRef* script = std::get_if<ScriptRef>(&ref)) {
          if (const RepositoryRef* repo = script->repository())
            slugs.insert(repo->slug());
        }
      }
    }
  };

  scan_one(root);
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory()) scan_one(entry.path());
  }
  return {slugs.begin(), slugs.end()};
}

}  // namespace pipewarden
