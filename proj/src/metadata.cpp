#include "pipewarden/metadata.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace pipewarden {
namespace {

using nlohmann::json;

std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SnapshotError malformed(std::string message) {
  return SnapshotError{SnapshotErrorKind::Malformed, std::move(message)};
}

}  // namespace

const char* to_string(RuntimeKind kind) {
  switch (kind) {
    case RuntimeKind::NodeJs:
      return "nodejs";
    case RuntimeKind::Docker:
      return "docker";
    case RuntimeKind::Composite:
      return "composite";
    case RuntimeKind::RawCommand:
      return "raw_command";
    case RuntimeKind::Unknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<RuntimeKind> runtime_kind_from_string(std::string_view label) {
  if (label == "nodejs") return RuntimeKind::NodeJs;
  if (label == "docker") return RuntimeKind::Docker;
  if (label == "composite") return RuntimeKind::Composite;
  if (label == "raw_command") return RuntimeKind::RawCommand;
  if (label == "unknown") return RuntimeKind::Unknown;
  return std::nullopt;
}

Runtime classify_runtime(std::string_view manifest_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(manifest_text));
  } catch (const std::exception&) {
    return Runtime{RuntimeKind::Unknown, "malformed manifest"};
  }
  try {
    if (!root.IsMap()) return Runtime{};
    const YAML::Node runs = root["runs"];
    if (!runs || !runs.IsMap()) return Runtime{};
    const YAML::Node using_node = runs["using"];
    if (!using_node || !using_node.IsScalar()) return Runtime{};
    const std::string using_value = using_node.Scalar();

    if (using_value.rfind("node", 0) == 0) {
      return Runtime{RuntimeKind::NodeJs, using_value.substr(4)};
    }
    if (using_value == "docker") {
      std::string image;
      if (runs["image"] && runs["image"].IsScalar())
        image = runs["image"].Scalar();
      return Runtime{RuntimeKind::Docker, std::move(image)};
    }
    if (using_value == "composite") {
      return Runtime{RuntimeKind::Composite, std::nullopt};
    }
    return Runtime{};
  } catch (const std::exception&) {
    return Runtime{RuntimeKind::Unknown, "malformed manifest"};
  }
}

bool ScriptMetadata::has_release_tag(std::string_view tag) const {
  return find_release(tag) != nullptr;
}

const Release* ScriptMetadata::find_release(std::string_view tag) const {
  for (const auto& release : releases) {
    if (release.tag == tag) return &release;
  }
  return nullptr;
}

const Release* ScriptMetadata::find_release_by_commit(
    std::string_view hash) const {
  if (hash.size() < 7) return nullptr;
  const Release* found = nullptr;
  for (const auto& release : releases) {
    if (!release.commit) continue;
    if (release.commit->size() >= hash.size() &&
        release.commit->compare(0, hash.size(), hash) == 0) {
      if (found && found->commit != release.commit) return nullptr;  // ambiguous
      found = &release;
    }
  }
  return found;
}

SnapshotLoadResult MetadataStore::load(const std::filesystem::path& path) {
  auto text = read_file(path);
  if (!text) return malformed("cannot read snapshot file: " + path.string());
  return from_json_text(*text);
}

SnapshotLoadResult MetadataStore::from_json_text(std::string_view text) {
  // Duplicate top-level keys would silently collapse in the parsed object, so
  // they are caught with a parser callback while the document streams in.
  std::vector<std::string> top_keys;
  json doc;
  try {
    int depth_of_root = -1;
    doc = json::parse(
        text, [&](int depth, json::parse_event_t event, json& parsed) {
          if (event == json::parse_event_t::object_start &&
              depth_of_root < 0) {
            depth_of_root = depth;
          } else if (event == json::parse_event_t::key &&
                     depth == depth_of_root + 1) {
            top_keys.push_back(parsed.get<std::string>());
          }
          return true;
        });
  } catch (const json::exception& e) {
    return malformed(e.what());
  }
  if (!doc.is_object()) return malformed("snapshot root is not an object");
  {
    auto sorted = top_keys;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end()) {
      return SnapshotError{SnapshotErrorKind::DuplicateSlug,
                           "duplicate slug '" + *dup + "'"};
    }
  }

  MetadataStore store;
  for (const auto& [slug, entry] : doc.items()) {
    if (!entry.is_object())
      return malformed("entry for '" + slug + "' is not an object");
    ScriptMetadata meta;
    meta.slug = slug;
    try {
      meta.creator = entry.value("creator", std::string{});
      meta.verified = entry.value("verified", false);
      meta.default_branch = entry.value("default_branch", std::string{});
      if (entry.contains("branches")) {
        for (const auto& branch : entry.at("branches")) {
          meta.branches.insert(branch.get<std::string>());
        }
      }
      if (entry.contains("releases")) {
        std::set<std::string> seen_tags;
        for (const auto& rel : entry.at("releases")) {
          Release release;
          release.tag = rel.at("tag").get<std::string>();
          if (release.tag.empty())
            return malformed("empty release tag for '" + slug + "'");
          if (!seen_tags.insert(release.tag).second) {
            return SnapshotError{
                SnapshotErrorKind::DuplicateSlug,
                "duplicate tag '" + release.tag + "' for '" + slug + "'"};
          }
          const auto date_text = rel.at("date").get<std::string>();
          auto date = parse_rfc3339(date_text);
          if (!date) {
            return SnapshotError{SnapshotErrorKind::BadTimestamp,
                                 "bad timestamp '" + date_text + "' for '" +
                                     slug + "'"};
          }
          release.date = *date;
          if (rel.contains("commit") && !rel.at("commit").is_null())
            release.commit = rel.at("commit").get<std::string>();
          meta.releases.push_back(std::move(release));
        }
      }
      if (entry.contains("runtime")) {
        const auto& rt = entry.at("runtime");
        auto kind = runtime_kind_from_string(rt.value("kind", "unknown"));
        meta.runtime.kind = kind.value_or(RuntimeKind::Unknown);
        if (rt.contains("detail") && !rt.at("detail").is_null())
          meta.runtime.detail = rt.at("detail").get<std::string>();
      }
      if (entry.contains("categories")) {
        for (const auto& cat : entry.at("categories")) {
          meta.categories.insert(cat.get<std::string>());
        }
      }
    } catch (const json::exception& e) {
      return malformed("entry for '" + slug + "': " + e.what());
    }
    store.upsert(std::move(meta));
  }
  return store;
}

const ScriptMetadata* MetadataStore::lookup(std::string_view slug) const {
  auto it = scripts_.find(std::string(slug));
  return it == scripts_.end() ? nullptr : &it->second;
}

const ScriptMetadata* MetadataStore::lookup_for_usage(
    std::string_view slug, std::string_view owner_repo) const {
  if (const ScriptMetadata* exact = lookup(slug)) return exact;
  if (slug != owner_repo) return lookup(owner_repo);
  return nullptr;
}

void MetadataStore::upsert(ScriptMetadata metadata) {
  std::sort(metadata.releases.begin(), metadata.releases.end(),
            [](const Release& a, const Release& b) {
              if (a.date != b.date) return a.date < b.date;
              return a.tag < b.tag;
            });
  scripts_[metadata.slug] = std::move(metadata);
}

void MetadataStore::apply_categories(
    const std::map<std::string, std::set<std::string>>& category_map) {
  for (const auto& [slug, categories] : category_map) {
    auto it = scripts_.find(slug);
    if (it == scripts_.end()) continue;
    it->second.categories.insert(categories.begin(), categories.end());
  }
}

std::string MetadataStore::to_json_text() const {
  json doc = json::object();
  for (const auto& [slug, meta] : scripts_) {
    json entry;
    entry["creator"] = meta.creator;
    entry["verified"] = meta.verified;
    entry["default_branch"] = meta.default_branch;
    entry["branches"] = meta.branches;
    json releases = json::array();
    for (const auto& release : meta.releases) {
      json rel;
      rel["tag"] = release.tag;
      rel["date"] = format_rfc3339(release.date);
      rel["commit"] = release.commit ? json(*release.commit) : json(nullptr);
      releases.push_back(std::move(rel));
    }
    entry["releases"] = std::move(releases);
    entry["runtime"] = {
        {"kind", to_string(meta.runtime.kind)},
        {"detail", meta.runtime.detail ? json(*meta.runtime.detail)
                                       : json(nullptr)}};
    entry["categories"] = meta.categories;
    doc[slug] = std::move(entry);
  }
  return doc.dump(2) + "\n";
}

bool MetadataStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << to_json_text();
  return static_cast<bool>(out);
}

std::variant<std::map<std::string, std::set<std::string>>, SnapshotError>
load_category_map(const std::filesystem::path& path) {
  auto text = read_file(path);
  if (!text) return malformed("cannot read category map: " + path.string());
  json doc;
  try {
    doc = json::parse(*text);
  } catch (const json::exception& e) {
    return malformed(e.what());
  }
  if (!doc.is_object()) return malformed("category map root is not an object");
  std::map<std::string, std::set<std::string>> map;
  try {
    for (const auto& [slug, cats] : doc.items()) {
      for (const auto& cat : cats) {
        map[slug].insert(cat.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    return malformed(e.what());
  }
  return map;
}

}  // namespace pipewarden
