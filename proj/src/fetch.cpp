#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include "pipewarden/fetch.hpp"

#include <chrono>
#include <nlohmann/json.hpp>
#include <thread>

#include "httplib.h"

namespace pipewarden {
namespace {

using nlohmann::json;

std::string decode_base64(std::string_view input) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  int buffer = 0;
  int bits = 0;
  for (char c : input) {
    int v = value_of(c);
    if (v < 0) continue;  // skip newlines, padding
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

class ApiClient {
 public:
  explicit ApiClient(const FetchOptions& options)
      : client_(options.api_base), options_(options) {
    client_.set_connection_timeout(10);
    client_.set_read_timeout(30);
    headers_.emplace("User-Agent", "pipewarden");
    headers_.emplace("Accept", "application/vnd.github+json");
    if (options.auth_token && !options.auth_token->empty()) {
      headers_.emplace("Authorization", "Bearer " + *options.auth_token);
    }
  }

  // GET with one retry after a rate-limit response.
  std::optional<json> get_json(const std::string& path) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      throttle();
      auto res = client_.Get(path, headers_);
      if (!res) return std::nullopt;
      if (res->status == 429 || res->status == 403) {
        int wait_s = 1;
        if (res->has_header("Retry-After")) {
          wait_s = std::max(0, std::atoi(res->get_header_value("Retry-After")
                                             .c_str()));
        }
        std::this_thread::sleep_for(
            std::chrono::seconds(std::min(wait_s, 60)));
        continue;
      }
      if (res->status != 200) return std::nullopt;
      try {
        return json::parse(res->body);
      } catch (const json::exception&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // Concatenates array pages until a short page arrives.
  std::optional<json> get_paged(const std::string& path) {
    constexpr int kPerPage = 100;
    json all = json::array();
    for (int page = 1;; ++page) {
      std::string sep = path.find('?') == std::string::npos ? "?" : "&";
      auto chunk = get_json(path + sep + "per_page=" +
                            std::to_string(kPerPage) +
                            "&page=" + std::to_string(page));
      if (!chunk) return page == 1 ? std::nullopt : std::optional<json>(all);
      if (!chunk->is_array()) return std::nullopt;
      for (auto& item : *chunk) all.push_back(std::move(item));
      if (chunk->size() < kPerPage) return all;
    }
  }

 private:
  void throttle() {
    if (options_.max_requests_per_second <= 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(
        1000 / options_.max_requests_per_second));
  }

  httplib::Client client_;
  const FetchOptions& options_;
  httplib::Headers headers_;
};

std::pair<std::string, std::string> split_slug(const std::string& slug) {
  size_t first = slug.find('/');
  if (first == std::string::npos) return {slug, ""};
  size_t second = slug.find('/', first + 1);
  std::string owner = slug.substr(0, first);
  std::string repo = second == std::string::npos
                         ? slug.substr(first + 1)
                         : slug.substr(first + 1, second - first - 1);
  return {owner, repo};
}

std::string subpath_of(const std::string& slug) {
  size_t first = slug.find('/');
  if (first == std::string::npos) return "";
  size_t second = slug.find('/', first + 1);
  return second == std::string::npos ? "" : slug.substr(second + 1);
}

}  // namespace

FetchReport fetch_metadata(const std::vector<std::string>& slugs,
                           MetadataStore& store, const FetchOptions& options) {
  FetchReport report;
  ApiClient api(options);

  for (const std::string& slug : slugs) {
    auto [owner, repo] = split_slug(slug);

    ScriptMetadata meta;
    meta.slug = slug;
    meta.creator = owner;
    meta.verified = options.verified_creators.count(owner) > 0;
    auto categories = options.categories.find(slug);
    if (categories != options.categories.end())
      meta.categories = categories->second;

    if (repo.empty()) {
      report.partial += 1;
      report.errors.push_back(slug + ": not an owner/repo slug");
      store.upsert(std::move(meta));
      continue;
    }
    const std::string base = "/repos/" + owner + "/" + repo;
    bool complete = true;

    if (auto info = api.get_json(base)) {
      meta.default_branch = info->value("default_branch", std::string{});
      if (info->contains("owner") && (*info)["owner"].contains("login"))
        meta.creator = (*info)["owner"]["login"].get<std::string>();
      meta.verified = options.verified_creators.count(meta.creator) > 0;
    } else {
      complete = false;
      report.errors.push_back(slug + ": repository lookup failed");
    }

    if (auto branches = api.get_paged(base + "/branches")) {
      for (const auto& branch : *branches) {
        if (branch.contains("name"))
          meta.branches.insert(branch["name"].get<std::string>());
      }
    } else {
      complete = false;
      report.errors.push_back(slug + ": branch listing failed");
    }

    if (auto tags = api.get_paged(base + "/tags")) {
      for (const auto& tag : *tags) {
        if (!tag.contains("name")) continue;
        Release release;
        release.tag = tag["name"].get<std::string>();
        if (tag.contains("commit") && tag["commit"].contains("sha")) {
          release.commit = tag["commit"]["sha"].get<std::string>();
          // Release date = timestamp of the commit the tag points to.
          if (auto commit = api.get_json(base + "/commits/" + *release.commit)) {
            std::string date;
            if (commit->contains("commit")) {
              const auto& body = (*commit)["commit"];
              if (body.contains("committer") &&
                  body["committer"].contains("date")) {
                date = body["committer"]["date"].get<std::string>();
              } else if (body.contains("author") &&
                         body["author"].contains("date")) {
                date = body["author"]["date"].get<std::string>();
              }
            }
            if (auto parsed = parse_rfc3339(date)) release.date = *parsed;
          }
        }
        meta.releases.push_back(std::move(release));
      }
    } else {
      complete = false;
      report.errors.push_back(slug + ": tag listing failed");
    }

    std::string manifest_dir = subpath_of(slug);
    std::string prefix =
        manifest_dir.empty() ? "/contents/" : "/contents/" + manifest_dir + "/";
    for (const char* name : {"action.yml", "action.yaml"}) {
      auto manifest = api.get_json(base + prefix + name);
      if (!manifest || !manifest->contains("content")) continue;
      std::string text =
          decode_base64((*manifest)["content"].get<std::string>());
      meta.runtime = classify_runtime(text);
      break;
    }

    if (complete) {
      report.fetched += 1;
    } else {
      report.partial += 1;
    }
    store.upsert(std::move(meta));
  }
  return report;
}

}  // namespace pipewarden
