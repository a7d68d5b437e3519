#include "doctest.h"
#include "pipewarden/fetch.hpp"

#include <atomic>
#include <thread>

#include "httplib.h"
#include "test_support.hpp"

using namespace pipewarden;

namespace {

std::string encode_base64(const std::string& input) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  size_t i = 0;
  while (i + 2 < input.size()) {
    unsigned v = (static_cast<unsigned char>(input[i]) << 16) |
                 (static_cast<unsigned char>(input[i + 1]) << 8) |
                 static_cast<unsigned char>(input[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i + 1 == input.size()) {
    unsigned v = static_cast<unsigned char>(input[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == input.size()) {
    unsigned v = (static_cast<unsigned char>(input[i]) << 16) |
                 (static_cast<unsigned char>(input[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += "=";
  }
  return out;
}

// Replay server scripted with recorded-style responses for actions/checkout.
class FixtureServer {
 public:
  FixtureServer() {
    server_.Get("/repos/actions/checkout", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
      last_auth_header_ = req.get_header_value("Authorization");
      res.set_content(
          R"({"default_branch": "main", "owner": {"login": "actions", "type": "Organization"}})",
          "application/json");
    });
    server_.Get("/repos/actions/checkout/branches",
                [](const httplib::Request&, httplib::Response& res) {
                  res.set_content(R"([{"name": "main"}])", "application/json");
                });
    server_.Get(
        "/repos/actions/checkout/tags",
        [](const httplib::Request& req, httplib::Response& res) {
          if (req.get_param_value("page") == "1") {
            res.set_content(
                R"([{"name": "v2", "commit": {"sha": "2222222222222222222222222222222222222222"}},
                    {"name": "v1", "commit": {"sha": "1111111111111111111111111111111111111111"}}])",
                "application/json");
          } else {
            res.set_content("[]", "application/json");
          }
        });
    server_.Get(
        R"(/repos/actions/checkout/commits/(\w+))",
        [](const httplib::Request& req, httplib::Response& res) {
          std::string date = req.matches[1].str()[0] == '2'
                                 ? "2019-12-01T00:00:00Z"
                                 : "2019-08-01T00:00:00Z";
          res.set_content(
              R"({"commit": {"committer": {"date": ")" + date + R"("}}})",
              "application/json");
        });
    server_.Get("/repos/actions/checkout/contents/action.yml",
                [](const httplib::Request&, httplib::Response& res) {
                  std::string manifest =
                      "name: Checkout\nruns:\n  using: node16\n  main: x.js\n";
                  res.set_content(R"({"encoding": "base64", "content": ")" +
                                      encode_base64(manifest) + R"("})",
                                  "application/json");
                });
    server_.Get("/repos/flaky/flaky",
                [this](const httplib::Request&, httplib::Response& res) {
                  if (flaky_hits_.fetch_add(1) == 0) {
                    res.status = 429;
                    res.set_header("Retry-After", "0");
                    return;
                  }
                  res.set_content(
                      R"({"default_branch": "main", "owner": {"login": "flaky"}})",
                      "application/json");
                });
    server_.Get(R"(/repos/flaky/flaky/.*)",
                [](const httplib::Request&, httplib::Response& res) {
                  res.set_content("[]", "application/json");
                });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FixtureServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  int flaky_hits() const { return flaky_hits_.load(); }
  const std::string& last_auth_header() const { return last_auth_header_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> flaky_hits_{0};
  std::string last_auth_header_;
};

}  // namespace

TEST_CASE("fetch_metadata builds a snapshot from the replay server") {
  FixtureServer server;
  FetchOptions options;
  options.api_base = server.base_url();
  options.verified_creators = {"actions"};
  options.categories = {{"actions/checkout", {"utilities"}}};

  MetadataStore store;
  FetchReport report = fetch_metadata({"actions/checkout"}, store, options);
  CHECK(report.fetched == 1);
  CHECK(report.partial == 0);

  const ScriptMetadata* meta = store.lookup("actions/checkout");
  REQUIRE(meta != nullptr);
  CHECK(meta->creator == "actions");
  CHECK(meta->verified);
  CHECK(meta->default_branch == "main");
  CHECK(meta->branches.count("main") == 1);
  REQUIRE(meta->releases.size() == 2);
  CHECK(meta->releases[0].tag == "v1");  // sorted by commit date
  CHECK(meta->releases[1].tag == "v2");
  CHECK(format_rfc3339(meta->releases[1].date) == "2019-12-01T00:00:00Z");
  CHECK(meta->runtime.kind == RuntimeKind::NodeJs);
  CHECK(meta->runtime.detail == "16");
  CHECK(meta->categories.count("utilities") == 1);

  // The snapshot file written from this store loads back identically.
  auto path = std::filesystem::temp_directory_path() / "pw_fetch_test.json";
  REQUIRE(store.save(path));
  auto reloaded = MetadataStore::load(path);
  REQUIRE(std::holds_alternative<MetadataStore>(reloaded));
  CHECK(std::get<MetadataStore>(reloaded) == store);
  std::filesystem::remove(path);
}

TEST_CASE("per-slug failures leave partial entries without aborting") {
  FixtureServer server;
  FetchOptions options;
  options.api_base = server.base_url();

  MetadataStore store;
  FetchReport report =
      fetch_metadata({"actions/checkout", "gone/gone"}, store, options);
  CHECK(report.fetched == 1);
  CHECK(report.partial == 1);
  CHECK_FALSE(report.errors.empty());

  const ScriptMetadata* partial = store.lookup("gone/gone");
  REQUIRE(partial != nullptr);  // partial entry, defaults filled
  CHECK(partial->creator == "gone");
  CHECK(partial->releases.empty());
  CHECK(partial->runtime.kind == RuntimeKind::Unknown);
  CHECK(store.size() == 2);
}

TEST_CASE("empty slug list fetches nothing") {
  FetchOptions options;
  options.api_base = "http://127.0.0.1:1";  // never contacted
  MetadataStore store;
  FetchReport report = fetch_metadata({}, store, options);
  CHECK(report.fetched == 0);
  CHECK(report.partial == 0);
  CHECK(store.empty());
}

TEST_CASE("re-running merges by slug") {
  FixtureServer server;
  FetchOptions options;
  options.api_base = server.base_url();
  MetadataStore store;
  fetch_metadata({"actions/checkout"}, store, options);
  fetch_metadata({"actions/checkout"}, store, options);
  CHECK(store.size() == 1);
  CHECK(store.lookup("actions/checkout")->releases.size() == 2);
}

TEST_CASE("rate-limit responses are retried") {
  FixtureServer server;
  FetchOptions options;
  options.api_base = server.base_url();
  MetadataStore store;
  FetchReport report = fetch_metadata({"flaky/flaky"}, store, options);
  CHECK(server.flaky_hits() == 2);  // 429 then success
  CHECK(report.fetched == 1);
  const ScriptMetadata* meta = store.lookup("flaky/flaky");
  REQUIRE(meta != nullptr);
  CHECK(meta->default_branch == "main");
}

TEST_CASE("auth tokens travel as a bearer header") {
  FixtureServer server;
  FetchOptions options;
  options.api_base = server.base_url();
  options.auth_token = "sekrit";
  MetadataStore store;
  fetch_metadata({"actions/checkout"}, store, options);
  CHECK(server.last_auth_header() == "Bearer sekrit");
}
