#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <functional>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "labelforge/error.h"
#include "labelforge/service.h"
#include "support/oracles.h"
#include "support/process.h"

namespace lf = labelforge;

namespace {

lf::Cluster MakeCluster(const std::string& id, const std::string& word, std::size_t images) {
  lf::NormalizedSentence s;
  s.tokens = {{word, false}};
  s.frequency = images;
  for (std::size_t k = 0; k < images; ++k) {
    const std::string report = word + "-" + std::to_string(k);
    s.sources.push_back(lf::SourceRef{report, 0, {report + ".png"}});
  }
  lf::Cluster c;
  c.cluster_id = id;
  c.section = s.section;
  c.members = {s};
  c.representative = word;
  return c;
}

struct Fixture {
  lf::testing::TempDir dir{"service"};
  lf::ServiceOptions options;

  Fixture() {
    lf::ClusterSet set;
    set.clusters = {MakeCluster("lungs-0001", "effusion", 3),
                    MakeCluster("lungs-0002", "effusions", 2),
                    MakeCluster("lungs-0003", "opacity", 4)};
    set.counts = {9, 3, 3};
    lf::SaveClusters(set, dir / "clusters.json");
    options.clusters_path = dir / "clusters.json";
    options.decisions_path = dir / "decisions.jsonl";
    options.export_dir = dir / "export";
    options.default_min_support = 3;
  }
};

lf::ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const lf::Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return lf::ErrorKind::kIo;
}

// An in-process server on a free port for the lifetime of the object.
struct RunningServer {
  lf::CurationServer server;
  int port;
  std::thread thread;

  explicit RunningServer(lf::ReviewSession& session)
      : server(session), port(server.Bind("127.0.0.1", 0)),
        thread([this] { server.Run(); }) {}
  ~RunningServer() {
    server.Stop();
    thread.join();
  }
};

nlohmann::json Body(const httplib::Result& res) { return nlohmann::json::parse(res->body); }

}  // namespace

TEST_CASE("session: merge, delete, versions and replay") {
  Fixture f;
  {
    lf::ReviewSession session(f.options);
    CHECK(session.state_version() == 0);
    const auto merged = session.Merge({"lungs-0001", "lungs-0002"}, "effusion");
    CHECK(merged.group_id == "g0001");
    CHECK(merged.state_version == 1);
    CHECK(session.Groups().size() == 2);
    CHECK(session.Decisions()[0].author == "reviewer");

    CHECK(KindOf([&] { session.Merge({"lungs-0003"}, "x", "", 0); }) ==
          lf::ErrorKind::kVersionConflict);
    CHECK(KindOf([&] { session.Merge({"lungs-0009"}, "x"); }) ==
          lf::ErrorKind::kUnknownClusterId);
    CHECK(KindOf([&] { session.Delete("g0077"); }) == lf::ErrorKind::kUnknownGroupId);
    CHECK(session.state_version() == 1);

    session.Merge({"lungs-0003"}, "opacity", "", 1, "alice");
    session.Delete("g0002");
    CHECK(session.state_version() == 3);
    const auto decisions = session.Decisions();
    CHECK(decisions[0].timestamp_ms < decisions[1].timestamp_ms);
    CHECK(decisions[1].timestamp_ms < decisions[2].timestamp_ms);
  }
  // Only successful mutations reach the log.
  CHECK(lf::ReadDecisionLog(f.options.decisions_path).decisions.size() == 3);

  lf::ReviewSession reopened(f.options);
  CHECK(reopened.state_version() == 3);
  CHECK(reopened.Groups().size() == 2);
  CHECK(reopened.Merge({"lungs-0003"}, "again").group_id == "g0003");
}

TEST_CASE("session refuses a damaged or stale log") {
  Fixture f;
  lf::testing::WriteFile(f.options.decisions_path, "{\"op\":\"merge\",\"group_id\"");
  CHECK(KindOf([&] { lf::ReviewSession s(f.options); }) == lf::ErrorKind::kCorruptLog);

  lf::testing::WriteFile(
      f.options.decisions_path,
      R"({"op":"merge","group_id":"g0001","member_cluster_ids":["lungs-0042"],"label_text":"x","author":"a","timestamp":5})"
      "\n");
  CHECK(KindOf([&] { lf::ReviewSession s(f.options); }) == lf::ErrorKind::kCorruptLog);
}

TEST_CASE("session stats and export") {
  Fixture f;
  lf::ReviewSession session(f.options);
  session.Merge({"lungs-0001", "lungs-0002"}, "pleural effusion");
  const auto stats = session.Stats(4);
  CHECK(stats["clusters"] == 3);
  CHECK(stats["groups"] == 2);
  CHECK(stats["labels_above_support"] == 2);
  CHECK(session.Stats(5)["labels_above_support"] == 1);

  const auto summary = session.Export(5);
  CHECK(summary.labels == 1);
  CHECK(lf::testing::ReadFile(f.options.export_dir / "labels.csv") ==
        "label_id,section,label_text,image_support\nL001,lungs,pleural effusion,5\n");
}

TEST_CASE("http routes") {
  Fixture f;
  lf::ReviewSession session(f.options);
  RunningServer running(session);
  httplib::Client client("127.0.0.1", running.port);

  auto res = client.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == "ok\n");

  res = client.Get("/api/clusters?offset=1&limit=1");
  REQUIRE(res);
  auto body = Body(res);
  CHECK(body["total"] == 3);
  REQUIRE(body["clusters"].size() == 1);
  CHECK(body["clusters"][0]["cluster_id"] == "lungs-0002");

  res = client.Get("/api/clusters/lungs-0003");
  REQUIRE(res);
  CHECK(Body(res)["total_frequency"] == 4);
  CHECK(client.Get("/api/clusters/lungs-0404")->status == 404);

  res = client.Post("/api/groups",
                    R"({"member_cluster_ids":["lungs-0001","lungs-0002"],"label_text":"effusion","expected_version":0})",
                    "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  CHECK(Body(res)["group_id"] == "g0001");
  CHECK(Body(res)["state_version"] == 1);

  // Stale version through the body and through If-Match.
  res = client.Post("/api/groups",
                    R"({"member_cluster_ids":["lungs-0003"],"label_text":"x","expected_version":0})",
                    "application/json");
  CHECK(res->status == 409);
  CHECK(Body(res)["error"] == "VersionConflict");
  res = client.Post("/api/groups", {{"If-Match", "0"}},
                    R"({"member_cluster_ids":["lungs-0003"],"label_text":"x"})",
                    "application/json");
  CHECK(res->status == 409);

  res = client.Post("/api/groups", R"({"member_cluster_ids":["nope"],"label_text":"x"})",
                    "application/json");
  CHECK(res->status == 422);
  CHECK(Body(res)["error"] == "UnknownClusterId");
  res = client.Post("/api/groups", R"({"member_cluster_ids":[],"label_text":"x"})",
                    "application/json");
  CHECK(res->status == 422);
  CHECK(client.Post("/api/groups", "{not json", "application/json")->status == 400);
  CHECK(client.Post("/api/groups", R"({"label_text":"x"})", "application/json")->status ==
        400);

  res = client.Get("/api/groups");
  body = Body(res);
  CHECK(body["state_version"] == 1);
  CHECK(body["groups"].size() == 2);
  CHECK(body["groups"][0]["image_support"] == 5);

  res = client.Get("/api/clusters/lungs-0002");
  CHECK(Body(res)["group_id"] == "g0001");

  res = client.Post("/api/export", R"({"min_support":5})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Body(res)["labels"] == 1);
  CHECK(std::filesystem::exists(f.options.export_dir / "matrix.csv"));

  CHECK(Body(client.Get("/api/stats?min_support=4"))["labels_above_support"] == 2);

  CHECK(client.Delete("/api/groups/g0009")->status == 404);
  res = client.Delete("/api/groups/g0001");
  CHECK(res->status == 200);
  CHECK(Body(res)["state_version"] == 2);
  CHECK(Body(client.Get("/api/groups"))["groups"].size() == 3);
}

TEST_CASE("static ui mount") {
  Fixture f;
  std::filesystem::create_directories(f.dir / "ui");
  lf::testing::WriteFile(f.dir / "ui" / "index.html", "<html>review</html>");
  f.options.ui_dir = f.dir / "ui";
  lf::ReviewSession session(f.options);
  RunningServer running(session);
  httplib::Client client("127.0.0.1", running.port);
  auto res = client.Get("/index.html");
  REQUIRE(res);
  CHECK(res->body == "<html>review</html>");
  CHECK(client.Get("/healthz")->status == 200);
}

TEST_CASE("concurrent merges each land exactly once") {
  Fixture f;
  lf::ReviewSession session(f.options);
  RunningServer running(session);
  std::vector<std::thread> workers;
  std::atomic<int> created{0};
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      httplib::Client client("127.0.0.1", running.port);
      for (int k = 0; k < 5; ++k) {
        const std::string id = "lungs-000" + std::to_string(1 + (t + k) % 3);
        auto res = client.Post(
            "/api/groups",
            R"({"member_cluster_ids":[")" + id + R"("],"label_text":"w)" +
                std::to_string(t) + R"("})",
            "application/json");
        if (res && res->status == 201) ++created;
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(created == 20);
  CHECK(session.state_version() == 20);
  const auto log = lf::ReadDecisionLog(f.options.decisions_path).decisions;
  REQUIRE(log.size() == 20);
  for (std::size_t k = 1; k < log.size(); ++k) {
    CHECK(log[k - 1].timestamp_ms < log[k].timestamp_ms);
  }
}

TEST_CASE("bind errors") {
  Fixture f;
  lf::ReviewSession session(f.options);
  lf::CurationServer server(session);
  // Not an address of this host.
  CHECK(KindOf([&] { server.Bind("203.0.113.7", 0); }) == lf::ErrorKind::kBindError);
  CHECK(KindOf([&] { server.Bind("203.0.113.7", 8080); }) == lf::ErrorKind::kBindError);
}

TEST_CASE("acknowledged merges survive SIGKILL of the server process") {
  Fixture f;
  const std::vector<std::string> args = {
      "serve", "--clusters", f.options.clusters_path.string(),
      "--decisions", f.options.decisions_path.string(), "--bind", "127.0.0.1:0",
      "--export-dir", f.options.export_dir.string()};
  std::size_t acknowledged = 0;
  for (int round = 0; round < 3; ++round) {
    lf::testing::ChildProcess child(LABELFORGE_CLI_PATH, args);
    const int port = lf::testing::WaitForListening(child);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);
    auto groups = client.Get("/api/groups");
    REQUIRE(groups);
    CHECK(Body(groups)["state_version"] == acknowledged);
    auto res = client.Post(
        "/api/groups",
        R"({"member_cluster_ids":["lungs-0001"],"label_text":"round )" +
            std::to_string(round) + R"("})",
        "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    ++acknowledged;
    CHECK(child.Kill());
  }
  CHECK(lf::ReadDecisionLog(f.options.decisions_path).decisions.size() == acknowledged);

  lf::testing::ChildProcess child(LABELFORGE_CLI_PATH, args);
  REQUIRE(lf::testing::WaitForListening(child) > 0);
  CHECK(child.Terminate() == 0);
}
