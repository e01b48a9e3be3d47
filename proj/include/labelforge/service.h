#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "labelforge/clustering.h"
#include "labelforge/labelset.h"

namespace httplib {
class Server;
}

namespace labelforge {

struct ServiceOptions {
  std::filesystem::path clusters_path;
  std::filesystem::path decisions_path;
  std::filesystem::path export_dir = "out";
  std::optional<std::filesystem::path> ui_dir;
  std::size_t default_min_support = 50;
  std::string author = "reviewer";
};

struct MutationResult {
  std::string group_id;
  std::uint64_t state_version = 0;
};

// Review state for one cluster file: the cluster set (read-only), the
// decision log (append-only, the source of truth) and the groups derived from
// replaying it. Readers run concurrently; mutations are serialized and reach
// the on-disk log before they are applied or acknowledged.
class ReviewSession {
 public:
  // Loads clusters and replays the log. Throws kCorruptLog on a damaged log
  // or a record that no longer applies to the clusters.
  explicit ReviewSession(ServiceOptions options);
  ~ReviewSession();

  ReviewSession(const ReviewSession&) = delete;
  ReviewSession& operator=(const ReviewSession&) = delete;

  std::uint64_t state_version() const;
  const ClusterSet& clusters() const { return clusters_; }
  const ServiceOptions& options() const { return options_; }

  // `group_id` empty -> a fresh id. `expected_version`, when set, must equal
  // the current state_version or kVersionConflict is thrown.
  MutationResult Merge(const std::vector<std::string>& cluster_ids,
                       const std::string& label_text,
                       const std::string& group_id = {},
                       std::optional<std::uint64_t> expected_version = {},
                       const std::string& author = {});
  MutationResult Delete(const std::string& group_id,
                        std::optional<std::uint64_t> expected_version = {},
                        const std::string& author = {});

  std::vector<SemanticGroup> Groups() const;
  std::vector<MergeDecision> Decisions() const;

  // Exports are serialized with each other but not with readers.
  ExportSummary Export(std::size_t min_support);

  nlohmann::ordered_json Stats(std::size_t min_support) const;
  nlohmann::ordered_json ClusterListJson(std::size_t offset, std::size_t limit) const;
  std::optional<nlohmann::ordered_json> ClusterJson(const std::string& id) const;

 private:
  MutationResult Commit(MergeDecision decision,
                        std::optional<std::uint64_t> expected_version);
  void AppendToLog(const MergeDecision& decision);
  nlohmann::ordered_json ClusterCardJson(const Cluster& cluster,
                                         const std::map<std::string, const SemanticGroup*>& owner,
                                         bool all_members) const;

  ServiceOptions options_;
  ClusterSet clusters_;
  std::unique_ptr<GroupState> state_;
  std::vector<MergeDecision> log_;
  std::uint64_t next_group_number_ = 1;
  std::int64_t last_timestamp_ms_ = 0;
  int log_fd_ = -1;

  mutable std::shared_mutex state_mu_;
  std::mutex write_mu_;
  std::mutex export_mu_;
};

// HTTP front end:
//   GET  /api/clusters?offset=&limit=   GET /api/clusters/{id}
//   GET  /api/groups                    POST /api/groups   DELETE /api/groups/{id}
//   POST /api/export                    GET  /api/stats    GET  /healthz
// Static UI files are served at / when ServiceOptions::ui_dir is set.
class CurationServer {
 public:
  explicit CurationServer(ReviewSession& session);
  ~CurationServer();

  // Binds to host:port (port 0 picks a free one) and returns the bound port.
  // Throws kBindError.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  void Run();
  void Stop();

 private:
  void Routes();

  ReviewSession& session_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace labelforge
