#include "labelforge/service.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <set>

#include "httplib.h"
#include "labelforge/error.h"
#include "labelforge/text.h"

namespace labelforge {
namespace {

std::int64_t NowMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string GroupIdFor(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "g%04llu", static_cast<unsigned long long>(n));
  return buf;
}

// Parses "gNNNN"; 0 when the id has another shape.
std::uint64_t GroupNumber(const std::string& id) {
  if (id.size() < 2 || id[0] != 'g') return 0;
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
  }
  return n;
}

}  // namespace

ReviewSession::ReviewSession(ServiceOptions options)
    : options_(std::move(options)),
      clusters_(LoadClusters(options_.clusters_path)),
      state_(std::make_unique<GroupState>(clusters_)) {
  DecisionLogContents contents = ReadDecisionLog(options_.decisions_path);
  std::size_t record = 0;
  for (const auto& d : contents.decisions) {
    ++record;
    try {
      state_->Apply(d);
    } catch (const Error& e) {
      throw Error(ErrorKind::kCorruptLog,
                  "record " + std::to_string(record) + " does not replay: " +
                      e.what());
    }
    next_group_number_ = std::max(next_group_number_, GroupNumber(d.group_id) + 1);
    last_timestamp_ms_ = std::max(last_timestamp_ms_, d.timestamp_ms);
  }
  log_ = std::move(contents.decisions);

  log_fd_ = ::open(options_.decisions_path.c_str(),
                   O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (log_fd_ < 0) {
    throw Error(ErrorKind::kIo, "cannot open decision log " +
                                    options_.decisions_path.string() + ": " +
                                    std::strerror(errno));
  }
}

ReviewSession::~ReviewSession() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

std::uint64_t ReviewSession::state_version() const {
  std::shared_lock lock(state_mu_);
  return log_.size();
}

void ReviewSession::AppendToLog(const MergeDecision& decision) {
  const std::string line = DecisionToJson(decision).dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    ssize_t n = ::write(log_fd_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::kIo, std::string("decision log write: ") +
                                      std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(log_fd_) != 0) {
    throw Error(ErrorKind::kIo, std::string("decision log fsync: ") +
                                    std::strerror(errno));
  }
}

MutationResult ReviewSession::Commit(MergeDecision decision,
                                     std::optional<std::uint64_t> expected_version) {
  std::lock_guard writer(write_mu_);
  // Only this thread mutates, so reading the state here needs no lock.
  if (expected_version && *expected_version != log_.size()) {
    throw Error(ErrorKind::kVersionConflict,
                "expected version " + std::to_string(*expected_version) +
                    ", current " + std::to_string(log_.size()));
  }
  if (decision.kind == DecisionKind::kMerge && decision.group_id.empty()) {
    decision.group_id = GroupIdFor(next_group_number_);
  }
  if (decision.author.empty()) decision.author = options_.author;
  // Strictly increasing so later records always supersede earlier ones.
  decision.timestamp_ms = std::max(NowMs(), last_timestamp_ms_ + 1);
  state_->Check(decision);

  AppendToLog(decision);

  std::unique_lock lock(state_mu_);
  state_->Apply(decision);
  log_.push_back(decision);
  last_timestamp_ms_ = decision.timestamp_ms;
  next_group_number_ = std::max(next_group_number_, GroupNumber(decision.group_id) + 1);
  return MutationResult{decision.group_id, log_.size()};
}

MutationResult ReviewSession::Merge(const std::vector<std::string>& cluster_ids,
                                    const std::string& label_text,
                                    const std::string& group_id,
                                    std::optional<std::uint64_t> expected_version,
                                    const std::string& author) {
  MergeDecision d;
  d.kind = DecisionKind::kMerge;
  d.group_id = group_id;
  d.member_cluster_ids = cluster_ids;
  d.label_text = std::string(Trim(label_text));
  d.author = author;
  return Commit(std::move(d), expected_version);
}

MutationResult ReviewSession::Delete(const std::string& group_id,
                                     std::optional<std::uint64_t> expected_version,
                                     const std::string& author) {
  MergeDecision d;
  d.kind = DecisionKind::kDelete;
  d.group_id = group_id;
  d.author = author;
  return Commit(std::move(d), expected_version);
}

std::vector<SemanticGroup> ReviewSession::Groups() const {
  std::shared_lock lock(state_mu_);
  return state_->Groups();
}

std::vector<MergeDecision> ReviewSession::Decisions() const {
  std::shared_lock lock(state_mu_);
  return log_;
}

ExportSummary ReviewSession::Export(std::size_t min_support) {
  std::lock_guard exporting(export_mu_);
  const auto groups = Groups();
  return WriteLabelExport(options_.export_dir, clusters_, groups, min_support);
}

nlohmann::ordered_json ReviewSession::Stats(std::size_t min_support) const {
  std::vector<SemanticGroup> groups;
  std::uint64_t version = 0;
  {
    std::shared_lock lock(state_mu_);
    groups = state_->Groups();
    version = log_.size();
  }
  std::size_t above = 0;
  for (const auto& g : groups) {
    if (g.image_support >= min_support) ++above;
  }
  nlohmann::ordered_json j;
  j["state_version"] = version;
  j["raw_sentences"] = clusters_.counts.input_sentences;
  j["unique_sentences"] = clusters_.counts.unique_sentences;
  j["clusters"] = clusters_.clusters.size();
  j["groups"] = groups.size();
  j["min_support"] = min_support;
  j["labels_above_support"] = above;
  return j;
}

nlohmann::ordered_json ReviewSession::ClusterCardJson(
    const Cluster& c, const std::map<std::string, const SemanticGroup*>& owner,
    bool all_members) const {
  constexpr std::size_t kTopMembers = 5;
  std::vector<const NormalizedSentence*> members;
  for (const auto& m : c.members) members.push_back(&m);
  std::stable_sort(members.begin(), members.end(),
                   [](const auto* a, const auto* b) { return a->frequency > b->frequency; });
  if (!all_members && members.size() > kTopMembers) members.resize(kTopMembers);

  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto* m : members) {
    list.push_back({{"surface", m->Surface()}, {"frequency", m->frequency}});
  }
  std::size_t total_frequency = 0;
  for (const auto& m : c.members) total_frequency += m.frequency;

  nlohmann::ordered_json j;
  j["cluster_id"] = c.cluster_id;
  j["section"] = c.section.Name();
  j["representative"] = c.representative;
  j["member_count"] = c.members.size();
  j["total_frequency"] = total_frequency;
  j["members"] = std::move(list);
  const SemanticGroup* g = owner.at(c.cluster_id);
  j["group_id"] = g->group_id;
  j["group_label"] = g->label_text;
  j["group_from_decision"] = g->from_decision;
  return j;
}

nlohmann::ordered_json ReviewSession::ClusterListJson(std::size_t offset,
                                                      std::size_t limit) const {
  std::vector<SemanticGroup> groups;
  std::uint64_t version = 0;
  {
    std::shared_lock lock(state_mu_);
    groups = state_->Groups();
    version = log_.size();
  }
  std::map<std::string, const SemanticGroup*> owner;
  for (const auto& g : groups) {
    for (const auto& id : g.cluster_ids) owner.emplace(id, &g);
  }
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  const std::size_t n = clusters_.clusters.size();
  for (std::size_t i = offset; i < n && i - offset < limit; ++i) {
    list.push_back(ClusterCardJson(clusters_.clusters[i], owner, false));
  }
  nlohmann::ordered_json j;
  j["state_version"] = version;
  j["total"] = n;
  j["offset"] = offset;
  j["limit"] = limit;
  j["clusters"] = std::move(list);
  return j;
}

std::optional<nlohmann::ordered_json> ReviewSession::ClusterJson(
    const std::string& id) const {
  const Cluster* c = clusters_.Find(id);
  if (c == nullptr) return std::nullopt;
  std::vector<SemanticGroup> groups;
  std::uint64_t version = 0;
  {
    std::shared_lock lock(state_mu_);
    groups = state_->Groups();
    version = log_.size();
  }
  std::map<std::string, const SemanticGroup*> owner;
  for (const auto& g : groups) {
    for (const auto& cid : g.cluster_ids) owner.emplace(cid, &g);
  }
  nlohmann::ordered_json j = ClusterCardJson(*c, owner, true);
  j["state_version"] = version;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

void SendJson(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, std::string_view kind,
               const std::string& message) {
  SendJson(res, status, {{"error", kind}, {"message", message}});
}

int StatusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownClusterId:
    case ErrorKind::kInvalidDecision:
    case ErrorKind::kConflictingDecision:
      return 422;
    case ErrorKind::kUnknownGroupId:
      return 404;
    case ErrorKind::kVersionConflict:
      return 409;
    default:
      return 500;
  }
}

std::optional<std::uint64_t> ExpectedVersion(const nlohmann::json& body,
                                             const httplib::Request& req) {
  if (body.is_object() && body.contains("expected_version")) {
    return body.at("expected_version").get<std::uint64_t>();
  }
  if (req.has_header("If-Match")) {
    return std::stoull(req.get_header_value("If-Match"));
  }
  return std::nullopt;
}

std::size_t QueryCount(const httplib::Request& req, const char* key,
                       std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  return std::stoull(req.get_param_value(key));
}

}  // namespace

CurationServer::CurationServer(ReviewSession& session)
    : session_(session), server_(std::make_unique<httplib::Server>()) {
  Routes();
}

CurationServer::~CurationServer() { Stop(); }

void CurationServer::Routes() {
  auto& s = *server_;

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      SendError(res, StatusFor(e.kind()), ErrorKindName(e.kind()), e.detail());
    } catch (const nlohmann::json::exception& e) {
      SendError(res, 400, "BadRequest", e.what());
    } catch (const std::logic_error& e) {
      SendError(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, "Internal", e.what());
    }
  });

  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok\n", "text/plain");
  });

  s.Get("/api/clusters", [this](const httplib::Request& req, httplib::Response& res) {
    const std::size_t offset = QueryCount(req, "offset", 0);
    const std::size_t limit = QueryCount(req, "limit", 100);
    SendJson(res, 200, session_.ClusterListJson(offset, limit));
  });

  s.Get(R"(/api/clusters/([^/]+))",
        [this](const httplib::Request& req, httplib::Response& res) {
          auto card = session_.ClusterJson(req.matches[1]);
          if (!card) {
            SendError(res, 404, "UnknownClusterId", req.matches[1]);
            return;
          }
          SendJson(res, 200, *card);
        });

  s.Get("/api/groups", [this](const httplib::Request&, httplib::Response& res) {
    const std::uint64_t version = session_.state_version();
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const auto& g : session_.Groups()) groups.push_back(GroupToJson(g));
    nlohmann::ordered_json body;
    body["state_version"] = version;
    body["groups"] = std::move(groups);
    SendJson(res, 200, body);
  });

  s.Post("/api/groups", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const auto ids = body.at("member_cluster_ids").get<std::vector<std::string>>();
    const auto label = body.at("label_text").get<std::string>();
    const std::string group_id = body.value("group_id", "");
    const std::string author = body.value("author", "");
    const auto result =
        session_.Merge(ids, label, group_id, ExpectedVersion(body, req), author);
    SendJson(res, 201,
             {{"group_id", result.group_id}, {"state_version", result.state_version}});
  });

  s.Delete(R"(/api/groups/([^/]+))",
           [this](const httplib::Request& req, httplib::Response& res) {
             nlohmann::json body = nlohmann::json::object();
             if (!req.body.empty()) body = nlohmann::json::parse(req.body);
             const auto result = session_.Delete(req.matches[1],
                                                 ExpectedVersion(body, req),
                                                 body.value("author", ""));
             SendJson(res, 200, {{"group_id", result.group_id},
                                 {"state_version", result.state_version}});
           });

  s.Post("/api/export", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t min_support = session_.options().default_min_support;
    if (!req.body.empty()) {
      const auto body = nlohmann::json::parse(req.body);
      min_support = body.value("min_support", min_support);
    }
    const std::uint64_t version = session_.state_version();
    nlohmann::ordered_json body = ExportSummaryToJson(session_.Export(min_support));
    body["state_version"] = version;
    SendJson(res, 200, body);
  });

  s.Get("/api/stats", [this](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200,
             session_.Stats(QueryCount(req, "min_support",
                                       session_.options().default_min_support)));
  });

  if (session_.options().ui_dir) {
    s.set_mount_point("/", session_.options().ui_dir->string());
  }
}

int CurationServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::kBindError, host + ":0");
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorKind::kBindError, host + ":" + std::to_string(port));
  }
  return port;
}

void CurationServer::Run() { server_->listen_after_bind(); }

void CurationServer::Stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace labelforge
