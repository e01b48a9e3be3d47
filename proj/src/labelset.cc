#include "labelforge/labelset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>

#include "labelforge/error.h"
#include "labelforge/text.h"

namespace labelforge {

GroupState::GroupState(const ClusterSet& clusters) : clusters_(&clusters) {
  for (std::size_t i = 0; i < clusters.clusters.size(); ++i) {
    cluster_index_.emplace(clusters.clusters[i].cluster_id, i);
  }
}

bool GroupState::IsLive(const std::string& group_id) const {
  return live_.count(group_id) != 0;
}

void GroupState::Check(const MergeDecision& d) const {
  if (d.group_id.empty()) {
    throw Error(ErrorKind::kInvalidDecision, "decision without group_id");
  }
  auto superseding = [&](const std::string& group_id) {
    const Live& prior = live_.at(group_id);
    if (prior.timestamp_ms >= d.timestamp_ms) {
      throw Error(ErrorKind::kConflictingDecision,
                  "decision for " + d.group_id + " at " +
                      std::to_string(d.timestamp_ms) + " would supersede " +
                      group_id + " at " + std::to_string(prior.timestamp_ms));
    }
  };

  if (d.kind == DecisionKind::kDelete) {
    if (!IsLive(d.group_id)) throw Error(ErrorKind::kUnknownGroupId, d.group_id);
    superseding(d.group_id);
    return;
  }
  if (d.member_cluster_ids.empty()) {
    throw Error(ErrorKind::kInvalidDecision, "merge without clusters");
  }
  if (Trim(d.label_text).empty()) {
    throw Error(ErrorKind::kInvalidDecision, "merge without label text");
  }
  if (cluster_index_.count(d.group_id) != 0) {
    throw Error(ErrorKind::kInvalidDecision,
                "group id " + d.group_id + " collides with a cluster id");
  }
  for (const auto& id : d.member_cluster_ids) {
    if (cluster_index_.count(id) == 0) {
      throw Error(ErrorKind::kUnknownClusterId, id);
    }
  }
  if (IsLive(d.group_id)) superseding(d.group_id);
  for (const auto& id : d.member_cluster_ids) {
    auto owner = owner_.find(id);
    if (owner != owner_.end() && owner->second != d.group_id) {
      superseding(owner->second);
    }
  }
}

void GroupState::Apply(const MergeDecision& d) {
  Check(d);
  if (auto it = live_.find(d.group_id); it != live_.end()) {
    for (const auto& id : it->second.members) owner_.erase(id);
    live_.erase(it);
  }
  if (d.kind == DecisionKind::kDelete) return;

  Live next;
  next.label_text = d.label_text;
  next.timestamp_ms = d.timestamp_ms;
  std::set<std::string> seen;
  for (const auto& id : d.member_cluster_ids) {
    if (!seen.insert(id).second) continue;
    if (auto owner = owner_.find(id); owner != owner_.end()) {
      auto& prior = live_.at(owner->second).members;
      prior.erase(std::remove(prior.begin(), prior.end(), id), prior.end());
      if (prior.empty()) live_.erase(owner->second);
    }
    owner_[id] = d.group_id;
    next.members.push_back(id);
  }
  live_.emplace(d.group_id, std::move(next));
}

std::vector<SemanticGroup> GroupState::Groups() const {
  std::vector<SemanticGroup> groups;
  std::map<std::string, std::size_t> emitted;
  for (const auto& cluster : clusters_->clusters) {
    auto owner = owner_.find(cluster.cluster_id);
    if (owner == owner_.end()) {
      SemanticGroup g;
      g.group_id = cluster.cluster_id;
      g.cluster_ids = {cluster.cluster_id};
      g.label_text = cluster.representative;
      g.section = cluster.section;
      groups.push_back(std::move(g));
      continue;
    }
    if (emitted.count(owner->second)) continue;
    emitted.emplace(owner->second, groups.size());
    const Live& live = live_.at(owner->second);
    SemanticGroup g;
    g.group_id = owner->second;
    g.label_text = live.label_text;
    g.from_decision = true;
    g.cluster_ids = live.members;
    std::sort(g.cluster_ids.begin(), g.cluster_ids.end(),
              [&](const std::string& a, const std::string& b) {
                return cluster_index_.at(a) < cluster_index_.at(b);
              });
    g.section = clusters_->clusters[cluster_index_.at(g.cluster_ids.front())].section;
    for (const auto& id : g.cluster_ids) {
      if (clusters_->clusters[cluster_index_.at(id)].section != g.section) {
        g.spans_sections = true;
      }
    }
    groups.push_back(std::move(g));
  }
  for (auto& g : groups) ComputeSupport(*clusters_, g);
  return groups;
}

std::vector<SemanticGroup> ApplyMerges(const ClusterSet& clusters,
                                       const std::vector<MergeDecision>& decisions) {
  GroupState state(clusters);
  for (const auto& d : decisions) state.Apply(d);
  return state.Groups();
}

void ComputeSupport(const ClusterSet& clusters, SemanticGroup& group) {
  std::set<std::string> images;
  std::set<std::string> reports;
  for (const auto& id : group.cluster_ids) {
    const Cluster* c = clusters.Find(id);
    if (c == nullptr) throw Error(ErrorKind::kUnknownClusterId, id);
    for (const auto& m : c->members) {
      for (const auto& src : m.sources) {
        reports.insert(src.report_id);
        images.insert(src.image_ids.begin(), src.image_ids.end());
      }
    }
  }
  group.image_support = images.size();
  group.report_support = reports.size();
}

SupportFilterResult FilterMinSupport(const std::vector<SemanticGroup>& groups,
                                     std::size_t min_support) {
  SupportFilterResult out;
  for (const auto& g : groups) {
    if (g.image_support < min_support) {
      out.dropped.push_back(g);
      continue;
    }
    char id[32];
    std::snprintf(id, sizeof(id), "L%03zu", out.labels.size() + 1);
    out.labels.push_back(LabelDefinition{id, g.label_text, g.section,
                                         g.image_support, g.group_id,
                                         g.cluster_ids});
  }
  return out;
}

std::vector<std::size_t> LabelMatrix::ColumnSums() const {
  std::vector<std::size_t> sums(columns.size(), 0);
  for (const auto& [row, col] : ones) ++sums[col];
  return sums;
}

MatrixExport ExportLabelMatrix(const ClusterSet& clusters,
                               const std::vector<LabelDefinition>& labels,
                               const std::vector<std::string>& image_universe) {
  std::set<std::string> images(image_universe.begin(), image_universe.end());
  for (const auto& c : clusters.clusters) {
    for (const auto& m : c.members) {
      for (const auto& src : m.sources) {
        images.insert(src.image_ids.begin(), src.image_ids.end());
      }
    }
  }
  MatrixExport out;
  out.matrix.rows.assign(images.begin(), images.end());
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < out.matrix.rows.size(); ++i) {
    row_of.emplace(out.matrix.rows[i], i);
  }

  std::set<std::pair<std::size_t, std::size_t>> ones;
  for (std::size_t col = 0; col < labels.size(); ++col) {
    out.matrix.columns.push_back(labels[col].label_id);
    for (const auto& id : labels[col].cluster_ids) {
      const Cluster* c = clusters.Find(id);
      if (c == nullptr) throw Error(ErrorKind::kUnknownClusterId, id);
      for (const auto& m : c->members) {
        for (const auto& src : m.sources) {
          for (const auto& image : src.image_ids) {
            ones.emplace(row_of.at(image), col);
          }
        }
      }
    }
  }
  out.matrix.ones.assign(ones.begin(), ones.end());

  std::vector<bool> labeled(out.matrix.rows.size(), false);
  for (const auto& [row, col] : out.matrix.ones) labeled[row] = true;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (!labeled[i]) out.unlabeled_images.push_back(out.matrix.rows[i]);
  }
  return out;
}

MatrixExport ExportLabelMatrix(const Corpus& corpus, const ClusterSet& clusters,
                               const std::vector<LabelDefinition>& labels) {
  std::vector<std::string> universe;
  for (const auto& doc : corpus.documents) {
    universe.insert(universe.end(), doc.image_ids.begin(), doc.image_ids.end());
  }
  return ExportLabelMatrix(clusters, labels, universe);
}

nlohmann::ordered_json GroupToJson(const SemanticGroup& g) {
  nlohmann::ordered_json j;
  j["group_id"] = g.group_id;
  j["label_text"] = g.label_text;
  j["section"] = g.section.Name();
  j["cluster_ids"] = g.cluster_ids;
  j["from_decision"] = g.from_decision;
  j["spans_sections"] = g.spans_sections;
  j["image_support"] = g.image_support;
  j["report_support"] = g.report_support;
  return j;
}

nlohmann::ordered_json ExportSummaryToJson(const ExportSummary& s) {
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (const auto& g : s.dropped) dropped.push_back(GroupToJson(g));
  nlohmann::ordered_json j;
  j["clusters"] = s.clusters;
  j["groups"] = s.groups;
  j["labels"] = s.labels;
  j["min_support"] = s.min_support;
  j["images"] = s.images;
  j["dropped_groups"] = std::move(dropped);
  j["unlabeled_images"] = s.unlabeled_images;
  return j;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace

ExportSummary WriteLabelExport(const std::filesystem::path& out_dir,
                               const ClusterSet& clusters,
                               const std::vector<SemanticGroup>& groups,
                               std::size_t min_support, bool dense,
                               const std::vector<std::string>& image_universe) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + out_dir.string());

  SupportFilterResult filtered = FilterMinSupport(groups, min_support);
  MatrixExport exported =
      ExportLabelMatrix(clusters, filtered.labels, image_universe);

  std::string labels_csv = "label_id,section,label_text,image_support\n";
  for (const auto& l : filtered.labels) {
    labels_csv += CsvField(l.label_id) + "," + CsvField(l.section.Name()) + "," +
                  CsvField(l.label_text) + "," + std::to_string(l.image_support) +
                  "\n";
  }
  std::string matrix_csv = "image_id,label_id,value\n";
  for (const auto& [row, col] : exported.matrix.ones) {
    matrix_csv += CsvField(exported.matrix.rows[row]) + "," +
                  CsvField(exported.matrix.columns[col]) + ",1\n";
  }
  WriteFile(out_dir / "labels.csv", labels_csv);
  WriteFile(out_dir / "matrix.csv", matrix_csv);

  if (dense) {
    std::string dense_csv = "image_id";
    for (const auto& col : exported.matrix.columns) dense_csv += "," + CsvField(col);
    dense_csv += "\n";
    std::size_t k = 0;
    const auto& ones = exported.matrix.ones;
    for (std::size_t row = 0; row < exported.matrix.rows.size(); ++row) {
      std::string line = CsvField(exported.matrix.rows[row]);
      for (std::size_t col = 0; col < exported.matrix.columns.size(); ++col) {
        const bool one = k < ones.size() && ones[k].first == row &&
                         ones[k].second == col;
        if (one) ++k;
        line += one ? ",1" : ",0";
      }
      dense_csv += line + "\n";
    }
    WriteFile(out_dir / "matrix_dense.csv", dense_csv);
  }

  ExportSummary summary;
  summary.clusters = clusters.clusters.size();
  summary.groups = groups.size();
  summary.labels = filtered.labels.size();
  summary.min_support = min_support;
  summary.dropped = std::move(filtered.dropped);
  summary.unlabeled_images = std::move(exported.unlabeled_images);
  summary.images = exported.matrix.rows.size();
  WriteFile(out_dir / "audit.json", ExportSummaryToJson(summary).dump(2) + "\n");
  return summary;
}

nlohmann::ordered_json DecisionToJson(const MergeDecision& d) {
  nlohmann::ordered_json j;
  j["op"] = d.kind == DecisionKind::kMerge ? "merge" : "delete";
  j["group_id"] = d.group_id;
  if (d.kind == DecisionKind::kMerge) {
    j["member_cluster_ids"] = d.member_cluster_ids;
    j["label_text"] = d.label_text;
  }
  j["author"] = d.author;
  j["timestamp"] = d.timestamp_ms;
  return j;
}

MergeDecision DecisionFromJson(const nlohmann::json& record) {
  MergeDecision d;
  const std::string op = record.value("op", "merge");
  if (op == "merge") {
    d.kind = DecisionKind::kMerge;
    d.member_cluster_ids =
        record.at("member_cluster_ids").get<std::vector<std::string>>();
    d.label_text = record.at("label_text").get<std::string>();
  } else if (op == "delete") {
    d.kind = DecisionKind::kDelete;
  } else {
    throw Error(ErrorKind::kInvalidDecision, "unknown op '" + op + "'");
  }
  d.group_id = record.at("group_id").get<std::string>();
  d.author = record.value("author", "");
  d.timestamp_ms = record.at("timestamp").get<std::int64_t>();
  return d;
}

DecisionLogContents ParseDecisionLog(std::istream& in) {
  DecisionLogContents out;
  std::string line;
  std::size_t line_no = 0;
  while (true) {
    std::getline(in, line);
    if (in.eof() && line.empty()) break;
    ++line_no;
    if (in.eof()) {
      out.corruption = "record " + std::to_string(line_no) +
                       " is not newline-terminated";
      break;
    }
    if (in.fail()) break;
    try {
      if (!Trim(line).empty()) {
        out.decisions.push_back(DecisionFromJson(nlohmann::json::parse(line)));
      }
    } catch (const std::exception& e) {
      out.corruption = "record " + std::to_string(line_no) + ": " + e.what();
      break;
    }
    out.valid_bytes += line.size() + 1;
  }
  return out;
}

DecisionLogContents ReadDecisionLog(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  DecisionLogContents contents = ParseDecisionLog(in);
  if (contents.corruption) {
    throw Error(ErrorKind::kCorruptLog,
                path.string() + ": " + *contents.corruption +
                    "; last valid offset " + std::to_string(contents.valid_bytes));
  }
  return contents;
}

}  // namespace labelforge
