#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "labelforge/clustering.h"
#include "labelforge/ingest.h"

namespace labelforge {

enum class DecisionKind { kMerge, kDelete };

// One entry of the append-only review log. A merge (re)defines group_id as
// the given clusters; a delete retires the group and returns its clusters to
// singletons. Later entries supersede earlier ones.
struct MergeDecision {
  DecisionKind kind = DecisionKind::kMerge;
  std::string group_id;
  std::vector<std::string> member_cluster_ids;  // empty for deletes
  std::string label_text;                       // empty for deletes
  std::string author;
  std::int64_t timestamp_ms = 0;

  bool operator==(const MergeDecision&) const = default;
};

struct SemanticGroup {
  std::string group_id;
  std::vector<std::string> cluster_ids;  // in ClusterSet order
  std::string label_text;
  SectionKind section;  // section of the first cluster
  bool from_decision = false;
  bool spans_sections = false;
  std::size_t image_support = 0;
  std::size_t report_support = 0;
};

struct LabelDefinition {
  std::string label_id;
  std::string label_text;
  SectionKind section;
  std::size_t image_support = 0;
  std::string group_id;
  std::vector<std::string> cluster_ids;
};

struct LabelMatrix {
  std::vector<std::string> rows;     // image ids, sorted
  std::vector<std::string> columns;  // label ids
  // (row, column) pairs holding a 1, sorted.
  std::vector<std::pair<std::size_t, std::size_t>> ones;

  std::vector<std::size_t> ColumnSums() const;
};

struct SupportFilterResult {
  std::vector<LabelDefinition> labels;
  std::vector<SemanticGroup> dropped;
};

struct MatrixExport {
  LabelMatrix matrix;
  std::vector<std::string> unlabeled_images;  // all-zero rows
};

// Live merge decisions folded in log order. The cluster set must outlive it.
class GroupState {
 public:
  explicit GroupState(const ClusterSet& clusters);

  // Throws kUnknownClusterId, kUnknownGroupId, kInvalidDecision, or
  // kConflictingDecision when the decision would supersede one whose
  // timestamp is not strictly earlier. On error the state is unchanged.
  void Apply(const MergeDecision& decision);
  void Check(const MergeDecision& decision) const;

  bool IsLive(const std::string& group_id) const;
  std::size_t live_decisions() const { return live_.size(); }

  // Unreferenced clusters become singleton groups (group_id = cluster_id,
  // label = representative). Groups are ordered by their first cluster and
  // carry recomputed supports.
  std::vector<SemanticGroup> Groups() const;

 private:
  struct Live {
    std::vector<std::string> members;
    std::string label_text;
    std::int64_t timestamp_ms = 0;
  };

  const ClusterSet* clusters_;
  std::map<std::string, std::size_t> cluster_index_;
  std::map<std::string, Live> live_;
  std::map<std::string, std::string> owner_;  // cluster id -> group id
};

// GroupState over the whole log.
std::vector<SemanticGroup> ApplyMerges(const ClusterSet& clusters,
                                       const std::vector<MergeDecision>& decisions);

// Distinct image ids and report ids across every source of the group.
void ComputeSupport(const ClusterSet& clusters, SemanticGroup& group);

// Keeps groups with image_support >= min_support and numbers them L001...
SupportFilterResult FilterMinSupport(const std::vector<SemanticGroup>& groups,
                                     std::size_t min_support);

// Rows are every image in `image_universe` plus every image referenced by a
// cluster source. A cell is 1 iff a source sentence of one of the label's
// clusters comes from a report carrying that image.
MatrixExport ExportLabelMatrix(const ClusterSet& clusters,
                               const std::vector<LabelDefinition>& labels,
                               const std::vector<std::string>& image_universe = {});
MatrixExport ExportLabelMatrix(const Corpus& corpus, const ClusterSet& clusters,
                               const std::vector<LabelDefinition>& labels);

struct ExportSummary {
  std::size_t clusters = 0;
  std::size_t groups = 0;
  std::size_t labels = 0;
  std::size_t min_support = 0;
  std::vector<SemanticGroup> dropped;
  std::vector<std::string> unlabeled_images;
  std::size_t images = 0;
};

// Writes labels.csv, matrix.csv (sparse triplets), audit.json and, when
// `dense` is set, matrix_dense.csv into out_dir.
ExportSummary WriteLabelExport(const std::filesystem::path& out_dir,
                               const ClusterSet& clusters,
                               const std::vector<SemanticGroup>& groups,
                               std::size_t min_support, bool dense = false,
                               const std::vector<std::string>& image_universe = {});

nlohmann::ordered_json ExportSummaryToJson(const ExportSummary& summary);
nlohmann::ordered_json GroupToJson(const SemanticGroup& group);

nlohmann::ordered_json DecisionToJson(const MergeDecision& decision);
MergeDecision DecisionFromJson(const nlohmann::json& record);

struct DecisionLogContents {
  std::vector<MergeDecision> decisions;
  std::uint64_t valid_bytes = 0;  // offset just past the last good record
  // Set when parsing stopped at a bad or unterminated record.
  std::optional<std::string> corruption;
};

// Reads records up to the first bad one; never throws on content.
DecisionLogContents ParseDecisionLog(std::istream& in);
// As above, but throws kCorruptLog (message names the last valid offset).
// A missing file is an empty log.
DecisionLogContents ReadDecisionLog(const std::filesystem::path& path);

}  // namespace labelforge
