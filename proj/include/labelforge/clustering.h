#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "labelforge/normalize.h"
#include "labelforge/similarity.h"

namespace labelforge {

struct Cluster {
  std::string cluster_id;
  SectionKind section;
  std::vector<NormalizedSentence> members;  // in scan order
  std::string representative;

  bool operator==(const Cluster&) const = default;
};

struct ClusterCounts {
  std::size_t input_sentences = 0;
  std::size_t unique_sentences = 0;
  std::size_t n_clusters = 0;

  bool operator==(const ClusterCounts&) const = default;
};

struct ClusterSet {
  std::vector<Cluster> clusters;
  SimilarityParams params_used;
  ClusterCounts counts;

  const Cluster* Find(std::string_view cluster_id) const;
};

// Scan order: Key() compared bytewise, then token polarity.
bool ScanOrderLess(const NormalizedSentence& a, const NormalizedSentence& b);

// Greedy complete-linkage pass over one section's unique sentences. A
// sentence joins the open cluster iff its combined similarity to every
// member is >= params.cluster_gamma; otherwise it starts the next cluster.
// Closed clusters are never revisited. Cluster ids are left empty;
// ClusterCorpus assigns them.
std::vector<Cluster> ClusterSection(std::vector<NormalizedSentence> sentences,
                                    const SimilarityParams& params);

using MemberCheck = bool (*)(const NormalizedSentence& candidate,
                             const std::vector<NormalizedSentence>& members,
                             const SimilarityParams& params);

// The same scan with a caller-chosen complete-linkage check.
std::vector<Cluster> ClusterSectionWith(
    std::vector<NormalizedSentence> sentences, const SimilarityParams& params,
    MemberCheck check);

// Most frequent member; ties go to the smallest surface text.
std::string SelectRepresentative(const Cluster& cluster);

// Groups by section, clusters each group and assigns ids "<section>-NNNN".
// Output is ordered by section, then by first member.
ClusterSet ClusterCorpus(const std::vector<NormalizedSentence>& sentences,
                         const SimilarityParams& params);

nlohmann::ordered_json ClustersToJson(const ClusterSet& set);
ClusterSet ClustersFromJson(const nlohmann::json& doc);
void SaveClusters(const ClusterSet& set, const std::filesystem::path& path);
ClusterSet LoadClusters(const std::filesystem::path& path);

}  // namespace labelforge
