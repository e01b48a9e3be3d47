#include "labelforge/clustering.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "labelforge/error.h"
#include "labelforge/kernels.h"

namespace labelforge {

const Cluster* ClusterSet::Find(std::string_view cluster_id) const {
  for (const auto& c : clusters) {
    if (c.cluster_id == cluster_id) return &c;
  }
  return nullptr;
}

bool ScanOrderLess(const NormalizedSentence& a, const NormalizedSentence& b) {
  const std::string ka = a.Key();
  const std::string kb = b.Key();
  if (ka != kb) return ka < kb;
  return a.tokens < b.tokens;
}

std::vector<Cluster> ClusterSection(std::vector<NormalizedSentence> sentences,
                                    const SimilarityParams& params) {
  return ClusterSectionWith(std::move(sentences), params,
                            &kernels::parallel::MatchesAll);
}

std::vector<Cluster> ClusterSectionWith(
    std::vector<NormalizedSentence> sentences, const SimilarityParams& params,
    MemberCheck check) {
  std::vector<Cluster> out;
  if (sentences.empty()) return out;
  std::stable_sort(sentences.begin(), sentences.end(), ScanOrderLess);

  Cluster current;
  for (auto& s : sentences) {
    if (!current.members.empty() &&
        check(s, current.members, params)) {
      current.members.push_back(std::move(s));
      continue;
    }
    if (!current.members.empty()) out.push_back(std::move(current));
    current = Cluster{};
    current.section = s.section;
    current.members.push_back(std::move(s));
  }
  out.push_back(std::move(current));
  for (auto& c : out) c.representative = SelectRepresentative(c);
  return out;
}

std::string SelectRepresentative(const Cluster& cluster) {
  const NormalizedSentence* best = nullptr;
  std::string best_surface;
  for (const auto& m : cluster.members) {
    std::string surface = m.Surface();
    if (best == nullptr || m.frequency > best->frequency ||
        (m.frequency == best->frequency && surface < best_surface)) {
      best = &m;
      best_surface = std::move(surface);
    }
  }
  return best_surface;
}

ClusterSet ClusterCorpus(const std::vector<NormalizedSentence>& sentences,
                         const SimilarityParams& params) {
  params.Validate();
  std::map<SectionKind, std::vector<NormalizedSentence>> by_section;
  ClusterSet set;
  set.params_used = params;
  for (const auto& s : sentences) {
    by_section[s.section].push_back(s);
    set.counts.input_sentences += s.frequency;
  }
  set.counts.unique_sentences = sentences.size();

  std::vector<std::vector<NormalizedSentence>> groups;
  groups.reserve(by_section.size());
  for (auto& [section, group] : by_section) groups.push_back(std::move(group));
  auto per_section = kernels::parallel::ClusterSections(std::move(groups), params);

  for (auto& clusters : per_section) {
    std::size_t n = 0;
    for (auto& c : clusters) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "-%04zu", ++n);
      c.cluster_id = c.section.Name() + suffix;
      set.clusters.push_back(std::move(c));
    }
  }
  set.counts.n_clusters = set.clusters.size();
  return set;
}

nlohmann::ordered_json ClustersToJson(const ClusterSet& set) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : set.clusters) {
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (const auto& m : c.members) {
      nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
      for (const auto& t : m.tokens) tokens.push_back(EncodeToken(t));
      nlohmann::ordered_json sources = nlohmann::ordered_json::array();
      for (const auto& src : m.sources) {
        sources.push_back({{"report_id", src.report_id},
                           {"index", src.index_in_section},
                           {"image_ids", src.image_ids}});
      }
      nlohmann::ordered_json member;
      member["surface"] = m.Surface();
      member["tokens"] = std::move(tokens);
      member["frequency"] = m.frequency;
      member["sources"] = std::move(sources);
      members.push_back(std::move(member));
    }
    nlohmann::ordered_json record;
    record["cluster_id"] = c.cluster_id;
    record["section"] = c.section.Name();
    record["representative"] = c.representative;
    record["members"] = std::move(members);
    arr.push_back(std::move(record));
  }
  return arr;
}

ClusterSet ClustersFromJson(const nlohmann::json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorKind::kMalformedRecord, "clusters file must be an array");
  }
  ClusterSet set;
  try {
    for (const auto& record : doc) {
      Cluster c;
      c.cluster_id = record.at("cluster_id").get<std::string>();
      c.section = SectionKind::FromHeading(record.at("section").get<std::string>());
      c.representative = record.at("representative").get<std::string>();
      for (const auto& m : record.at("members")) {
        NormalizedSentence s;
        s.section = c.section;
        for (const auto& t : m.at("tokens")) {
          s.tokens.push_back(DecodeToken(t.get<std::string>()));
        }
        s.frequency = m.at("frequency").get<std::size_t>();
        for (const auto& src : m.at("sources")) {
          s.sources.push_back(
              SourceRef{src.at("report_id").get<std::string>(),
                        src.at("index").get<std::size_t>(),
                        src.at("image_ids").get<std::vector<std::string>>()});
        }
        set.counts.input_sentences += s.frequency;
        c.members.push_back(std::move(s));
      }
      if (c.members.empty()) {
        throw Error(ErrorKind::kMalformedRecord,
                    "cluster " + c.cluster_id + " has no members");
      }
      if (set.Find(c.cluster_id) != nullptr) {
        throw Error(ErrorKind::kMalformedRecord,
                    "duplicate cluster id " + c.cluster_id);
      }
      set.counts.unique_sentences += c.members.size();
      set.clusters.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedRecord, e.what());
  }
  set.counts.n_clusters = set.clusters.size();
  return set;
}

void SaveClusters(const ClusterSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << ClustersToJson(set).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

ClusterSet LoadClusters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::kMalformedRecord, e.what());
  }
  return ClustersFromJson(doc);
}

}  // namespace labelforge
