#include "labelforge/pipeline.h"

#include <fstream>
#include <string>

#include "labelforge/clustering.h"
#include "labelforge/error.h"
#include "labelforge/ingest.h"
#include "labelforge/labelset.h"
#include "labelforge/toml_lite.h"

namespace labelforge {
namespace {

template <typename Fn>
auto Stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.detail(), e.line());
  }
}

double ReadNumber(const nlohmann::json& table, const char* key, double fallback) {
  if (!table.contains(key)) return fallback;
  const auto& v = table.at(key);
  if (!v.is_number()) {
    throw Error(ErrorKind::kInvalidConfig, std::string(key) + " must be a number");
  }
  return v.get<double>();
}

}  // namespace

void PipelineConfig::Validate() const {
  try {
    params.Validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidConfig, e.detail());
  }
  auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorKind::kInvalidConfig,
                  std::string(what) + " not found: " + p.string());
    }
  };
  must_exist(corpus_path, "corpus");
  if (normalization_path) must_exist(*normalization_path, "normalization config");
  if (decisions_path) must_exist(*decisions_path, "decision log");
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path) {
  const nlohmann::json doc = LoadTomlLite(path);
  const auto base = path.parent_path();
  auto resolve = [&](const nlohmann::json& v, const char* key) {
    if (!v.is_string()) {
      throw Error(ErrorKind::kInvalidConfig, std::string(key) + " must be a path");
    }
    std::filesystem::path p(v.get<std::string>());
    return p.is_absolute() ? p : base / p;
  };

  PipelineConfig config;
  bool have_corpus = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "corpus") {
      config.corpus_path = resolve(value, "corpus");
      have_corpus = true;
    } else if (key == "normalization") {
      config.normalization_path = resolve(value, "normalization");
    } else if (key == "decisions") {
      config.decisions_path = resolve(value, "decisions");
    } else if (key == "out_dir") {
      config.out_dir = resolve(value, "out_dir");
    } else if (key == "min_support") {
      if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw Error(ErrorKind::kInvalidConfig, "min_support must be a count");
      }
      config.min_support = value.get<std::size_t>();
    } else if (key == "dense_matrix") {
      if (!value.is_boolean()) {
        throw Error(ErrorKind::kInvalidConfig, "dense_matrix must be a boolean");
      }
      config.dense_matrix = value.get<bool>();
    } else if (key == "similarity") {
      SimilarityParams p;
      p.tau = ReadNumber(value, "tau", p.tau);
      p.delta = ReadNumber(value, "delta", p.delta);
      p.gamma = ReadNumber(value, "gamma", p.gamma);
      p.cluster_gamma = ReadNumber(value, "cluster_gamma", p.gamma);
      for (const auto& [k, v] : value.items()) {
        if (k != "tau" && k != "delta" && k != "gamma" && k != "cluster_gamma") {
          throw Error(ErrorKind::kInvalidConfig, "unknown similarity key '" + k + "'");
        }
      }
      config.params = p;
    } else {
      throw Error(ErrorKind::kInvalidConfig, "unknown key '" + key + "'");
    }
  }
  if (!have_corpus) throw Error(ErrorKind::kInvalidConfig, "corpus is required");
  config.Validate();
  return config;
}

nlohmann::ordered_json PipelineReportToJson(const PipelineReport& r) {
  nlohmann::ordered_json params;
  params["tau"] = r.params.tau;
  params["delta"] = r.params.delta;
  params["gamma"] = r.params.gamma;
  params["cluster_gamma"] = r.params.cluster_gamma;
  nlohmann::ordered_json j;
  j["documents"] = r.documents;
  j["raw_sentences"] = r.raw_sentences;
  j["dropped_sentences"] = r.dropped_sentences;
  j["unique_sentences"] = r.unique_sentences;
  j["clusters"] = r.clusters;
  j["groups"] = r.groups;
  j["labels"] = r.labels;
  j["min_support"] = r.min_support;
  j["params"] = std::move(params);
  return j;
}

PipelineReport RunPipeline(const PipelineConfig& config) {
  config.Validate();
  PipelineReport report;
  report.params = config.params;
  report.min_support = config.min_support;

  const Corpus corpus = Stage("ingest", [&] { return LoadCorpus(config.corpus_path); });
  report.documents = corpus.documents.size();

  const NormalizationConfig norm = Stage("normalize", [&] {
    return config.normalization_path
               ? LoadNormalizationConfig(*config.normalization_path)
               : NormalizationConfig::Default();
  });
  const NormalizedCorpus normalized =
      Stage("normalize", [&] { return NormalizeCorpus(corpus, norm); });
  report.raw_sentences = normalized.raw_sentences;
  report.dropped_sentences = normalized.dropped_sentences;
  report.unique_sentences = normalized.sentences.size();

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "export: cannot create " + config.out_dir.string());

  if (!normalized.sentences.empty()) {
    const ClusterSet clusters = Stage(
        "cluster", [&] { return ClusterCorpus(normalized.sentences, config.params); });
    report.clusters = clusters.clusters.size();
    Stage("cluster", [&] { SaveClusters(clusters, config.out_dir / "clusters.json"); });

    const std::vector<MergeDecision> decisions = Stage("merge", [&] {
      return config.decisions_path ? ReadDecisionLog(*config.decisions_path).decisions
                                   : std::vector<MergeDecision>{};
    });
    const auto groups = Stage("merge", [&] { return ApplyMerges(clusters, decisions); });
    report.groups = groups.size();

    std::vector<std::string> universe;
    for (const auto& doc : corpus.documents) {
      universe.insert(universe.end(), doc.image_ids.begin(), doc.image_ids.end());
    }
    const ExportSummary summary = Stage("export", [&] {
      return WriteLabelExport(config.out_dir, clusters, groups, config.min_support,
                              config.dense_matrix, universe);
    });
    report.labels = summary.labels;
  }

  std::ofstream out(config.out_dir / "report.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "export: cannot write report.json");
  out << PipelineReportToJson(report).dump(2) << '\n';
  return report;
}

}  // namespace labelforge
