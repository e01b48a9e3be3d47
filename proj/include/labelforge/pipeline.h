#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "json.hpp"
#include "labelforge/normalize.h"
#include "labelforge/similarity.h"

namespace labelforge {

struct PipelineConfig {
  std::filesystem::path corpus_path;
  std::optional<std::filesystem::path> normalization_path;
  std::optional<std::filesystem::path> decisions_path;
  SimilarityParams params;
  std::size_t min_support = 50;
  std::filesystem::path out_dir = "out";
  bool dense_matrix = false;

  // Throws kInvalidConfig for params out of range or missing input files.
  void Validate() const;
};

// pipeline.toml:
//   corpus = "reports.jsonl"
//   normalization = "norm.toml"      # optional
//   decisions = "decisions.jsonl"    # optional
//   out_dir = "out"
//   min_support = 50
//   dense_matrix = false
//   [similarity]
//   tau = 0.75
//   delta = 0.1
//   gamma = 0.7
//   cluster_gamma = 0.7              # defaults to gamma
// Relative paths resolve against the file's folder.
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

// Stage counts from raw sentences down to retained labels.
struct PipelineReport {
  std::size_t documents = 0;
  std::size_t raw_sentences = 0;
  std::size_t dropped_sentences = 0;
  std::size_t unique_sentences = 0;
  std::size_t clusters = 0;
  std::size_t groups = 0;
  std::size_t labels = 0;
  std::size_t min_support = 0;
  SimilarityParams params;
};

nlohmann::ordered_json PipelineReportToJson(const PipelineReport& report);

// ingest -> normalize -> dedup -> cluster -> merge decisions -> export.
// Writes clusters.json, labels.csv, matrix.csv, audit.json and report.json
// into out_dir; an empty corpus writes only report.json. Module errors are
// rethrown with the failing stage prefixed to the message.
PipelineReport RunPipeline(const PipelineConfig& config);

}  // namespace labelforge
