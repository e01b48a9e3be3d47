#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "labelforge/normalize.h"
#include "labelforge/similarity.h"

namespace labelforge {

struct LabeledPair {
  TokenSeq a;
  TokenSeq b;
  bool same_meaning = false;
};

struct OperatingPoint {
  SimilarityParams params;
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  double false_positive_rate = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;
  // No predicted positives: precision is reported as 1.0.
  bool vacuous_precision = false;
  // No positive pairs: recall is reported as 0.0.
  bool no_positive_pairs = false;
};

struct SweepResult {
  std::vector<OperatingPoint> grid;          // tau-major, then delta, gamma
  std::vector<OperatingPoint> pareto_front;  // in grid order
};

struct LoadedPairs {
  std::vector<LabeledPair> pairs;
  std::size_t rejected_identical = 0;
};

// Records {"a": text, "b": text, "same_meaning": bool}, one per line. Both
// sides are normalized with `config`; pairs that normalize to the same
// tokens are dropped and counted.
LoadedPairs ParseLabeledPairs(std::istream& in, const NormalizationConfig& config);
LoadedPairs LoadLabeledPairs(const std::filesystem::path& path,
                             const NormalizationConfig& config);

// Builds the point from confusion counts.
OperatingPoint MakeOperatingPoint(const SimilarityParams& params,
                                  std::size_t tp, std::size_t fp,
                                  std::size_t fn, std::size_t tn);

// Throws kEmptyPairSet.
OperatingPoint EvaluateParams(const std::vector<LabeledPair>& pairs,
                              const SimilarityParams& params);

// Scores each pair once per (tau, delta) and re-thresholds across gammas.
// Throws kEmptyGrid, kEmptyPairSet, kInvalidParams.
SweepResult Sweep(const std::vector<LabeledPair>& pairs,
                  const std::vector<double>& tau_values,
                  const std::vector<double>& delta_values,
                  const std::vector<double>& gamma_values);

// Points no other point beats on both precision and recall (with one strict).
std::vector<OperatingPoint> ParetoFront(const std::vector<OperatingPoint>& grid);

// Max F1 among points meeting both minimums; ties prefer larger gamma, then
// larger tau, then smaller delta. Throws kNoFeasiblePoint.
OperatingPoint SelectOperatingPoint(const SweepResult& result,
                                    double min_precision, double min_recall);

// "0.6,0.75,0.9" or "0.5..0.95:0.05" (inclusive, evenly stepped).
std::vector<double> ParseGrid(std::string_view spec);

nlohmann::ordered_json OperatingPointToJson(const OperatingPoint& point);
nlohmann::ordered_json SweepToJson(const SweepResult& result);

}  // namespace labelforge
