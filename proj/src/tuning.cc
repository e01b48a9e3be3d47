#include "labelforge/tuning.h"

#include <cmath>
#include <fstream>
#include <istream>

#include "labelforge/error.h"
#include "labelforge/kernels.h"
#include "labelforge/text.h"

namespace labelforge {

LoadedPairs ParseLabeledPairs(std::istream& in,
                              const NormalizationConfig& config) {
  LoadedPairs out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    LabeledPair pair;
    try {
      auto record = nlohmann::json::parse(line);
      pair.a = NormalizeText(record.at("a").get<std::string>(), config);
      pair.b = NormalizeText(record.at("b").get<std::string>(), config);
      pair.same_meaning = record.at("same_meaning").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kMalformedRecord, e.what(), line_no);
    } catch (const Error& e) {
      throw Error(ErrorKind::kMalformedRecord, e.what(), line_no);
    }
    if (pair.a == pair.b) {
      ++out.rejected_identical;
      continue;
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

LoadedPairs LoadLabeledPairs(const std::filesystem::path& path,
                             const NormalizationConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseLabeledPairs(in, config);
}

OperatingPoint MakeOperatingPoint(const SimilarityParams& params,
                                  std::size_t tp, std::size_t fp,
                                  std::size_t fn, std::size_t tn) {
  OperatingPoint p;
  p.params = params;
  p.true_positives = tp;
  p.false_positives = fp;
  p.false_negatives = fn;
  p.true_negatives = tn;
  if (tp + fp == 0) {
    p.precision = 1.0;
    p.vacuous_precision = true;
  } else {
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    p.recall = 0.0;
    p.no_positive_pairs = true;
  } else {
    p.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  const double denom = p.precision + p.recall;
  p.f1 = denom > 0.0 ? 2.0 * p.precision * p.recall / denom : 0.0;
  p.false_positive_rate =
      fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
  return p;
}

OperatingPoint EvaluateParams(const std::vector<LabeledPair>& pairs,
                              const SimilarityParams& params) {
  if (pairs.empty()) throw Error(ErrorKind::kEmptyPairSet, "");
  params.Validate();
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& pair : pairs) {
    const bool predicted = IsMatch(pair.a, pair.b, params);
    if (predicted && pair.same_meaning) ++tp;
    else if (predicted) ++fp;
    else if (pair.same_meaning) ++fn;
    else ++tn;
  }
  return MakeOperatingPoint(params, tp, fp, fn, tn);
}

SweepResult Sweep(const std::vector<LabeledPair>& pairs,
                  const std::vector<double>& tau_values,
                  const std::vector<double>& delta_values,
                  const std::vector<double>& gamma_values) {
  if (tau_values.empty() || delta_values.empty() || gamma_values.empty()) {
    throw Error(ErrorKind::kEmptyGrid, "");
  }
  if (pairs.empty()) throw Error(ErrorKind::kEmptyPairSet, "");
  for (double tau : tau_values) {
    for (double delta : delta_values) {
      for (double gamma : gamma_values) {
        SimilarityParams::With(tau, delta, gamma).Validate();
      }
    }
  }

  std::vector<kernels::TokenPair> spans;
  spans.reserve(pairs.size());
  for (const auto& p : pairs) spans.push_back({p.a, p.b});

  SweepResult result;
  for (double tau : tau_values) {
    for (double delta : delta_values) {
      // gamma does not enter the score, only the threshold.
      const auto scores = kernels::parallel::ScorePairs(
          spans, SimilarityParams::With(tau, delta, gamma_values.front()));
      for (double gamma : gamma_values) {
        std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          const bool predicted = scores[i].combined >= gamma;
          if (predicted && pairs[i].same_meaning) ++tp;
          else if (predicted) ++fp;
          else if (pairs[i].same_meaning) ++fn;
          else ++tn;
        }
        result.grid.push_back(MakeOperatingPoint(
            SimilarityParams::With(tau, delta, gamma), tp, fp, fn, tn));
      }
    }
  }
  result.pareto_front = ParetoFront(result.grid);
  return result;
}

std::vector<OperatingPoint> ParetoFront(const std::vector<OperatingPoint>& grid) {
  std::vector<OperatingPoint> front;
  for (const auto& p : grid) {
    bool dominated = false;
    for (const auto& q : grid) {
      if (q.precision >= p.precision && q.recall >= p.recall &&
          (q.precision > p.precision || q.recall > p.recall)) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  return front;
}

namespace {

// True when a should be preferred over b at equal feasibility.
bool Better(const OperatingPoint& a, const OperatingPoint& b) {
  if (a.f1 != b.f1) return a.f1 > b.f1;
  if (a.params.gamma != b.params.gamma) return a.params.gamma > b.params.gamma;
  if (a.params.tau != b.params.tau) return a.params.tau > b.params.tau;
  return a.params.delta < b.params.delta;
}

}  // namespace

OperatingPoint SelectOperatingPoint(const SweepResult& result,
                                    double min_precision, double min_recall) {
  const OperatingPoint* best = nullptr;
  for (const auto& p : result.grid) {
    if (p.precision < min_precision || p.recall < min_recall) continue;
    if (best == nullptr || Better(p, *best)) best = &p;
  }
  if (best == nullptr) {
    throw Error(ErrorKind::kNoFeasiblePoint,
                "no grid point reaches precision " +
                    std::to_string(min_precision) + " and recall " +
                    std::to_string(min_recall));
  }
  return *best;
}

std::vector<double> ParseGrid(std::string_view spec) {
  auto to_double = [&](std::string_view s) {
    std::string text(Trim(s));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (text.empty() || used != text.size()) {
      throw Error(ErrorKind::kInvalidParams,
                  "bad grid value '" + text + "' in '" + std::string(spec) + "'");
    }
    return v;
  };

  std::vector<double> out;
  if (auto dots = spec.find(".."); dots != std::string_view::npos) {
    auto colon = spec.find(':', dots);
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::kInvalidParams, "range needs ':step'");
    }
    const double lo = to_double(spec.substr(0, dots));
    const double hi = to_double(spec.substr(dots + 2, colon - dots - 2));
    const double step = to_double(spec.substr(colon + 1));
    if (!(step > 0.0) || hi < lo) {
      throw Error(ErrorKind::kInvalidParams, "bad range '" + std::string(spec) + "'");
    }
    const auto steps = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
      // Snap to 1e-9 so 0.5 + 9*0.05 prints and compares as 0.95.
      out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e9) / 1e9);
    }
    return out;
  }
  for (const auto& part : SplitOn(spec, ',')) {
    if (Trim(part).empty()) continue;
    out.push_back(to_double(part));
  }
  return out;
}

nlohmann::ordered_json OperatingPointToJson(const OperatingPoint& p) {
  nlohmann::ordered_json j;
  j["tau"] = p.params.tau;
  j["delta"] = p.params.delta;
  j["gamma"] = p.params.gamma;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  j["tpr"] = p.recall;
  j["fpr"] = p.false_positive_rate;
  j["tp"] = p.true_positives;
  j["fp"] = p.false_positives;
  j["fn"] = p.false_negatives;
  j["tn"] = p.true_negatives;
  j["vacuous_precision"] = p.vacuous_precision;
  j["no_positive_pairs"] = p.no_positive_pairs;
  return j;
}

nlohmann::ordered_json SweepToJson(const SweepResult& result) {
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const auto& p : result.grid) grid.push_back(OperatingPointToJson(p));
  nlohmann::ordered_json front = nlohmann::ordered_json::array();
  for (const auto& p : result.pareto_front) front.push_back(OperatingPointToJson(p));
  nlohmann::ordered_json j;
  j["grid"] = std::move(grid);
  j["pareto_front"] = std::move(front);
  return j;
}

}  // namespace labelforge
