#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "labelforge/ingest.h"
#include "labelforge/normalize.h"
#include "labelforge/tuning.h"

namespace labelforge {

// Paraphrase-group generator with known ground truth. Every group has a
// distinct head word followed by modifiers; variants perturb word suffixes,
// insert stopwords and drop modifiers. The head word is never dropped, so
// each group stays contiguous in lexicographic order.
struct SyntheticOptions {
  std::size_t groups = 20;
  std::size_t variants_per_group = 10;
  std::size_t modifiers_per_group = 4;
  double suffix_rate = 0.2;
  double stopword_rate = 0.3;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;

  // Throws kInvalidParams.
  void Validate() const;
};

struct SyntheticVariant {
  std::string text;
  std::size_t group = 0;
};

struct SyntheticPair {
  std::string a;
  std::string b;
  bool same_meaning = false;
};

struct SyntheticCorpus {
  std::vector<std::string> group_bases;   // unperturbed text per group
  std::vector<SyntheticVariant> variants; // group-major
};

SyntheticCorpus GenerateSynthetic(const SyntheticOptions& options);

// Half same-group pairs, half cross-group pairs, drawn independently of the
// variants in `corpus` but with the same perturbation model. Both sides of
// a pair differ after normalization with `config`.
std::vector<SyntheticPair> GenerateSyntheticPairs(const SyntheticOptions& options,
                                                  std::size_t count,
                                                  std::uint64_t seed,
                                                  const NormalizationConfig& config);

std::vector<LabeledPair> NormalizePairs(const std::vector<SyntheticPair>& pairs,
                                        const NormalizationConfig& config);

// One report per variant ("syn-00001", image "syn-00001.png"), the variant
// text as its lungs section.
Corpus SyntheticReports(const SyntheticCorpus& corpus);

nlohmann::ordered_json SyntheticPairToJson(const SyntheticPair& pair);

}  // namespace labelforge
