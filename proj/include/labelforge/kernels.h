#pragma once

// Data-parallel inner loops of the pipeline. Every kernel exists twice: an
// OpenMP version used by the library, and a plain serial version kept as the
// reference the tests and benchmarks compare against. Both must produce
// identical results for identical inputs.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "labelforge/clustering.h"
#include "labelforge/normalize.h"
#include "labelforge/similarity.h"

namespace labelforge::kernels {

struct TokenPair {
  std::span<const Token> a;
  std::span<const Token> b;
};

namespace reference {

// nullopt where the sentence normalizes to nothing.
std::vector<std::optional<TokenSeq>> NormalizeAll(
    const std::vector<RawSentence>& sentences, const NormalizationConfig& config,
    const TypoFolder* folder);

bool MatchesAll(const NormalizedSentence& candidate,
                const std::vector<NormalizedSentence>& members,
                const SimilarityParams& params);

std::vector<SimilarityScore> ScorePairs(std::span<const TokenPair> pairs,
                                        const SimilarityParams& params);

// Row-major n x n matrix of combined scores.
std::vector<double> SimilarityMatrix(
    const std::vector<NormalizedSentence>& sentences,
    const SimilarityParams& params);

std::vector<std::vector<Cluster>> ClusterSections(
    std::vector<std::vector<NormalizedSentence>> sections,
    const SimilarityParams& params);

}  // namespace reference

namespace parallel {

std::vector<std::optional<TokenSeq>> NormalizeAll(
    const std::vector<RawSentence>& sentences, const NormalizationConfig& config,
    const TypoFolder* folder);

// Member checks are spread over threads once the cluster is large enough.
bool MatchesAll(const NormalizedSentence& candidate,
                const std::vector<NormalizedSentence>& members,
                const SimilarityParams& params);

std::vector<SimilarityScore> ScorePairs(std::span<const TokenPair> pairs,
                                        const SimilarityParams& params);

std::vector<double> SimilarityMatrix(
    const std::vector<NormalizedSentence>& sentences,
    const SimilarityParams& params);

std::vector<std::vector<Cluster>> ClusterSections(
    std::vector<std::vector<NormalizedSentence>> sections,
    const SimilarityParams& params);

}  // namespace parallel

int MaxThreads();

}  // namespace labelforge::kernels
