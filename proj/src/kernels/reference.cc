#include "labelforge/error.h"
#include "labelforge/kernels.h"

namespace labelforge::kernels::reference {

std::vector<std::optional<TokenSeq>> NormalizeAll(
    const std::vector<RawSentence>& sentences, const NormalizationConfig& config,
    const TypoFolder* folder) {
  std::vector<std::optional<TokenSeq>> out(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    try {
      out[i] = NormalizeText(sentences[i].text, config, folder);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptySentenceAfterNormalization) throw;
    }
  }
  return out;
}

bool MatchesAll(const NormalizedSentence& candidate,
                const std::vector<NormalizedSentence>& members,
                const SimilarityParams& params) {
  for (const auto& m : members) {
    if (Similarity(candidate, m, params).combined < params.cluster_gamma) {
      return false;
    }
  }
  return true;
}

std::vector<SimilarityScore> ScorePairs(std::span<const TokenPair> pairs,
                                        const SimilarityParams& params) {
  std::vector<SimilarityScore> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(Similarity(p.a, p.b, params));
  return out;
}

std::vector<double> SimilarityMatrix(
    const std::vector<NormalizedSentence>& sentences,
    const SimilarityParams& params) {
  const std::size_t n = sentences.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = Similarity(sentences[i], sentences[i], params).combined;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = Similarity(sentences[i], sentences[j], params).combined;
      out[i * n + j] = v;
      out[j * n + i] = v;
    }
  }
  return out;
}

std::vector<std::vector<Cluster>> ClusterSections(
    std::vector<std::vector<NormalizedSentence>> sections,
    const SimilarityParams& params) {
  std::vector<std::vector<Cluster>> out;
  out.reserve(sections.size());
  for (auto& s : sections) {
    out.push_back(ClusterSectionWith(std::move(s), params, &MatchesAll));
  }
  return out;
}

}  // namespace labelforge::kernels::reference
