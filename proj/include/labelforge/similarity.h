#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "labelforge/normalize.h"

namespace labelforge {

// tau: minimum prefix ratio for two words to partially match.
// delta: penalty per gap step in the alignment.
// gamma: sentence-level match threshold on the combined score.
// cluster_gamma: threshold used for cluster membership; defaults to gamma.
struct SimilarityParams {
  double tau = 0.75;
  double delta = 0.1;
  double gamma = 0.7;
  double cluster_gamma = 0.7;

  static SimilarityParams Defaults() { return {}; }
  static SimilarityParams With(double tau, double delta, double gamma) {
    return {tau, delta, gamma, gamma};
  }

  // Throws kInvalidParams unless tau in [0,1], delta >= 0, gamma and
  // cluster_gamma in (0,1].
  void Validate() const;

  bool operator==(const SimilarityParams&) const = default;
};

struct PrefixMatch {
  std::size_t prefix_len = 0;
  double rho = 0.0;
};

struct AlignmentResult {
  double score = 0.0;             // C[K,N]; may be negative
  std::size_t matched_words = 0;  // S-words on a diagonal step with rho > 0
  double ordered_sim = 0.0;       // max(0, score) / K
};

struct SimilarityScore {
  double unordered = 0.0;
  double ordered = 0.0;
  double combined = 0.0;
};

// Row-major (K+1) x (N+1) score table.
struct AlignmentTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> cells;

  double at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
};

std::size_t CommonPrefixLen(std::string_view a, std::string_view b);

// rho = prefix ratio when the ratio reaches tau and polarities agree, else 0.
PrefixMatch MatchPrefix(const Token& a, const Token& b, double tau);

// 2 * |multiset intersection| / (K + N), tokens compared by surface and
// polarity.
double DiceUnordered(std::span<const Token> s, std::span<const Token> t);

// Longest common subfix alignment of S against T. The recurrence is the
// published one, including its asymmetric gap comparison:
//   diag = C[i-1][j-1] + rho
//   if diag > C[i-1][j] and diag > C[i][j-1]:  C[i][j] = diag
//   elif C[i-1][j] + rho > C[i][j-1]:          C[i][j] = C[i-1][j] - delta
//   else:                                      C[i][j] = C[i][j-1] - delta
AlignmentResult LcfAlign(std::span<const Token> s, std::span<const Token> t,
                         const SimilarityParams& params,
                         AlignmentTable* table = nullptr);

// max over both argument orders of LcfAlign(...).ordered_sim.
double OrderedScore(std::span<const Token> s, std::span<const Token> t,
                    const SimilarityParams& params);

SimilarityScore Similarity(std::span<const Token> s, std::span<const Token> t,
                           const SimilarityParams& params);

// combined >= params.gamma.
bool IsMatch(std::span<const Token> s, std::span<const Token> t,
             const SimilarityParams& params);

inline SimilarityScore Similarity(const NormalizedSentence& s,
                                  const NormalizedSentence& t,
                                  const SimilarityParams& params) {
  return Similarity(s.tokens, t.tokens, params);
}

inline bool IsMatch(const NormalizedSentence& s, const NormalizedSentence& t,
                    const SimilarityParams& params) {
  return IsMatch(s.tokens, t.tokens, params);
}

}  // namespace labelforge
