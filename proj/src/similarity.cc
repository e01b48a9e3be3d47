#include "labelforge/similarity.h"

#include <algorithm>
#include <cstdint>

#include "labelforge/error.h"

namespace labelforge {

void SimilarityParams::Validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(tau, 0.0, 1.0)) {
    throw Error(ErrorKind::kInvalidParams, "tau must lie in [0,1]");
  }
  if (!(delta >= 0.0)) {
    throw Error(ErrorKind::kInvalidParams, "delta must be >= 0");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::kInvalidParams, "gamma must lie in (0,1]");
  }
  if (!(cluster_gamma > 0.0 && cluster_gamma <= 1.0)) {
    throw Error(ErrorKind::kInvalidParams, "cluster_gamma must lie in (0,1]");
  }
}

std::size_t CommonPrefixLen(std::string_view a, std::string_view b) {
  const std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

PrefixMatch MatchPrefix(const Token& a, const Token& b, double tau) {
  PrefixMatch m;
  m.prefix_len = CommonPrefixLen(a.surface, b.surface);
  const std::size_t longest = std::max(a.surface.size(), b.surface.size());
  if (longest == 0 || a.negated != b.negated) return m;
  const double ratio =
      static_cast<double>(m.prefix_len) / static_cast<double>(longest);
  if (ratio >= tau) m.rho = ratio;
  return m;
}

double DiceUnordered(std::span<const Token> s, std::span<const Token> t) {
  if (s.empty() && t.empty()) return 0.0;
  std::vector<const Token*> a;
  std::vector<const Token*> b;
  a.reserve(s.size());
  b.reserve(t.size());
  for (const auto& x : s) a.push_back(&x);
  for (const auto& x : t) b.push_back(&x);
  auto less = [](const Token* x, const Token* y) { return *x < *y; };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  std::size_t common = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (*a[i] == *b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (*a[i] < *b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return 2.0 * static_cast<double>(common) /
         static_cast<double>(s.size() + t.size());
}

AlignmentResult LcfAlign(std::span<const Token> s, std::span<const Token> t,
                         const SimilarityParams& params, AlignmentTable* table) {
  enum : std::uint8_t { kDiag, kUp, kLeft };
  const std::size_t rows = s.size() + 1;
  const std::size_t cols = t.size() + 1;
  std::vector<double> c(rows * cols, 0.0);
  std::vector<std::uint8_t> move(rows * cols, kDiag);
  std::vector<double> rho(rows * cols, 0.0);

  for (std::size_t i = 1; i < rows; ++i) {
    for (std::size_t j = 1; j < cols; ++j) {
      const double r = MatchPrefix(s[i - 1], t[j - 1], params.tau).rho;
      const double diag = c[(i - 1) * cols + (j - 1)];
      const double up = c[(i - 1) * cols + j];
      const double left = c[i * cols + (j - 1)];
      const std::size_t at = i * cols + j;
      rho[at] = r;
      if (diag + r > up && diag + r > left) {
        c[at] = diag + r;
        move[at] = kDiag;
      } else if (up + r > left) {
        c[at] = up - params.delta;
        move[at] = kUp;
      } else {
        c[at] = left - params.delta;
        move[at] = kLeft;
      }
    }
  }

  AlignmentResult out;
  out.score = c.back();
  if (!s.empty()) {
    out.ordered_sim = std::max(0.0, out.score) / static_cast<double>(s.size());
  }
  std::size_t i = rows - 1;
  std::size_t j = cols - 1;
  while (i > 0 && j > 0) {
    const std::size_t at = i * cols + j;
    switch (move[at]) {
      case kDiag:
        if (rho[at] > 0.0) ++out.matched_words;
        --i;
        --j;
        break;
      case kUp:
        --i;
        break;
      default:
        --j;
        break;
    }
  }
  if (table != nullptr) {
    table->rows = rows;
    table->cols = cols;
    table->cells = std::move(c);
  }
  return out;
}

double OrderedScore(std::span<const Token> s, std::span<const Token> t,
                    const SimilarityParams& params) {
  return std::max(LcfAlign(s, t, params).ordered_sim,
                  LcfAlign(t, s, params).ordered_sim);
}

SimilarityScore Similarity(std::span<const Token> s, std::span<const Token> t,
                           const SimilarityParams& params) {
  SimilarityScore out;
  out.unordered = DiceUnordered(s, t);
  out.ordered = OrderedScore(s, t, params);
  out.combined = std::max(out.unordered, out.ordered);
  return out;
}

bool IsMatch(std::span<const Token> s, std::span<const Token> t,
             const SimilarityParams& params) {
  return Similarity(s, t, params).combined >= params.gamma;
}

}  // namespace labelforge
