#include <exception>

#include "labelforge/error.h"
#include "labelforge/kernels.h"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace labelforge::kernels {
namespace {

// Below this many members the thread fan-out costs more than the checks.
constexpr std::size_t kParallelMemberThreshold = 64;

// OpenMP regions must not leak exceptions; the first one is kept and
// rethrown after the loop.
class ExceptionSlot {
 public:
  template <typename Fn>
  void Run(Fn&& fn) {
    try {
      fn();
    } catch (...) {
#pragma omp critical(labelforge_exception_slot)
      if (!error_) error_ = std::current_exception();
    }
  }
  void Rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

std::vector<std::optional<TokenSeq>> NormalizeAll(
    const std::vector<RawSentence>& sentences, const NormalizationConfig& config,
    const TypoFolder* folder) {
  std::vector<std::optional<TokenSeq>> out(sentences.size());
  ExceptionSlot slot;
  const auto n = static_cast<std::ptrdiff_t>(sentences.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slot.Run([&] {
      try {
        out[i] = NormalizeText(sentences[i].text, config, folder);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kEmptySentenceAfterNormalization) throw;
      }
    });
  }
  slot.Rethrow();
  return out;
}

bool MatchesAll(const NormalizedSentence& candidate,
                const std::vector<NormalizedSentence>& members,
                const SimilarityParams& params) {
  const auto n = static_cast<std::ptrdiff_t>(members.size());
  bool ok = true;
#pragma omp parallel for reduction(&& : ok) \
    if (members.size() >= kParallelMemberThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (ok) {
      ok = Similarity(candidate, members[i], params).combined >=
           params.cluster_gamma;
    }
  }
  return ok;
}

std::vector<SimilarityScore> ScorePairs(std::span<const TokenPair> pairs,
                                        const SimilarityParams& params) {
  std::vector<SimilarityScore> out(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = Similarity(pairs[i].a, pairs[i].b, params);
  }
  return out;
}

std::vector<double> SimilarityMatrix(
    const std::vector<NormalizedSentence>& sentences,
    const SimilarityParams& params) {
  const std::size_t n = sentences.size();
  std::vector<double> out(n * n, 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(n);
  // Upper triangle rows shrink, so hand them out dynamically.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
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
  std::vector<std::vector<Cluster>> out(sections.size());
  ExceptionSlot slot;
  const auto n = static_cast<std::ptrdiff_t>(sections.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slot.Run([&] { out[i] = ClusterSection(std::move(sections[i]), params); });
  }
  slot.Rethrow();
  return out;
}

}  // namespace parallel
}  // namespace labelforge::kernels
